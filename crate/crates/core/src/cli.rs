//! Command-line front end: one subcommand per experiment.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{self, CANTILEVER_NAMES};
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentConfig, Method, MetricRow};

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Coupling matrix of the second-order terms.
    Coupling,
    /// Replicated builds over the proportional coefficient C.
    CSweep,
    /// Accuracy of each method on the test functions.
    Accuracy,
    /// Evaluation counts against dimension.
    Cost,
    /// Cantilever limit state at the configured budgets.
    Cantilever,
    /// Ranked sensitivity indices of the cantilever model.
    Sensitivity,
    /// Build one model and write it as JSON.
    Fit,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Coupling => "coupling",
            Command::CSweep => "c-sweep",
            Command::Accuracy => "accuracy",
            Command::Cost => "cost",
            Command::Cantilever => "cantilever",
            Command::Sensitivity => "sensitivity",
            Command::Fit => "fit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Flags shared by every subcommand.
#[derive(Parser, Debug, Clone, Default)]
pub struct Flags {
    /// TOML file with experiment settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Comma-separated method names.
    #[arg(long, global = true, value_delimiter = ',')]
    pub method: Vec<String>,
    /// Comma-separated function names.
    #[arg(long, global = true, value_delimiter = ',')]
    pub function: Vec<String>,
    #[arg(long = "C", global = true, value_delimiter = ',')]
    pub c: Vec<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Comma-separated evaluation caps.
    #[arg(long, global = true, value_delimiter = ',')]
    pub budget: Vec<u64>,
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// Validation points per evaluation.
    #[arg(long, global = true)]
    pub validation: Option<usize>,
    /// Comma-separated dimensions for the cost study.
    #[arg(long, global = true, value_delimiter = ',')]
    pub dims: Vec<usize>,
    /// Monte Carlo draws for sensitivity indices.
    #[arg(long, global = true)]
    pub mc_samples: Option<usize>,
    /// Write wall_ms = 0 so reruns are byte-identical.
    #[arg(long, global = true)]
    pub no_timing: bool,
}

#[derive(Parser, Debug)]
#[command(name = "pck-hdmr", version, about = "PC-Kriging-HDMR surrogate modeling experiments")]
pub struct Invocation {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

/// Merges the config file and flag overrides.
pub fn resolve(flags: &Flags) -> Result<ExperimentConfig> {
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = flags.seed {
        cfg.seed = s;
    }
    if !flags.method.is_empty() {
        cfg.methods = flags.method.iter().map(|m| m.parse()).collect::<Result<_>>()?;
    }
    if !flags.function.is_empty() {
        cfg.functions = flags.function.clone();
    }
    match flags.c.as_slice() {
        [] => {}
        [c] => {
            cfg.build.c = *c;
            cfg.c_values = vec![*c];
        }
        cs => cfg.c_values = cs.to_vec(),
    }
    if let Some(e) = flags.epsilon {
        cfg.build.epsilon = e;
    }
    if !flags.budget.is_empty() {
        cfg.budgets = flags.budget.clone();
    }
    if let Some(r) = flags.replicates {
        cfg.replicates = Some(r);
    }
    if let Some(v) = flags.validation {
        cfg.validation = v;
    }
    if !flags.dims.is_empty() {
        cfg.dims = flags.dims.clone();
    }
    if let Some(n) = flags.mc_samples {
        cfg.mc_samples = n;
    }
    if flags.no_timing {
        cfg.timing = false;
    }
    cfg.check_functions()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Metadata<'a> {
    experiment: &'a str,
    version: &'a str,
    config_hash: String,
    config: &'a ExperimentConfig,
}

/// A finished table: header plus CSV lines, and the same rows as JSON.
pub struct Table {
    pub header: String,
    pub lines: Vec<String>,
    pub json: serde_json::Value,
}

impl Table {
    fn metric(rows: &[MetricRow]) -> Self {
        Table {
            header: MetricRow::HEADER.into(),
            lines: rows.iter().map(MetricRow::csv).collect(),
            json: serde_json::to_value(rows).expect("rows serialize"),
        }
    }
}

/// Runs one experiment and returns its table.
pub fn run(command: &Command, cfg: &ExperimentConfig) -> Result<Table> {
    let hash = cfg.hash();
    match command {
        Command::Coupling => {
            let (name, matrix) = experiments::run_coupling(cfg)?;
            let p = matrix.len();
            let header = std::iter::once("variable".to_string())
                .chain((1..=p).map(|j| format!("x{j}")))
                .chain(["function".into(), "seed".into(), "config_hash".into()])
                .collect::<Vec<_>>()
                .join(",");
            let lines = matrix
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    let cells: Vec<String> = row.iter().map(|&b| u8::from(b).to_string()).collect();
                    format!("x{},{},{},{},{}", i + 1, cells.join(","), name, cfg.seed, hash)
                })
                .collect();
            let json = serde_json::json!({
                "function": name,
                "seed": cfg.seed,
                "config_hash": hash,
                "matrix": matrix.iter().map(|r| r.iter().map(|&b| u8::from(b)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            });
            Ok(Table { header, lines, json })
        }
        Command::CSweep => Ok(Table::metric(&experiments::run_c_sweep(cfg)?)),
        Command::Accuracy => {
            let mut cfg = cfg.clone();
            if cfg.functions.is_empty() {
                cfg.functions = (1..=6).map(|k| format!("table3/{k}")).collect();
            }
            Ok(Table::metric(&experiments::run_accuracy(&cfg)?))
        }
        Command::Cost => {
            let rows = experiments::run_cost(cfg)?;
            Ok(Table {
                header: experiments::CostRow::HEADER.into(),
                lines: rows.iter().map(|r| r.csv()).collect(),
                json: serde_json::to_value(&rows).expect("rows serialize"),
            })
        }
        Command::Cantilever => Ok(Table::metric(&experiments::run_cantilever(cfg)?)),
        Command::Sensitivity => {
            let (_, report) = experiments::run_sensitivity(cfg)?;
            let mut lines = Vec::new();
            for (r, (i, s)) in report.ranked_first().into_iter().enumerate() {
                lines.push(format!("first-order,{},X{}({}),{},{},{}", r + 1, i + 1, CANTILEVER_NAMES[i], s, cfg.seed, hash));
            }
            for (r, ((i, j), s)) in report.ranked_pairs().into_iter().enumerate() {
                lines.push(format!(
                    "pairwise,{},X{}({}) X{}({}),{},{},{}",
                    r + 1,
                    i + 1,
                    CANTILEVER_NAMES[i],
                    j + 1,
                    CANTILEVER_NAMES[j],
                    s,
                    cfg.seed,
                    hash
                ));
            }
            Ok(Table {
                header: "table,rank,variables,index,seed,config_hash".into(),
                lines,
                json: serde_json::to_value(&report).expect("report serializes"),
            })
        }
        Command::Fit => {
            let name = cfg.functions.first().map_or("rosenbrock9", String::as_str);
            let func = bench::lookup(name)?;
            let method = cfg.methods.first().copied().unwrap_or(Method::PcKrigingHdmr);
            let backend = method
                .backend()
                .ok_or_else(|| Error::InvalidArgument("fit builds HDMR models only".into()))?;
            let mut b = cfg.build;
            b.seed = cfg.seed;
            b.surrogate.backend = backend;
            let model = experiments::fit_hdmr(&func, &b)?;
            let json: serde_json::Value = serde_json::from_str(&model.to_json()?)?;
            Ok(Table {
                header: String::new(),
                lines: Vec::new(),
                json,
            })
        }
    }
}

/// Renders a table in the requested format with its metadata.
pub fn render(command: &Command, cfg: &ExperimentConfig, table: &Table, format: Format) -> String {
    let meta = Metadata {
        experiment: command.name(),
        version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.hash(),
        config: cfg,
    };
    if *command == Command::Fit {
        return serde_json::to_string_pretty(&table.json).expect("model serializes") + "\n";
    }
    match format {
        Format::Csv => {
            let mut out = format!("# {}\n{}\n", serde_json::to_string(&meta).expect("metadata serializes"), table.header);
            for l in &table.lines {
                out.push_str(l);
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let doc = serde_json::json!({ "metadata": meta, "rows": table.json });
            serde_json::to_string_pretty(&doc).expect("rows serialize") + "\n"
        }
    }
}

/// Parses, runs and writes; errors come back for the caller to report.
pub fn execute<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let inv = Invocation::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            let _ = e.print();
            std::process::exit(0)
        }
        _ => Error::InvalidArgument(e.to_string()),
    })?;
    let cfg = resolve(&inv.flags)?;
    let table = run(&inv.command, &cfg)?;
    let text = render(&inv.command, &cfg, &table, inv.flags.format.unwrap_or_default());
    match &inv.flags.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// JSON error record printed on failure.
pub fn error_record(e: &Error) -> String {
    serde_json::json!({ "error": e.kind(), "message": e.to_string() }).to_string()
}

/// Process entry point; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match execute(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            match e {
                Error::InvalidArgument(_) | Error::UnknownFunction(_) | Error::UnknownMethod(_) => 2,
                _ => 1,
            }
        }
    }
}
