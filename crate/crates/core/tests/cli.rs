use std::process::{Command, Output};

use pck_hdmr::HdmrModel;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pck-hdmr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn unknown_function_fails_with_json_error() {
    let o = run(&["accuracy", "--function", "no-such-function"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "unknown_function");
    assert!(err["message"].as_str().unwrap().contains("no-such-function"));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_method_and_bad_flag_fail() {
    let o = run(&["accuracy", "--method", "svr-hdmr"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["accuracy", "--seed", "minus-one"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "invalid_argument");
}

#[test]
fn reruns_without_timing_are_byte_identical() {
    let args = [
        "accuracy", "--function", "table3/1", "--method", "pc-kriging-hdmr,kriging-hdmr",
        "--validation", "300", "--seed", "4", "--no-timing",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let meta: serde_json::Value = serde_json::from_str(text.lines().next().unwrap().trim_start_matches("# ")).unwrap();
    assert_eq!(meta["experiment"], "accuracy");
    assert_eq!(text.lines().nth(1).unwrap(), pck_hdmr::experiments::MetricRow::HEADER);
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 2);
    let hash = meta["config_hash"].as_str().unwrap();
    for r in rows {
        let cells: Vec<&str> = r.split(',').collect();
        assert_eq!(cells.len(), 13);
        assert_eq!(cells[10], "4");
        assert_eq!(cells[11], "0");
        assert_eq!(cells[12], hash);
    }
}

#[test]
fn c_sweep_has_replicate_and_median_rows() {
    let o = run(&["c-sweep", "--function", "table3/1", "--validation", "200", "--no-timing"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows = data_lines(&text);
    assert_eq!(rows.iter().filter(|r| r.starts_with("replicate,")).count(), 90);
    let medians: Vec<&&str> = rows.iter().filter(|r| r.starts_with("median,")).collect();
    assert_eq!(medians.len(), 9);
    let cs: Vec<f64> = medians.iter().map(|r| r.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert_eq!(cs, (1..=9).map(|k| k as f64 / 10.0).collect::<Vec<_>>());
}

#[test]
fn toml_config_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "functions = [\"table3/1\"]\nmethods = [\"pce-hdmr\"]\nseed = 17\nvalidation = 250\n\n[build]\nC = 0.4\n",
    )
    .unwrap();
    let out = dir.path().join("rows.json");
    let o = run(&[
        "accuracy",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["metadata"]["config"]["seed"], 17);
    assert_eq!(doc["metadata"]["config"]["build"]["C"], 0.4);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["method"], "pce-hdmr");
    assert_eq!(rows[0]["function"], "table3/1");
    assert_eq!(rows[0]["seed"], 17);
}

#[test]
fn fit_writes_a_loadable_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("model.json");
    let o = run(&["fit", "--function", "table3/1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = HdmrModel::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(m.dim(), 2);
    let f = pck_hdmr::bench::table3_function(1).unwrap();
    let local = pck_hdmr::experiments::fit_hdmr(&f, &pck_hdmr::BuildConfig::default()).unwrap();
    assert_eq!(m.total_evals, local.total_evals);
    for x in [[0.7, -1.3], [2.9, 2.9], [-3.0, 1.0]] {
        let (a, b) = (m.predict(&x).unwrap(), local.predict(&x).unwrap());
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn coupling_table_marks_only_the_cross_term() {
    let o = run(&["coupling", "--function", "table3/4", "--no-timing"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 10);
    for (i, r) in rows.iter().enumerate() {
        let cells: Vec<&str> = r.split(',').collect();
        for j in 0..10 {
            let want = if i == j || (i, j) == (0, 1) || (i, j) == (1, 0) { "1" } else { "0" };
            assert_eq!(cells[1 + j], want, "row {i} col {j}");
        }
    }
}
