//! C ABI over `pck-hdmr`.
//!
//! Models are opaque `PckModel` handles owned by the caller and released with
//! [`pck_model_free`]. Every entry point returns a [`PckStatus`]; on failure
//! the message is kept per thread and read back with
//! [`pck_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pck_hdmr::{bench, build, Backend, BudgetedFunction, BuildConfig, DesignSpace, Error, HdmrModel};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PckStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DimensionMismatch = 4,
    Json = 5,
    Io = 6,
    UnknownFunction = 7,
    BuildFailed = 8,
    Panic = 9,
}

/// Surrogate used for the component functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PckBackend {
    PcKriging = 0,
    Kriging = 1,
    Pce = 2,
}

/// Build settings. Start from [`pck_build_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PckBuildOptions {
    /// First-stage split coefficient in (0, 1).
    pub c: f64,
    /// Relative convergence tolerance.
    pub epsilon: f64,
    pub seed: u64,
    /// Soft cap on true-function evaluations; 0 means none.
    pub max_evals: u64,
    pub backend: PckBackend,
}

/// Opaque fitted model.
pub struct PckModel {
    inner: HdmrModel,
}

/// User function: `x` holds `dim` coordinates. Null is rejected.
pub type PckObjective = Option<extern "C" fn(x: *const f64, dim: usize, user_data: *mut c_void) -> f64>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: PckStatus, msg: impl Into<String>) -> PckStatus {
    set_error(msg);
    status
}

fn from_core(err: Error) -> PckStatus {
    let status = match &err {
        Error::DimensionMismatch { .. } => PckStatus::DimensionMismatch,
        Error::Json(_) => PckStatus::Json,
        Error::Io(_) => PckStatus::Io,
        Error::UnknownFunction(_) => PckStatus::UnknownFunction,
        Error::InvalidArgument(_) | Error::InvalidSpace(_) | Error::OutOfBounds { .. } => PckStatus::InvalidArgument,
        _ => PckStatus::BuildFailed,
    };
    fail(status, format!("{}: {err}", err.kind()))
}

fn guard(body: impl FnOnce() -> Result<(), PckStatus>) -> PckStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PckStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PckStatus::Panic, msg)
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), PckStatus> {
    if p.is_null() {
        Err(fail(PckStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, PckStatus> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(PckStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn model<'a>(m: *const PckModel) -> Result<&'a HdmrModel, PckStatus> {
    non_null(m, "model")?;
    Ok(&(*m).inner)
}

unsafe fn emit(out: *mut *mut PckModel, m: HdmrModel) -> Result<(), PckStatus> {
    *out = Box::into_raw(Box::new(PckModel { inner: m }));
    Ok(())
}

fn config(opts: Option<&PckBuildOptions>) -> BuildConfig {
    let Some(o) = opts else {
        return BuildConfig::default();
    };
    let backend = match o.backend {
        PckBackend::PcKriging => Backend::PcKriging,
        PckBackend::Kriging => Backend::Kriging,
        PckBackend::Pce => Backend::Pce,
    };
    BuildConfig {
        c: o.c,
        epsilon: o.epsilon,
        seed: o.seed,
        max_evals: (o.max_evals > 0).then_some(o.max_evals),
        ..BuildConfig::with_backend(backend)
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn pck_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn pck_build_options_default() -> PckBuildOptions {
    let d = BuildConfig::default();
    PckBuildOptions {
        c: d.c,
        epsilon: d.epsilon,
        seed: d.seed,
        max_evals: 0,
        backend: PckBackend::PcKriging,
    }
}

/// Fits a built-in benchmark such as `"table3/4"` or `"cantilever"`.
/// `opts` may be null for defaults.
///
/// # Safety
/// `name` must be a NUL-terminated string, `opts` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pck_model_fit_benchmark(
    name: *const c_char,
    opts: *const PckBuildOptions,
    out: *mut *mut PckModel,
) -> PckStatus {
    guard(|| {
        non_null(out, "out")?;
        let name = text(name, "name")?;
        let func = bench::lookup(name).map_err(from_core)?;
        let m = build(&func.budgeted(), &func.space, None, &config(opts.as_ref())).map_err(from_core)?;
        emit(out, m)
    })
}

struct Callback {
    f: extern "C" fn(*const f64, usize, *mut c_void) -> f64,
    user_data: *mut c_void,
}

// Evaluations run one at a time on the thread that called the fit.
unsafe impl Send for Callback {}
unsafe impl Sync for Callback {}

/// Fits a user function on the box `[lower, upper]` of `dim` dimensions.
/// `objective` is called on the calling thread, one point at a time.
///
/// # Safety
/// `lower` and `upper` must hold `dim` values; `user_data` is passed through
/// untouched; `opts` may be null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pck_model_fit_callback(
    dim: usize,
    lower: *const f64,
    upper: *const f64,
    objective: PckObjective,
    user_data: *mut c_void,
    opts: *const PckBuildOptions,
    out: *mut *mut PckModel,
) -> PckStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(lower, "lower")?;
        non_null(upper, "upper")?;
        let f = objective.ok_or_else(|| fail(PckStatus::NullPointer, "objective is null"))?;
        if dim == 0 {
            return Err(fail(PckStatus::InvalidArgument, "dim must be positive"));
        }
        let lo = std::slice::from_raw_parts(lower, dim).to_vec();
        let hi = std::slice::from_raw_parts(upper, dim).to_vec();
        let space = DesignSpace::new(lo, hi).map_err(from_core)?;
        let cb = Callback { f, user_data };
        let func = BudgetedFunction::new(dim, move |x: &[f64]| {
            let cb = &cb;
            (cb.f)(x.as_ptr(), x.len(), cb.user_data)
        });
        let m = build(&func, &space, None, &config(opts.as_ref())).map_err(from_core)?;
        emit(out, m)
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pck_model_from_json(json: *const c_char, out: *mut *mut PckModel) -> PckStatus {
    guard(|| {
        non_null(out, "out")?;
        let m = HdmrModel::from_json(text(json, "json")?).map_err(from_core)?;
        emit(out, m)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pck_model_from_file(path: *const c_char, out: *mut *mut PckModel) -> PckStatus {
    guard(|| {
        non_null(out, "out")?;
        let body = std::fs::read_to_string(text(path, "path")?).map_err(|e| from_core(e.into()))?;
        let m = HdmrModel::from_json(&body).map_err(from_core)?;
        emit(out, m)
    })
}

/// Serialized model; release with [`pck_string_free`].
///
/// # Safety
/// `m` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pck_model_to_json(m: *const PckModel, out: *mut *mut c_char) -> PckStatus {
    guard(|| {
        non_null(out, "out")?;
        let s = model(m)?.to_json().map_err(from_core)?;
        *out = CString::new(s)
            .map_err(|e| fail(PckStatus::Json, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or come from [`pck_model_to_json`].
#[no_mangle]
pub unsafe extern "C" fn pck_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `m` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn pck_model_free(m: *mut PckModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Input dimension, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pck_model_dim(m: *const PckModel) -> usize {
    m.as_ref().map_or(0, |m| m.inner.dim())
}

/// True-function evaluations spent on the fit, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pck_model_total_evals(m: *const PckModel) -> u64 {
    m.as_ref().map_or(0, |m| m.inner.total_evals)
}

/// # Safety
/// `x` must hold `dim` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn pck_model_predict(m: *const PckModel, x: *const f64, dim: usize, out: *mut f64) -> PckStatus {
    guard(|| {
        let m = model(m)?;
        non_null(x, "x")?;
        non_null(out, "out")?;
        *out = m.predict(std::slice::from_raw_parts(x, dim)).map_err(from_core)?;
        Ok(())
    })
}

/// Predicts `n` row-major points of `dim` coordinates into `out[n]`.
///
/// # Safety
/// `xs` must hold `n * dim` values and `out` room for `n`.
#[no_mangle]
pub unsafe extern "C" fn pck_model_predict_batch(
    m: *const PckModel,
    xs: *const f64,
    n: usize,
    dim: usize,
    out: *mut f64,
) -> PckStatus {
    guard(|| {
        let m = model(m)?;
        if n == 0 {
            return Ok(());
        }
        non_null(xs, "xs")?;
        non_null(out, "out")?;
        if dim != m.dim() {
            return Err(from_core(Error::DimensionMismatch { expected: m.dim(), got: dim }));
        }
        let flat = std::slice::from_raw_parts(xs, n * dim);
        let rows: Vec<Vec<f64>> = flat.chunks(dim).map(<[f64]>::to_vec).collect();
        let ys = m.predict_batch(&rows).map_err(from_core)?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&ys);
        Ok(())
    })
}

/// Writes the `dim * dim` row-major coupling matrix as 0/1 bytes.
///
/// # Safety
/// `out` must have room for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pck_model_coupling(m: *const PckModel, out: *mut u8, len: usize) -> PckStatus {
    guard(|| {
        let m = model(m)?;
        non_null(out, "out")?;
        let p = m.dim();
        if len != p * p {
            return Err(from_core(Error::DimensionMismatch { expected: p * p, got: len }));
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (i, row) in m.coupling.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                dst[i * p + j] = c as u8;
            }
        }
        Ok(())
    })
}
