//! C ABI over the `dpsynth` core.
//!
//! Tables are opaque handles owned by the caller and released with
//! `dps_table_free`. Every fallible call returns a `DpsStatus`; on failure the
//! message is kept per thread and read back with `dps_last_error_message`.
//! Strings returned by the library are released with `dps_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dpsynth::eval::{self, AttackConfig, LogisticConfig};
use dpsynth::tabular::{self, Schema, SplitSpec, Table};
use dpsynth::{copula, Error, ErrorKind, GenConfig, ModelKind};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpsStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Data = 3,
    Io = 4,
    Panic = 5,
}

/// Opaque table handle.
pub struct DpsTable {
    inner: Table,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> DpsStatus {
    match err.kind() {
        ErrorKind::Config => DpsStatus::Config,
        ErrorKind::Data => DpsStatus::Data,
        ErrorKind::Io => DpsStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DpsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DpsStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            DpsStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            DpsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Core(Error::InvalidArgument(format!("{what} is not valid UTF-8"))))
}

unsafe fn opt_str_arg<'a>(
    p: *const c_char,
    what: &'static str,
) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn table_arg<'a>(p: *const DpsTable, what: &'static str) -> Result<&'a Table, Failure> {
    p.as_ref().map(|t| &t.inner).ok_or(Failure::Null(what))
}

unsafe fn slice_arg<'a>(
    p: *const f64,
    len: usize,
    what: &'static str,
) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

fn into_handle(table: Table) -> *mut DpsTable {
    Box::into_raw(Box::new(DpsTable { inner: table }))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::Core(Error::InvalidData("output contains a NUL byte".into())))
}

/// Load a CSV file. `schema_path` may be null to infer the schema.
///
/// # Safety
/// `path` and a non-null `schema_path` must be NUL-terminated strings; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn dps_table_load_csv(
    path: *const c_char,
    schema_path: *const c_char,
    out: *mut *mut DpsTable,
) -> DpsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let schema = opt_str_arg(schema_path, "schema_path")?
            .map(Schema::load)
            .transpose()?;
        *out = into_handle(tabular::load_csv(path, schema.as_ref())?);
        Ok(())
    })
}

/// Release a table. Null is ignored.
///
/// # Safety
/// `table` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dps_table_free(table: *mut DpsTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Row count, or 0 for null.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dps_table_rows(table: *const DpsTable) -> usize {
    table.as_ref().map_or(0, |t| t.inner.n_rows())
}

/// Column count, or 0 for null.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dps_table_cols(table: *const DpsTable) -> usize {
    table.as_ref().map_or(0, |t| t.inner.n_cols())
}

/// Write a table as CSV with its header.
///
/// # Safety
/// `table` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dps_table_write_csv(
    table: *const DpsTable,
    path: *const c_char,
) -> DpsStatus {
    guard(|| {
        let table = table_arg(table, "table")?;
        table.write_csv(str_arg(path, "path")?)?;
        Ok(())
    })
}

/// Seeded row-disjoint split into three new tables.
///
/// # Safety
/// `table` must be a live handle; the three out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn dps_split(
    table: *const DpsTable,
    train_fraction: f64,
    control_fraction: f64,
    test_fraction: f64,
    seed: u64,
    train_out: *mut *mut DpsTable,
    control_out: *mut *mut DpsTable,
    test_out: *mut *mut DpsTable,
) -> DpsStatus {
    guard(|| {
        let outs = [
            out_arg(train_out, "train_out")?,
            out_arg(control_out, "control_out")?,
            out_arg(test_out, "test_out")?,
        ];
        let table = table_arg(table, "table")?;
        let spec = SplitSpec::new(train_fraction, control_fraction, test_fraction, seed)?;
        let parts = tabular::split(table, &spec)?;
        let [a, b, c] = outs;
        *a = into_handle(parts.train);
        *b = into_handle(parts.control);
        *c = into_handle(parts.test);
        Ok(())
    })
}

/// Fit `model` ("npc", "dpnpc", "dpcopula" or "dphist") on `table` and
/// sample `n` rows. `epsilon` may be null for the non-private model.
///
/// # Safety
/// `table` must be a live handle, `model` a NUL-terminated string, `epsilon`
/// null or readable, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dps_generate(
    table: *const DpsTable,
    model: *const c_char,
    epsilon: *const f64,
    bins: usize,
    n: usize,
    seed: u64,
    out: *mut *mut DpsTable,
) -> DpsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let table = table_arg(table, "table")?;
        let kind: ModelKind = str_arg(model, "model")?.parse()?;
        let config = GenConfig::new(n, epsilon.as_ref().copied(), seed).with_bins(bins);
        *out = into_handle(dpsynth::generate(table, &config, kind)?.table);
        Ok(())
    })
}

/// Privacy, fidelity and (when `target` and `test` are given) utility
/// scores as a JSON object written to `json_out`.
///
/// # Safety
/// Table arguments must be live handles (`test` may be null), `target` null
/// or NUL-terminated, and `json_out` writable. Free the string with
/// `dps_string_free`.
#[no_mangle]
pub unsafe extern "C" fn dps_evaluate(
    train: *const DpsTable,
    control: *const DpsTable,
    synthetic: *const DpsTable,
    test: *const DpsTable,
    target: *const c_char,
    attacks: usize,
    tolerance: f64,
    alpha: f64,
    seed: u64,
    json_out: *mut *mut c_char,
) -> DpsStatus {
    guard(|| {
        let json_out = out_arg(json_out, "json_out")?;
        *json_out = ptr::null_mut();
        let train = table_arg(train, "train")?;
        let control = table_arg(control, "control")?;
        let synthetic = table_arg(synthetic, "synthetic")?;
        let target = opt_str_arg(target, "target")?;
        let config = AttackConfig {
            attacks,
            tolerance,
            alpha,
            k: 1,
            seed,
        };
        let privacy = eval::privacy_risk(train, control, synthetic, &config)?;
        let fidelity = eval::avg_ks(train, synthetic)?;
        let utility = match (target, test.as_ref()) {
            (Some(t), Some(test)) => {
                let cfg = LogisticConfig {
                    seed,
                    ..LogisticConfig::default()
                };
                Some(eval::utility_score(train, synthetic, &test.inner, t, &cfg)?)
            }
            _ => None,
        };
        let value =
            serde_json::json!({ "privacy": privacy, "utility": utility, "fidelity": fidelity });
        *json_out = into_c_string(value.to_string())?;
        Ok(())
    })
}

/// Two-sample Kolmogorov-Smirnov statistic.
///
/// # Safety
/// `a` and `b` must point to `a_len` and `b_len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dps_ks_distance(
    a: *const f64,
    a_len: usize,
    b: *const f64,
    b_len: usize,
    out: *mut f64,
) -> DpsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = eval::ks_distance(slice_arg(a, a_len, "a")?, slice_arg(b, b_len, "b")?)?;
        Ok(())
    })
}

/// Kendall's tau between two equal-length samples.
///
/// # Safety
/// `x` and `y` must point to `len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dps_kendall_tau(
    x: *const f64,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> DpsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = copula::kendall_tau(slice_arg(x, len, "x")?, slice_arg(y, len, "y")?)?;
        Ok(())
    })
}

/// Wilson score centre and half-width of an attack success rate.
///
/// # Safety
/// `r_out` and `delta_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dps_wilson_risk(
    successes: usize,
    attempts: usize,
    alpha: f64,
    r_out: *mut f64,
    delta_out: *mut f64,
) -> DpsStatus {
    guard(|| {
        let r_out = out_arg(r_out, "r_out")?;
        let delta_out = out_arg(delta_out, "delta_out")?;
        let interval = eval::wilson_risk(successes, attempts, alpha)?;
        *r_out = interval.r;
        *delta_out = interval.delta;
        Ok(())
    })
}

/// Matthews correlation coefficient of a confusion matrix.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dps_mcc(tp: u64, tn: u64, fp: u64, fn_: u64, out: *mut f64) -> DpsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = eval::mcc(tp, tn, fp, fn_)?;
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn dps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Release a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
