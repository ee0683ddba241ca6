//! C ABI over the `suffreg` library.
//!
//! Objects are opaque heap handles created by `*_new`/producer functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`SuffregStatus`]; on failure a description is available from
//! [`suffreg_last_error_message`] on the same thread. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use suffreg::compress::{compress_suffstats, merge_suffstats};
use suffreg::estimate::fit;
use suffreg::io::{fit_to_json, read_suffstats, write_suffstats};
use suffreg::logistic::{compress_logistic, fit_logistic, LogisticOptions};
use suffreg::{
    ClusterLabels, ClusterStrategy, Covariance, CovarianceSpec, Error, FitResult, ObservationSet,
    SuffStatsTable, WeightKind,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuffregStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Input data violates an invariant (shape, weights, missing values).
    InvalidData = 3,
    /// Tables or files do not have compatible columns.
    SchemaMismatch = 4,
    /// The requested estimator needs information the input does not carry.
    Unsupported = 5,
    RankDeficient = 6,
    DidNotConverge = 7,
    Io = 8,
    /// A Rust panic was caught at the boundary.
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuffregWeightKind {
    Frequency = 0,
    Analytic = 1,
}

/// Covariance structures available on a sufficient-statistics table.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuffregCovariance {
    Homoskedastic = 0,
    Heteroskedastic = 1,
    /// Cluster-robust; the table must be keyed by cluster.
    ClusterWithin = 2,
}

/// Uncompressed rows.
pub struct SuffregObservations(ObservationSet);

/// A sufficient-statistics table.
pub struct SuffregTable(SuffStatsTable);

/// A fitted model.
pub struct SuffregFit(FitResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> SuffregStatus {
    match err {
        Error::RankDeficient { .. } | Error::NonPositiveDf { .. } => SuffregStatus::RankDeficient,
        Error::DidNotConverge { .. } => SuffregStatus::DidNotConverge,
        Error::SchemaMismatch(_) | Error::MissingColumn(_) | Error::Parse { .. } => SuffregStatus::SchemaMismatch,
        Error::UnavailableStatistic(_)
        | Error::MissingClusters
        | Error::RepresentationMismatch(_)
        | Error::Unsupported(_)
        | Error::NotBalanced => SuffregStatus::Unsupported,
        Error::Io(_) => SuffregStatus::Io,
        Error::InvalidArgument(_) => SuffregStatus::InvalidArgument,
        _ => SuffregStatus::InvalidData,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard<F>(f: F) -> SuffregStatus
where
    F: FnOnce() -> Result<(), (SuffregStatus, String)>,
{
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SuffregStatus::Ok,
        Ok(Err((status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_owned())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            SuffregStatus::Panic
        }
    }
}

fn lib(err: Error) -> (SuffregStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (SuffregStatus, String) {
    (SuffregStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (SuffregStatus, String) {
    (SuffregStatus::InvalidArgument, msg.into())
}

/// Borrows a handle, failing on null.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SuffregStatus, String)> {
    // SAFETY: the caller passes a pointer obtained from this library or null.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

/// Stores a new handle in `*out`.
unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), (SuffregStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: `out` is non-null and points to writable storage per the contract.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Reads `len` values, accepting a null pointer only when `len` is zero.
unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (SuffregStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: the caller guarantees `p` points to `len` readable values.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

/// Reads `len` column names, or generates `prefix0..` when `names` is null.
unsafe fn names(names: *const *const c_char, len: usize, prefix: &str) -> Result<Vec<String>, (SuffregStatus, String)> {
    if names.is_null() {
        return Ok((0..len).map(|i| format!("{prefix}{i}")).collect());
    }
    // SAFETY: non-null `names` points to `len` C strings per the contract.
    let ptrs = unsafe { slice(names, len, "names")? };
    ptrs.iter()
        .map(|&p| {
            if p.is_null() {
                return Err(null("column name"));
            }
            // SAFETY: each entry is a NUL-terminated string.
            unsafe { CStr::from_ptr(p) }
                .to_str()
                .map(str::to_owned)
                .map_err(|_| invalid("column name is not UTF-8"))
        })
        .collect()
}

unsafe fn path_arg(path: *const c_char) -> Result<String, (SuffregStatus, String)> {
    if path.is_null() {
        return Err(null("path"));
    }
    // SAFETY: non-null `path` is NUL-terminated per the contract.
    unsafe { CStr::from_ptr(path) }
        .to_str()
        .map(str::to_owned)
        .map_err(|_| invalid("path is not UTF-8"))
}

/// Message describing the last failed call on this thread, or null. The
/// string stays valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn suffreg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates observations from row-major `features` (n×p) and `outcomes`
/// (n×o). Name arrays may be null, giving `x0..` and `y0..`.
///
/// # Safety
/// Non-null pointers must reference arrays of the stated lengths; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn suffreg_observations_new(
    features: *const f64,
    n: usize,
    p: usize,
    feature_names: *const *const c_char,
    outcomes: *const f64,
    o: usize,
    outcome_names: *const *const c_char,
    out: *mut *mut SuffregObservations,
) -> SuffregStatus {
    guard(|| unsafe {
        let m = slice(features, n * p, "features")?;
        let y = slice(outcomes, n * o, "outcomes")?;
        let obs = ObservationSet::new(
            nalgebra::DMatrix::from_row_slice(n, p, m),
            names(feature_names, p, "x")?,
            nalgebra::DMatrix::from_row_slice(n, o, y),
            names(outcome_names, o, "y")?,
        )
        .map_err(lib)?;
        emit(out, SuffregObservations(obs))
    })
}

/// Attaches one weight per row.
///
/// # Safety
/// `obs` must be a live handle and `weights` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn suffreg_observations_set_weights(
    obs: *mut SuffregObservations,
    weights: *const f64,
    n: usize,
    kind: SuffregWeightKind,
) -> SuffregStatus {
    guard(|| unsafe {
        let handle = obs.as_mut().ok_or_else(|| null("observations"))?;
        let w = slice(weights, n, "weights")?.to_vec();
        let kind = match kind {
            SuffregWeightKind::Frequency => WeightKind::Frequency,
            SuffregWeightKind::Analytic => WeightKind::Analytic,
        };
        handle.0 = handle.0.clone().with_weights(w, kind).map_err(lib)?;
        Ok(())
    })
}

/// Attaches one integer cluster identifier per row.
///
/// # Safety
/// `obs` must be a live handle and `ids` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn suffreg_observations_set_clusters(
    obs: *mut SuffregObservations,
    ids: *const u64,
    n: usize,
) -> SuffregStatus {
    guard(|| unsafe {
        let handle = obs.as_mut().ok_or_else(|| null("observations"))?;
        let ids = slice(ids, n, "cluster ids")?;
        let labels = ClusterLabels::from_labels(ids.iter().map(u64::to_string));
        handle.0 = handle.0.clone().with_clusters(labels).map_err(lib)?;
        Ok(())
    })
}

/// Prepends a constant `intercept` feature.
///
/// # Safety
/// `obs` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn suffreg_observations_add_intercept(obs: *mut SuffregObservations) -> SuffregStatus {
    guard(|| unsafe {
        let handle = obs.as_mut().ok_or_else(|| null("observations"))?;
        handle.0 = handle.0.with_intercept();
        Ok(())
    })
}

/// # Safety
/// `obs` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn suffreg_observations_free(obs: *mut SuffregObservations) {
    if !obs.is_null() {
        // SAFETY: the handle came from Box::into_raw in this library.
        drop(unsafe { Box::from_raw(obs) });
    }
}

/// Compresses rows into sufficient statistics, keyed additionally by the
/// cluster label when `by_cluster` is true.
///
/// # Safety
/// `obs` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn suffreg_compress(
    obs: *const SuffregObservations,
    by_cluster: bool,
    out: *mut *mut SuffregTable,
) -> SuffregStatus {
    guard(|| unsafe {
        let obs = handle(obs, "observations")?;
        let t = compress_suffstats(&obs.0, by_cluster).map_err(lib)?;
        emit(out, SuffregTable(t))
    })
}

/// Sums two tables compressed from disjoint rows.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn suffreg_table_merge(
    a: *const SuffregTable,
    b: *const SuffregTable,
    out: *mut *mut SuffregTable,
) -> SuffregStatus {
    guard(|| unsafe {
        let (a, b) = (handle(a, "first table")?, handle(b, "second table")?);
        emit(out, SuffregTable(merge_suffstats(&a.0, &b.0).map_err(lib)?))
    })
}

/// Number of compressed rows G, or 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn suffreg_table_num_groups(table: *const SuffregTable) -> usize {
    // SAFETY: null or live per the contract.
    unsafe { table.as_ref() }.map_or(0, |t| t.0.num_groups())
}

/// Number of source rows Σñ, or 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn suffreg_table_num_observations(table: *const SuffregTable) -> u64 {
    // SAFETY: null or live per the contract.
    unsafe { table.as_ref() }.map_or(0, |t| t.0.num_observations())
}

/// # Safety
/// `table` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn suffreg_table_write_csv(table: *const SuffregTable, path: *const c_char) -> SuffregStatus {
    guard(|| unsafe {
        let t = handle(table, "table")?;
        write_suffstats(path_arg(path)?, &t.0).map_err(lib)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn suffreg_table_read_csv(path: *const c_char, out: *mut *mut SuffregTable) -> SuffregStatus {
    guard(|| unsafe {
        let t = read_suffstats(path_arg(path)?).map_err(lib)?;
        emit(out, SuffregTable(t))
    })
}

/// Prepends a constant `intercept` feature to a table.
///
/// # Safety
/// `table` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn suffreg_table_add_intercept(table: *mut SuffregTable) -> SuffregStatus {
    guard(|| unsafe {
        let t = table.as_mut().ok_or_else(|| null("table"))?;
        t.0 = t.0.with_intercept();
        Ok(())
    })
}

/// # Safety
/// `table` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn suffreg_table_free(table: *mut SuffregTable) {
    if !table.is_null() {
        // SAFETY: the handle came from Box::into_raw in this library.
        drop(unsafe { Box::from_raw(table) });
    }
}

/// Fits least squares with the requested covariance.
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn suffreg_fit(
    table: *const SuffregTable,
    covariance: SuffregCovariance,
    out: *mut *mut SuffregFit,
) -> SuffregStatus {
    guard(|| unsafe {
        let t = handle(table, "table")?;
        let spec = match covariance {
            SuffregCovariance::Homoskedastic => CovarianceSpec::Homoskedastic,
            SuffregCovariance::Heteroskedastic => CovarianceSpec::HeteroskedasticEhw,
            SuffregCovariance::ClusterWithin => CovarianceSpec::ClusterRobust(ClusterStrategy::WithinCluster),
        };
        emit(out, SuffregFit(fit(&t.0, spec).map_err(lib)?))
    })
}

/// Fits a logistic regression of the single 0/1 outcome.
///
/// # Safety
/// `obs` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn suffreg_fit_logistic(
    obs: *const SuffregObservations,
    tol: f64,
    max_iter: usize,
    out: *mut *mut SuffregFit,
) -> SuffregStatus {
    guard(|| unsafe {
        let obs = handle(obs, "observations")?;
        let stats = compress_logistic(&obs.0).map_err(lib)?;
        let result = fit_logistic(&stats, LogisticOptions { tol, max_iter }).map_err(lib)?;
        emit(out, SuffregFit(result))
    })
}

/// Number of coefficients per outcome, or 0 for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn suffreg_fit_num_coefficients(fit: *const SuffregFit) -> usize {
    // SAFETY: null or live per the contract.
    unsafe { fit.as_ref() }.map_or(0, |f| f.0.beta.nrows())
}

/// Copies the coefficients of `outcome` into `buf`, which holds `len` values.
///
/// # Safety
/// `fit` must be a live handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn suffreg_fit_coefficients(
    fit: *const SuffregFit,
    outcome: usize,
    buf: *mut f64,
    len: usize,
) -> SuffregStatus {
    guard(|| unsafe {
        let f = &handle(fit, "fit")?.0;
        if outcome >= f.beta.ncols() {
            return Err(invalid(format!("outcome {outcome} out of range")));
        }
        copy_out(f.beta.column(outcome).iter().copied(), f.beta.nrows(), buf, len)
    })
}

/// Copies the row-major p×p covariance of `outcome` into `buf`.
///
/// # Safety
/// `fit` must be a live handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn suffreg_fit_covariance(
    fit: *const SuffregFit,
    outcome: usize,
    buf: *mut f64,
    len: usize,
) -> SuffregStatus {
    guard(|| unsafe {
        let f = &handle(fit, "fit")?.0;
        let Covariance::Available(mats) = &f.covariance else {
            return Err((SuffregStatus::Unsupported, "covariance is not available from this table".into()));
        };
        let v = mats
            .get(outcome)
            .ok_or_else(|| invalid(format!("outcome {outcome} out of range")))?;
        let p = v.nrows();
        copy_out((0..p * p).map(|k| v[(k / p, k % p)]), p * p, buf, len)
    })
}

unsafe fn copy_out(
    values: impl Iterator<Item = f64>,
    count: usize,
    buf: *mut f64,
    len: usize,
) -> Result<(), (SuffregStatus, String)> {
    if len < count {
        return Err(invalid(format!("buffer holds {len} values, {count} needed")));
    }
    if buf.is_null() {
        return Err(null("buffer"));
    }
    // SAFETY: `buf` is writable for `len ≥ count` values per the contract.
    let dst = unsafe { std::slice::from_raw_parts_mut(buf, count) };
    for (d, v) in dst.iter_mut().zip(values) {
        *d = v;
    }
    Ok(())
}

/// The fit as a JSON document. Release it with [`suffreg_string_free`].
/// Returns null for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn suffreg_fit_to_json(fit: *const SuffregFit) -> *mut c_char {
    // SAFETY: null or live per the contract.
    let Some(f) = (unsafe { fit.as_ref() }) else {
        return ptr::null_mut();
    };
    let text = serde_json::to_string(&fit_to_json(&f.0, None)).unwrap_or_default();
    CString::new(text).map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn suffreg_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: the string came from CString::into_raw in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// # Safety
/// `fit` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn suffreg_fit_free(fit: *mut SuffregFit) {
    if !fit.is_null() {
        // SAFETY: the handle came from Box::into_raw in this library.
        drop(unsafe { Box::from_raw(fit) });
    }
}
