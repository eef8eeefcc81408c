//! C ABI over the contactnet library.
//!
//! Every fallible function returns a [`CnStatus`]. On failure the message is
//! kept per thread and can be fetched with [`cn_last_error`]. Handles are
//! opaque and released with their matching `_free` function; strings
//! returned by the library are released with [`cn_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use contactnet::graph::{build_network, homophily_fraction, Attribute, Cohort, ContactNetwork, Layer, Nomination};
use contactnet::ingest::{read_cohort, read_nominations};
use contactnet::logistic::fit_logistic;
use contactnet::nalgebra::DMatrix;
use contactnet::permutation::{homophily_permutation_test, NullMode, PermutationOptions};
use contactnet::stats::fisher_exact;
use contactnet::{Error, ErrorClass};

/// Status codes. Nonzero values mirror the command line exit codes where a
/// class exists.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnStatus {
    Ok = 0,
    Usage = 2,
    Ingestion = 3,
    Numeric = 4,
    Io = 5,
    NullPointer = 10,
    InvalidUtf8 = 11,
    Panic = 12,
}

/// Cohort plus its nominations.
pub struct CnCohort {
    cohort: Cohort,
    nominations: Vec<Nomination>,
}

/// One undirected layer network over a cohort's node set.
pub struct CnNetwork {
    network: ContactNetwork,
}

/// Summary of a homophily permutation test.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CnPermutationResult {
    pub observed: u64,
    pub eligible_edges: u64,
    pub n_sims: u64,
    pub null_mean: f64,
    pub null_sd: f64,
    pub z: f64,
    /// Two-sided normal-theory p-value.
    pub p_value: f64,
    /// Add-one upper-tail p-value.
    pub p_empirical: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> CnStatus {
    match err.class() {
        ErrorClass::Usage => CnStatus::Usage,
        ErrorClass::Ingestion => CnStatus::Ingestion,
        ErrorClass::Numeric => CnStatus::Numeric,
        ErrorClass::Io => CnStatus::Io,
    }
}

enum Failure {
    Lib(Error),
    Status(CnStatus, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CnStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CnStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            CnStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(CnStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(CnStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn cn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the calling thread's last error message, or NULL when the last
/// call succeeded. Release with `cn_string_free`.
#[no_mangle]
pub extern "C" fn cn_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Read a cohort file and its nominations file (CSV or JSON by extension).
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cn_cohort_load(
    cohort_path: *const c_char,
    nominations_path: *const c_char,
    out: *mut *mut CnCohort,
) -> CnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let cp = str_arg(cohort_path, "cohort_path")?;
        let np = str_arg(nominations_path, "nominations_path")?;
        let (cohort, _) = read_cohort(Path::new(cp))?;
        let (nominations, _) = read_nominations(Path::new(np), &cohort)?;
        *out = Box::into_raw(Box::new(CnCohort { cohort, nominations }));
        Ok(())
    })
}

/// # Safety
/// `c` must be NULL or a handle from `cn_cohort_load`, freed once.
#[no_mangle]
pub unsafe extern "C" fn cn_cohort_free(c: *mut CnCohort) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of participants; 0 for NULL.
///
/// # Safety
/// `c` must be NULL or a live cohort handle.
#[no_mangle]
pub unsafe extern "C" fn cn_cohort_len(c: *const CnCohort) -> usize {
    c.as_ref().map_or(0, |c| c.cohort.len())
}

/// Build the network of `layer` (`overall`, `physical`, `school`, `sports`,
/// `home` or `other`).
///
/// # Safety
/// `cohort` must be a live handle, `layer` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cn_network_build(
    cohort: *const CnCohort,
    layer: *const c_char,
    out: *mut *mut CnNetwork,
) -> CnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let c = ref_arg(cohort, "cohort")?;
        let layer: Layer = str_arg(layer, "layer")?.parse()?;
        let network = build_network(c.cohort.len(), &c.nominations, layer)?;
        *out = Box::into_raw(Box::new(CnNetwork { network }));
        Ok(())
    })
}

/// # Safety
/// `n` must be NULL or a handle from `cn_network_build`, freed once.
#[no_mangle]
pub unsafe extern "C" fn cn_network_free(n: *mut CnNetwork) {
    if !n.is_null() {
        drop(Box::from_raw(n));
    }
}

/// # Safety
/// `n` must be NULL or a live network handle.
#[no_mangle]
pub unsafe extern "C" fn cn_network_node_count(n: *const CnNetwork) -> usize {
    n.as_ref().map_or(0, |n| n.network.node_count())
}

/// # Safety
/// `n` must be NULL or a live network handle.
#[no_mangle]
pub unsafe extern "C" fn cn_network_edge_count(n: *const CnNetwork) -> usize {
    n.as_ref().map_or(0, |n| n.network.edge_count())
}

unsafe fn pair<'a>(
    cohort: *const CnCohort,
    network: *const CnNetwork,
) -> Result<(&'a CnCohort, &'a ContactNetwork), Failure> {
    let c = ref_arg(cohort, "cohort")?;
    let n = ref_arg(network, "network")?;
    if n.network.node_count() != c.cohort.len() {
        return Err(Error::Input("network was not built from this cohort".into()).into());
    }
    Ok((c, &n.network))
}

/// Percentage of edges with both endpoints observed on `attribute` that join equal values.
///
/// # Safety
/// Handles must be live, `attribute` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cn_homophily_fraction(
    cohort: *const CnCohort,
    network: *const CnNetwork,
    attribute: *const c_char,
    out: *mut f64,
) -> CnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let (c, net) = pair(cohort, network)?;
        let attr: Attribute = str_arg(attribute, "attribute")?.parse()?;
        *out = homophily_fraction(net, &c.cohort.column(attr)?)?;
        Ok(())
    })
}

/// Same-attribute edge count against `n_sims` relabelled replicates.
/// `restrict` and `mode` may be NULL; `mode` is `marginal_shuffle` (default)
/// or `probability_draw`.
///
/// # Safety
/// Handles must be live, strings NUL-terminated or NULL where allowed, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cn_permutation_test(
    cohort: *const CnCohort,
    network: *const CnNetwork,
    attribute: *const c_char,
    restrict: *const c_char,
    n_sims: usize,
    seed: u64,
    mode: *const c_char,
    out: *mut CnPermutationResult,
) -> CnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let (c, net) = pair(cohort, network)?;
        let attr: Attribute = str_arg(attribute, "attribute")?.parse()?;
        let restrict = opt_str_arg(restrict, "restrict")?;
        let mode = match opt_str_arg(mode, "mode")? {
            Some(m) => m.parse::<NullMode>()?,
            None => NullMode::default(),
        };
        let column = c.cohort.column(attr)?;
        let r = homophily_permutation_test(net, &column, restrict, &PermutationOptions { n_sims, seed, mode })?;
        *out = CnPermutationResult {
            observed: r.observed,
            eligible_edges: contactnet::graph::eligible_edge_count(net, &column) as u64,
            n_sims: r.n_sims as u64,
            null_mean: r.sims_summary.mean,
            null_sd: r.sims_summary.sd,
            z: r.z,
            p_value: r.p_value,
            p_empirical: r.p_empirical,
        };
        Ok(())
    })
}

/// Logistic regression by IRLS. `x` is row-major `n × p` and should contain
/// an intercept column if one is wanted; `y` holds 0/1 values. Writes `p`
/// coefficients and standard errors.
///
/// # Safety
/// `y` must point to `n` doubles, `x` to `n * p`, and both outputs to `p` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cn_fit_logistic(
    y: *const f64,
    x: *const f64,
    n: usize,
    p: usize,
    coefficients: *mut f64,
    std_errors: *mut f64,
) -> CnStatus {
    guard(|| {
        for (ptr, what) in [(y, "y"), (x, "x")] {
            if ptr.is_null() {
                return Err(null(what));
            }
        }
        if coefficients.is_null() || std_errors.is_null() {
            return Err(null("output buffer"));
        }
        let len = n.checked_mul(p).ok_or_else(|| Error::Config("n * p overflows".into()))?;
        let ys = std::slice::from_raw_parts(y, n);
        let xs = std::slice::from_raw_parts(x, len);
        let design = DMatrix::from_row_slice(n, p, xs);
        let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let fit = fit_logistic(ys, &design, &names)?;
        std::slice::from_raw_parts_mut(coefficients, p).copy_from_slice(&fit.coefficients);
        std::slice::from_raw_parts_mut(std_errors, p).copy_from_slice(&fit.std_errors);
        Ok(())
    })
}

/// Two-sided Fisher exact p-value for the table `[[a, b], [c, d]]`.
///
/// # Safety
/// `p_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cn_fisher_exact(a: u64, b: u64, c: u64, d: u64, p_value: *mut f64) -> CnStatus {
    guard(|| {
        *out_arg(p_value, "p_value")? = fisher_exact([[a, b], [c, d]]).p_value;
        Ok(())
    })
}
