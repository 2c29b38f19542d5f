//! C ABI over the topocf library.
//!
//! Graphs are opaque handles created by `topocf_graph_*` constructors and
//! released with `topocf_graph_free`. Every fallible call returns a
//! `TopocfStatus`; on failure `topocf_last_error` describes what went wrong
//! on the calling thread. Strings returned by the library are freed with
//! `topocf_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::OnceLock;

use topocf::characteristics::{compute_vector, Characteristic, CharacteristicsConfig};
use topocf::explain::{fit_ols_with, DesignMatrix, RankPolicy};
use topocf::graph::{ingest, largest_connected_component, BipartiteGraph};
use topocf::pipeline::{run, Command, ExperimentConfig, RunOptions};
use topocf::sampling::{SamplingPlan, Strategy};
use topocf::Error;

/// Number of entries written by `topocf_characteristics`.
pub const TOPOCF_NUM_CHARACTERISTICS: usize = 11;

/// Strategy mask bits for `topocf_sample`.
pub const TOPOCF_NODE_DROPOUT: u32 = 1;
pub const TOPOCF_EDGE_DROPOUT: u32 = 2;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopocfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    DegenerateSample = 5,
    RankDeficient = 6,
    Io = 7,
    Config = 8,
    /// The run finished but at least one cell failed.
    PartialFailure = 9,
    Other = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopocfCommand {
    Sample = 0,
    Characterize = 1,
    Train = 2,
    Explain = 3,
    Rq2 = 4,
    Report = 5,
    RunAll = 6,
}

/// Opaque bipartite interaction graph.
pub struct TopocfGraph(BipartiteGraph);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Fail(TopocfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::NoInteractions | Error::MalformedLine { .. } | Error::Parse { .. } => TopocfStatus::Parse,
            Error::DegenerateSample(_) => TopocfStatus::DegenerateSample,
            Error::RankDeficient(_) => TopocfStatus::RankDeficient,
            Error::Io { .. } => TopocfStatus::Io,
            Error::Config(_) => TopocfStatus::Config,
            Error::InvalidArgument(_)
            | Error::InsufficientPool { .. }
            | Error::ProjectionCap { .. }
            | Error::ZeroVariance(_)
            | Error::TooFewRows { .. } => TopocfStatus::InvalidArgument,
            _ => TopocfStatus::Other,
        };
        Fail(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TopocfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TopocfStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TopocfStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(TopocfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(TopocfStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn graph<'a>(g: *const TopocfGraph) -> Result<&'a BipartiteGraph, Fail> {
    g.as_ref().map(|g| &g.0).ok_or_else(|| null("graph"))
}

unsafe fn put_graph(out: *mut *mut TopocfGraph, g: BipartiteGraph) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(TopocfGraph(g)));
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn topocf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn topocf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Label of characteristic `index` in reporting order, or NULL when out of
/// range. The string is static.
#[no_mangle]
pub extern "C" fn topocf_characteristic_label(index: usize) -> *const c_char {
    static LABELS: OnceLock<Vec<CString>> = OnceLock::new();
    let labels = LABELS.get_or_init(|| {
        Characteristic::ALL
            .iter()
            .map(|c| CString::new(c.label()).expect("labels have no NUL"))
            .collect()
    });
    labels.get(index).map_or(ptr::null(), |l| l.as_ptr())
}

/// Parses a `user<TAB>item` interaction log.
///
/// # Safety
/// `tsv` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn topocf_graph_from_tsv(tsv: *const c_char, out: *mut *mut TopocfGraph) -> TopocfStatus {
    guard(|| {
        let g = ingest(text(tsv, "tsv")?)?;
        put_graph(out, g)
    })
}

/// # Safety
/// `g` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn topocf_graph_free(g: *mut TopocfGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn topocf_graph_num_users(g: *const TopocfGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_users())
}

/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn topocf_graph_num_items(g: *const TopocfGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_items())
}

/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn topocf_graph_num_edges(g: *const TopocfGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_edges())
}

/// The graph as a `user<TAB>item` log; free with `topocf_string_free`.
/// NULL when `g` is NULL.
///
/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn topocf_graph_to_tsv(g: *const TopocfGraph) -> *mut c_char {
    g.as_ref()
        .and_then(|g| CString::new(g.0.to_tsv()).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `s` must be NULL or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn topocf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Largest connected component as a new handle.
///
/// # Safety
/// `g` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn topocf_graph_largest_component(
    g: *const TopocfGraph,
    out: *mut *mut TopocfGraph,
) -> TopocfStatus {
    guard(|| {
        let lcc = largest_connected_component(graph(g)?);
        put_graph(out, lcc)
    })
}

/// Writes the eleven characteristics in reporting order to `out`; an
/// undefined characteristic is written as NaN.
///
/// # Safety
/// `g` must be a live handle and `out` must hold
/// `TOPOCF_NUM_CHARACTERISTICS` doubles.
#[no_mangle]
pub unsafe extern "C" fn topocf_characteristics(g: *const TopocfGraph, out: *mut f64) -> TopocfStatus {
    guard(|| {
        let g = graph(g)?;
        if out.is_null() {
            return Err(null("output array"));
        }
        let v = compute_vector(g, &CharacteristicsConfig::default())?;
        let out = std::slice::from_raw_parts_mut(out, TOPOCF_NUM_CHARACTERISTICS);
        for (slot, x) in out.iter_mut().zip(v.values()) {
            *slot = x.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Draws sample `sample_id` of the plan seeded by `master_seed`. The
/// strategy mask combines `TOPOCF_NODE_DROPOUT` and `TOPOCF_EDGE_DROPOUT`.
/// `out_mu` may be NULL.
///
/// # Safety
/// `g` must be a live handle, `out` a writable pointer and `out_mu` NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn topocf_sample(
    g: *const TopocfGraph,
    master_seed: u64,
    sample_id: u64,
    mu_min: f64,
    mu_max: f64,
    strategies: u32,
    out: *mut *mut TopocfGraph,
    out_mu: *mut f64,
) -> TopocfStatus {
    guard(|| {
        let g = graph(g)?;
        let mut plan = SamplingPlan::new(1, master_seed);
        plan.mu_range = (mu_min, mu_max);
        plan.strategies = [
            (TOPOCF_NODE_DROPOUT, Strategy::NodeDropout),
            (TOPOCF_EDGE_DROPOUT, Strategy::EdgeDropout),
        ]
        .into_iter()
        .filter(|(bit, _)| strategies & bit != 0)
        .map(|(_, s)| s)
        .collect();
        if plan.strategies.is_empty() {
            return Err(Fail(TopocfStatus::InvalidArgument, "empty strategy mask".into()));
        }
        if !(mu_min <= mu_max) || !(0.0..1.0).contains(&mu_min) || !(0.0..1.0).contains(&mu_max) {
            return Err(Fail(TopocfStatus::InvalidArgument, format!("bad dropout range [{mu_min}, {mu_max}]")));
        }
        let s = plan.sample_one(g, sample_id)?;
        if !out_mu.is_null() {
            *out_mu = s.spec.mu;
        }
        put_graph(out, s.graph)
    })
}

/// Ordinary least squares of `y` on the `rows x cols` row-major matrix `x`
/// plus an intercept. Output arrays hold `cols + 1` values, intercept first;
/// aliased columns (only with `drop_aliased`) come back as NaN. Every output
/// pointer except `out_estimates` may be NULL.
///
/// # Safety
/// `x` must hold `rows * cols` doubles, `y` `rows` doubles, and each non-NULL
/// output array `cols + 1` doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn topocf_fit_ols(
    x: *const f64,
    rows: usize,
    cols: usize,
    y: *const f64,
    standardize: bool,
    drop_aliased: bool,
    out_estimates: *mut f64,
    out_std_errors: *mut f64,
    out_p_values: *mut f64,
    out_r2: *mut f64,
    out_adj_r2: *mut f64,
) -> TopocfStatus {
    guard(|| {
        if x.is_null() || y.is_null() || out_estimates.is_null() {
            return Err(null("input or estimate array"));
        }
        let xs = std::slice::from_raw_parts(x, rows * cols);
        let ys = std::slice::from_raw_parts(y, rows).to_vec();
        let names = (0..cols).map(|j| format!("x{j}")).collect();
        let data = xs.chunks(cols.max(1)).take(rows).map(<[f64]>::to_vec).collect();
        let design = DesignMatrix::from_rows(names, data, (0..rows as u64).collect(), standardize)?;
        let policy = if drop_aliased { RankPolicy::DropAliased } else { RankPolicy::Error };
        let fit = fit_ols_with(&design, &ys, policy)?;
        let rows_out = std::iter::once(&fit.intercept).chain(&fit.coefficients);
        for (j, r) in rows_out.enumerate() {
            *out_estimates.add(j) = r.estimate;
            if !out_std_errors.is_null() {
                *out_std_errors.add(j) = r.std_err;
            }
            if !out_p_values.is_null() {
                *out_p_values.add(j) = r.p;
            }
        }
        if !out_r2.is_null() {
            *out_r2 = fit.r2;
        }
        if !out_adj_r2.is_null() {
            *out_adj_r2 = fit.adj_r2;
        }
        Ok(())
    })
}

/// Runs the pipeline from flat `key = value` configuration text. Returns
/// `TOPOCF_STATUS_PARTIAL_FAILURE` when some cells failed; details are in
/// the output directory's ledger.
///
/// # Safety
/// `config` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn topocf_run(config: *const c_char, command: TopocfCommand, resume: bool) -> TopocfStatus {
    guard(|| {
        let mut cfg = ExperimentConfig::parse(text(config, "config")?)?;
        cfg.apply_env();
        let command = match command {
            TopocfCommand::Sample => Command::Sample,
            TopocfCommand::Characterize => Command::Characterize,
            TopocfCommand::Train => Command::Train,
            TopocfCommand::Explain => Command::Explain,
            TopocfCommand::Rq2 => Command::Rq2,
            TopocfCommand::Report => Command::Report,
            TopocfCommand::RunAll => Command::RunAll,
        };
        let outcome = run(&cfg, command, RunOptions { resume })?;
        match outcome.failed() {
            0 => Ok(()),
            n => Err(Fail(TopocfStatus::PartialFailure, format!("{n} cells failed"))),
        }
    })
}
