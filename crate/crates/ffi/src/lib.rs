//! C ABI over `deadcore` for one-dimensional problems.
//!
//! Every function returns a [`DcStatus`]; on failure a message is kept per
//! thread and can be read with [`dc_last_error_message`]. Problems and fields
//! are opaque handles owned by the caller and released with the matching
//! `*_free` function.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use deadcore::analysis::{classify_default, Verdict};
use deadcore::dirichlet::IterationControl;
use deadcore::eigen::principal_eigenpair;
use deadcore::grid::{Ball, Grid, GridFunction, WeightField, WeightSource};
use deadcore::operators::OperatorSpec;
use deadcore::solver::{solve, Init, ProblemSpec};
use deadcore::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    /// The result is usable but the residual tolerance was not met.
    NotConverged = 3,
    ConstructionFailed = 4,
    DomainError = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcOperator {
    Laplacian = 0,
    PucciPlus = 1,
    PucciMinus = 2,
    /// Uses `p`; `gamma` must equal `p - 2`.
    PLaplacian = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcWeight {
    /// The closed-form dead-core example weight, meant for `(-pi/2, pi)`.
    Example = 0,
    /// `sin(pi x)` with its negative part multiplied by `weight_param`.
    SinSplit = 1,
    /// The constant `weight_param`.
    Constant = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcInit {
    Zero = 0,
    Subsolution = 1,
    Supersolution = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcVerdict {
    Trivial = 0,
    DeadCore = 1,
    PositiveInterior = 2,
    PositivityCone = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DcProblemDesc {
    pub lo: f64,
    pub hi: f64,
    /// Interior nodes.
    pub n: usize,
    pub gamma: f64,
    pub q: f64,
    pub op: DcOperator,
    /// Ellipticity bounds, ignored by the Laplacian.
    pub lambda: f64,
    pub big_lambda: f64,
    pub p: f64,
    pub weight: DcWeight,
    pub weight_param: f64,
    /// Multiplies the whole weight.
    pub weight_scale: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DcSolveOptions {
    /// 0 selects the library default.
    pub max_steps: usize,
    /// Residual tolerance; 0 selects the library default.
    pub tolerance: f64,
    pub init: DcInit,
    /// Ball for [`DcInit::Subsolution`].
    pub ball_lo: f64,
    pub ball_hi: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DcSolveReport {
    pub residual_sup: f64,
    pub steps: usize,
    pub converged: bool,
    pub sup_norm: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DcClassification {
    pub verdict: DcVerdict,
    pub interior_min: f64,
    pub hopf_margin: f64,
    pub dead_core_nodes: usize,
}

/// Opaque problem handle.
pub struct DcProblem {
    spec: ProblemSpec,
}

/// Opaque grid function handle, boundary nodes included.
pub struct DcField {
    u: GridFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> DcStatus {
    match e {
        Error::Invalid(_) | Error::Usage(_) | Error::Parse(_) => DcStatus::InvalidArgument,
        Error::Domain { .. } => DcStatus::DomainError,
        Error::Construction(_) => DcStatus::ConstructionFailed,
        Error::Io(_) => DcStatus::Internal,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<DcStatus, (DcStatus, String)>) -> DcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            DcStatus::Internal
        }
    }
}

fn lib<T>(r: deadcore::Result<T>) -> Result<T, (DcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (DcStatus, String) {
    (DcStatus::NullPointer, format!("{what} is null"))
}

fn operator(d: &DcProblemDesc) -> deadcore::Result<OperatorSpec> {
    match d.op {
        DcOperator::Laplacian => OperatorSpec::laplacian(1),
        DcOperator::PucciPlus => OperatorSpec::pucci_plus(d.lambda, d.big_lambda),
        DcOperator::PucciMinus => OperatorSpec::pucci_minus(d.lambda, d.big_lambda),
        DcOperator::PLaplacian => OperatorSpec::p_laplacian(d.p),
    }
}

fn build(d: &DcProblemDesc) -> deadcore::Result<ProblemSpec> {
    let grid = Grid::new_1d(d.lo, d.hi, d.n)?;
    let source = match d.weight {
        DcWeight::Example => WeightSource::Example { gamma: d.gamma, q: d.q },
        DcWeight::SinSplit => WeightSource::SinSplit { s: d.weight_param },
        DcWeight::Constant => WeightSource::Constant { c: d.weight_param },
    };
    let source = if d.weight_scale != 1.0 { source.scaled(d.weight_scale) } else { source };
    let w = WeightField::sample(grid, source)?;
    let op = operator(d)?;
    if let Some(g) = op.effective_gamma() {
        if g != d.gamma {
            return Err(Error::Invalid(format!("p_laplacian with p={} needs gamma={g} (got {})", d.p, d.gamma)));
        }
    }
    ProblemSpec::new(grid, op, d.gamma, d.q, w)
}

fn control(max_steps: usize, tolerance: f64) -> IterationControl {
    let mut ctl = IterationControl::default();
    if max_steps > 0 {
        ctl.max_steps = max_steps;
    }
    if tolerance > 0.0 {
        ctl.tolerance = tolerance;
    }
    ctl
}

fn into_field(u: GridFunction) -> *mut DcField {
    Box::into_raw(Box::new(DcField { u }))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn dc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Validates `desc` and builds a problem on `[lo, hi]`.
///
/// # Safety
/// `desc` must point to a valid descriptor and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn dc_problem_new_1d(desc: *const DcProblemDesc, out: *mut *mut DcProblem) -> DcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let d = desc.as_ref().ok_or_else(|| null("desc"))?;
        let spec = lib(build(d))?;
        *out = Box::into_raw(Box::new(DcProblem { spec }));
        Ok(DcStatus::Ok)
    })
}

/// # Safety
/// `p` must be NULL or a handle from [`dc_problem_new_1d`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_problem_free(p: *mut DcProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Solves the problem. On `DC_STATUS_OK` or `DC_STATUS_NOT_CONVERGED` a field
/// is stored in `out` and, when `report` is non-NULL, the report is filled.
///
/// # Safety
/// `p` must be a live problem handle, `opts` NULL or a valid pointer, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dc_solve(
    p: *const DcProblem,
    opts: *const DcSolveOptions,
    out: *mut *mut DcField,
    report: *mut DcSolveReport,
) -> DcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        let (ctl, init) = match opts.as_ref() {
            None => (IterationControl::default(), Init::Supersolution),
            Some(o) => {
                let init = match o.init {
                    DcInit::Zero => Init::Zero,
                    DcInit::Supersolution => Init::Supersolution,
                    DcInit::Subsolution => {
                        if !(o.ball_lo < o.ball_hi) {
                            return Err((DcStatus::InvalidArgument, "ball_lo must be < ball_hi".into()));
                        }
                        Init::Subsolution(Ball::interval(o.ball_lo, o.ball_hi))
                    }
                };
                (control(o.max_steps, o.tolerance), init)
            }
        };
        let rep = lib(solve(&p.spec, init, &ctl))?;
        if let Some(r) = report.as_mut() {
            *r = DcSolveReport {
                residual_sup: rep.residual_sup,
                steps: rep.steps,
                converged: rep.converged(),
                sup_norm: rep.solution.sup_norm(),
            };
        }
        let converged = rep.converged();
        if !converged {
            set_error(format!("{} after {} steps (residual {:e})", rep.status.name(), rep.steps, rep.residual_sup));
        }
        *out = into_field(rep.solution);
        Ok(if converged { DcStatus::Ok } else { DcStatus::NotConverged })
    })
}

/// Principal eigenpair of the operator in `desc` on `[lo, hi]`; `q` and the
/// weight are ignored. The eigenfunction is normalised to sup-norm 1.
///
/// # Safety
/// `desc` must be valid; `lambda` and `phi` writable.
#[no_mangle]
pub unsafe extern "C" fn dc_eigen_1d(desc: *const DcProblemDesc, lambda: *mut f64, phi: *mut *mut DcField) -> DcStatus {
    guard(|| {
        if lambda.is_null() || phi.is_null() {
            return Err(null("output"));
        }
        *phi = ptr::null_mut();
        let d = desc.as_ref().ok_or_else(|| null("desc"))?;
        let grid = lib(Grid::new_1d(d.lo, d.hi, d.n))?;
        let pair = lib(principal_eigenpair(grid, &lib(operator(d))?, d.gamma, &IterationControl::default()))?;
        *lambda = pair.lambda_plus;
        let converged = pair.converged;
        if !converged {
            set_error(format!("eigen iteration stopped with residual {:e}", pair.residual));
        }
        *phi = into_field(pair.phi_plus);
        Ok(if converged { DcStatus::Ok } else { DcStatus::NotConverged })
    })
}

/// # Safety
/// `f` must be a live field handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dc_classify(f: *const DcField, out: *mut DcClassification) -> DcStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("field"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let c = classify_default(&f.u);
        *out = DcClassification {
            verdict: match c.verdict {
                Verdict::Trivial => DcVerdict::Trivial,
                Verdict::DeadCore => DcVerdict::DeadCore,
                Verdict::PositiveInterior => DcVerdict::PositiveInterior,
                Verdict::PositivityCone => DcVerdict::PositivityCone,
            },
            interior_min: c.interior_min,
            hopf_margin: c.hopf_margin,
            dead_core_nodes: c.dead_core_nodes.len(),
        };
        Ok(DcStatus::Ok)
    })
}

/// Number of nodes, boundary included; 0 for NULL.
///
/// # Safety
/// `f` must be NULL or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn dc_field_len(f: *const DcField) -> usize {
    f.as_ref().map_or(0, |f| f.u.values().len())
}

/// Copies up to `cap` node values into `buf` and stores the full length in
/// `len`. Returns `DC_STATUS_INVALID_ARGUMENT` when `cap` is too small.
///
/// # Safety
/// `buf` must have room for `cap` doubles; `f` must be live.
#[no_mangle]
pub unsafe extern "C" fn dc_field_values(f: *const DcField, buf: *mut f64, cap: usize, len: *mut usize) -> DcStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("field"))?;
        let v = f.u.values();
        if let Some(len) = len.as_mut() {
            *len = v.len();
        }
        if cap < v.len() {
            return Err((DcStatus::InvalidArgument, format!("buffer holds {cap} values, need {}", v.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(DcStatus::Ok)
    })
}

/// Node coordinates, same layout as [`dc_field_values`].
///
/// # Safety
/// As for [`dc_field_values`].
#[no_mangle]
pub unsafe extern "C" fn dc_field_coords(f: *const DcField, buf: *mut f64, cap: usize, len: *mut usize) -> DcStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("field"))?;
        let g = f.u.grid();
        if let Some(len) = len.as_mut() {
            *len = g.len();
        }
        if cap < g.len() {
            return Err((DcStatus::InvalidArgument, format!("buffer holds {cap} values, need {}", g.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        for k in 0..g.len() {
            *buf.add(k) = g.coord(k)[0];
        }
        Ok(DcStatus::Ok)
    })
}

/// # Safety
/// `f` must be NULL or a field handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dc_field_free(f: *mut DcField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}
