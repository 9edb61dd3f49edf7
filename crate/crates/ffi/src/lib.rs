//! C ABI for the two-step transport library.
//!
//! Conventions:
//! - Handles (`TsMeasure`, `TsSolution`) are opaque; create/free in pairs.
//! - Functions returning a pointer return null on failure; functions
//!   returning [`TsStatus`] return a nonzero code. Either way the
//!   thread-local message from [`ts_last_error`] describes the failure.
//! - Buffers are caller-allocated, row-major, `len × dim` doubles.
//! - Every entry point catches panics; nothing unwinds across the boundary.
//!
//! The committed header lives at `include/twostep.h`; build with the
//! `generate-header` feature to regenerate it via cbindgen.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use twostep::conditions::{check_h1, check_h2, check_h2c, H2Mode, SampleRegion};
use twostep::measures::{read_measure_csv, wasserstein2, DiscreteMeasure};
use twostep::ot::MapMode;
use twostep::potentials::lookup;
use twostep::twostep::{solve, SolveConfig, SolverChoice, TwoStepProblem, TwoStepSolution};
use twostep::Error;

/// Status codes of the C API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    TsOk = 0,
    /// Bad arguments: null pointers, unknown names, malformed specs.
    TsErrInvalid = 1,
    /// Mass balance violated between the two measures.
    TsErrBalance = 2,
    /// Solver-level failure (non-convergence, conditioning, size cap).
    TsErrSolver = 3,
    /// Singular kernel or non-finite evaluation.
    TsErrSingular = 4,
    /// File I/O or parsing failure.
    TsErrIo = 5,
    /// A panic was caught at the boundary.
    TsErrPanic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> TsStatus {
    match err {
        Error::Balance { .. } => TsStatus::TsErrBalance,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => TsStatus::TsErrIo,
        Error::Singularity { .. } | Error::NonFinite { .. } => TsStatus::TsErrSingular,
        Error::Invalid(_)
        | Error::UnknownPotential(_)
        | Error::Config(_)
        | Error::Dimension { .. } => TsStatus::TsErrInvalid,
        _ => TsStatus::TsErrSolver,
    }
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ts_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Opaque discrete measure.
pub struct TsMeasure(DiscreteMeasure);

/// Opaque two-step solution.
pub struct TsSolution {
    solution: TwoStepSolution,
    n: usize,
    dim: usize,
}

fn guard<T, F: FnOnce() -> Result<T, Error>>(f: F) -> Result<T, TsStatus> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => {
            set_error(&e.to_string());
            Err(status_of(&e))
        }
        Err(_) => {
            set_error("internal panic");
            Err(TsStatus::TsErrPanic)
        }
    }
}

fn guard_ptr<T, F: FnOnce() -> Result<T, Error>>(f: F) -> *mut T {
    match guard(f) {
        Ok(v) => Box::into_raw(Box::new(v)),
        Err(_) => std::ptr::null_mut(),
    }
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, Error> {
    if ptr.is_null() {
        return Err(Error::Invalid("null string argument".into()));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| Error::Invalid("string argument is not UTF-8".into()))
}

/// Builds a measure from row-major coordinates and weights (copied).
///
/// # Safety
/// `points` must hold `len*dim` doubles, `weights` must hold `len`.
#[no_mangle]
pub unsafe extern "C" fn ts_measure_new(
    dim: usize,
    len: usize,
    points: *const f64,
    weights: *const f64,
) -> *mut TsMeasure {
    guard_ptr(|| {
        if points.is_null() || weights.is_null() {
            return Err(Error::Invalid("null buffer".into()));
        }
        let p = unsafe { std::slice::from_raw_parts(points, len * dim) };
        let w = unsafe { std::slice::from_raw_parts(weights, len) };
        Ok(TsMeasure(DiscreteMeasure::from_flat(
            dim,
            p.to_vec(),
            w.to_vec(),
        )?))
    })
}

/// Reads a measure from `x1,...,xd,w` CSV.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn ts_measure_from_csv(path: *const c_char) -> *mut TsMeasure {
    guard_ptr(|| {
        let path = unsafe { cstr(path) }?;
        Ok(TsMeasure(read_measure_csv(path)?))
    })
}

/// # Safety
/// The handle must be live or null.
#[no_mangle]
pub unsafe extern "C" fn ts_measure_len(m: *const TsMeasure) -> usize {
    if m.is_null() {
        return 0;
    }
    unsafe { &*m }.0.len()
}

/// # Safety
/// The handle must be live or null.
#[no_mangle]
pub unsafe extern "C" fn ts_measure_dim(m: *const TsMeasure) -> usize {
    if m.is_null() {
        return 0;
    }
    unsafe { &*m }.0.dim()
}

/// # Safety
/// The handle must be live or null.
#[no_mangle]
pub unsafe extern "C" fn ts_measure_total_mass(m: *const TsMeasure) -> f64 {
    if m.is_null() {
        return f64::NAN;
    }
    unsafe { &*m }.0.total_mass()
}

/// Copies the support coordinates into `out` (`len*dim` doubles).
///
/// # Safety
/// `out` must hold `ts_measure_len(m) * ts_measure_dim(m)` doubles.
#[no_mangle]
pub unsafe extern "C" fn ts_measure_copy_points(m: *const TsMeasure, out: *mut f64) -> TsStatus {
    match guard(|| {
        if m.is_null() || out.is_null() {
            return Err(Error::Invalid("null argument".into()));
        }
        let mm = unsafe { &*m };
        let dst =
            unsafe { std::slice::from_raw_parts_mut(out, mm.0.len() * mm.0.dim()) };
        dst.copy_from_slice(mm.0.points_flat());
        Ok(())
    }) {
        Ok(()) => TsStatus::TsOk,
        Err(s) => s,
    }
}

/// Copies the weights into `out` (`len` doubles).
///
/// # Safety
/// `out` must hold `ts_measure_len(m)` doubles.
#[no_mangle]
pub unsafe extern "C" fn ts_measure_copy_weights(m: *const TsMeasure, out: *mut f64) -> TsStatus {
    match guard(|| {
        if m.is_null() || out.is_null() {
            return Err(Error::Invalid("null argument".into()));
        }
        let mm = unsafe { &*m };
        let dst = unsafe { std::slice::from_raw_parts_mut(out, mm.0.len()) };
        dst.copy_from_slice(mm.0.weights());
        Ok(())
    }) {
        Ok(()) => TsStatus::TsOk,
        Err(s) => s,
    }
}

/// Frees a measure handle (null is a no-op).
///
/// # Safety
/// `m` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ts_measure_free(m: *mut TsMeasure) {
    if !m.is_null() {
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Squared Wasserstein-2 distance with the 1/2-factor convention.
///
/// # Safety
/// All pointers must be valid; `out` receives the value on success.
#[no_mangle]
pub unsafe extern "C" fn ts_wasserstein2(
    a: *const TsMeasure,
    b: *const TsMeasure,
    out: *mut f64,
) -> TsStatus {
    match guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return Err(Error::Invalid("null argument".into()));
        }
        let v = wasserstein2(&unsafe { &*a }.0, &unsafe { &*b }.0)?;
        unsafe { *out = v };
        Ok(())
    }) {
        Ok(()) => TsStatus::TsOk,
        Err(s) => s,
    }
}

/// Solves the two-step problem for a named catalog potential.
/// `entropic != 0` selects the entropic solver, `barycentric != 0` the
/// barycentric map extraction.
///
/// # Safety
/// `source`/`target` must be live measure handles; `potential` a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ts_solve(
    source: *const TsMeasure,
    target: *const TsMeasure,
    potential: *const c_char,
    t: f64,
    entropic: c_int,
    barycentric: c_int,
) -> *mut TsSolution {
    guard_ptr(|| {
        if source.is_null() || target.is_null() {
            return Err(Error::Invalid("null measure handle".into()));
        }
        let name = unsafe { cstr(potential) }?;
        let entry = lookup(name)?;
        let rho0 = unsafe { &*source }.0.clone();
        let rho_t = unsafe { &*target }.0.clone();
        let n = rho0.len();
        let dim = rho0.dim();
        let problem = TwoStepProblem::new(rho0, rho_t, entry.field.clone(), t)?;
        let cfg = SolveConfig {
            solver: if entropic != 0 {
                SolverChoice::Entropic(Default::default())
            } else {
                SolverChoice::Exact
            },
            map_mode: if barycentric != 0 {
                MapMode::Barycentric
            } else {
                MapMode::Dominant
            },
            pushforward_diagnostic: true,
        };
        let solution = solve(&problem, &cfg)?;
        Ok(TsSolution { solution, n, dim })
    })
}

/// # Safety
/// The handle must be live or null.
#[no_mangle]
pub unsafe extern "C" fn ts_solution_len(s: *const TsSolution) -> usize {
    if s.is_null() {
        return 0;
    }
    unsafe { &*s }.n
}

/// # Safety
/// The handle must be live or null.
#[no_mangle]
pub unsafe extern "C" fn ts_solution_dim(s: *const TsSolution) -> usize {
    if s.is_null() {
        return 0;
    }
    unsafe { &*s }.dim
}

/// # Safety
/// The handle must be live or null.
#[no_mangle]
pub unsafe extern "C" fn ts_solution_objective(s: *const TsSolution) -> f64 {
    if s.is_null() {
        return f64::NAN;
    }
    unsafe { &*s }.solution.diagnostics.objective
}

/// `W2(m_#ρ₀, ρ_T)` diagnostic; NaN when it was not computed.
/// # Safety
/// The handle must be live or null.
#[no_mangle]
pub unsafe extern "C" fn ts_solution_pushforward_error(s: *const TsSolution) -> f64 {
    if s.is_null() {
        return f64::NAN;
    }
    unsafe { &*s }
        .solution
        .diagnostics
        .pushforward_w2_error
        .unwrap_or(f64::NAN)
}

/// Copies the full-map images `m(x_i)` (`len*dim` doubles).
///
/// # Safety
/// `out` must hold `ts_solution_len(s) * ts_solution_dim(s)` doubles.
#[no_mangle]
pub unsafe extern "C" fn ts_solution_copy_map(s: *const TsSolution, out: *mut f64) -> TsStatus {
    copy_point_list(s, out, |sol| &sol.map_points)
}

/// Copies the initial velocity field `∇φ(x_i)` (`len*dim` doubles).
///
/// # Safety
/// `out` must hold `ts_solution_len(s) * ts_solution_dim(s)` doubles.
#[no_mangle]
pub unsafe extern "C" fn ts_solution_copy_velocity(
    s: *const TsSolution,
    out: *mut f64,
) -> TsStatus {
    copy_point_list(s, out, |sol| &sol.grad_phi)
}

fn copy_point_list(
    s: *const TsSolution,
    out: *mut f64,
    select: impl Fn(&TwoStepSolution) -> &Vec<Vec<f64>>,
) -> TsStatus {
    match guard(|| {
        if s.is_null() || out.is_null() {
            return Err(Error::Invalid("null argument".into()));
        }
        let ss = unsafe { &*s };
        let list = select(&ss.solution);
        let dst = unsafe { std::slice::from_raw_parts_mut(out, ss.n * ss.dim) };
        for (i, p) in list.iter().enumerate() {
            dst[i * ss.dim..(i + 1) * ss.dim].copy_from_slice(p);
        }
        Ok(())
    }) {
        Ok(()) => TsStatus::TsOk,
        Err(st) => st,
    }
}

/// The kick-time measure as a fresh handle (caller frees).
///
/// # Safety
/// `s` must be a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn ts_solution_intermediate(s: *const TsSolution) -> *mut TsMeasure {
    guard_ptr(|| {
        if s.is_null() {
            return Err(Error::Invalid("null solution handle".into()));
        }
        Ok(TsMeasure(unsafe { &*s }.solution.intermediate.clone()))
    })
}

/// Frees a solution handle (null is a no-op).
///
/// # Safety
/// `s` must come from `ts_solve` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ts_solution_free(s: *mut TsSolution) {
    if !s.is_null() {
        drop(unsafe { Box::from_raw(s) });
    }
}

/// Runs structure-condition scans for a named potential on its default
/// region and returns a JSON report (free with [`ts_string_free`]).
/// `conditions` is a comma-separated subset of `H1,H2,H2w,H2c`.
///
/// # Safety
/// `potential` and `conditions` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn ts_check_potential(
    potential: *const c_char,
    conditions: *const c_char,
    points: usize,
    directions: usize,
    seed: u64,
) -> *mut c_char {
    let result = guard(|| {
        let name = unsafe { cstr(potential) }?;
        let conds = unsafe { cstr(conditions) }?;
        let entry = lookup(name)?;
        let region = SampleRegion::Ball {
            center: vec![0.0; entry.dim],
            radius: entry.sample_halfwidth,
        };
        let field = entry.field.as_ref();
        let mut reports = Vec::new();
        for c in conds.split(',').filter(|c| !c.is_empty()) {
            let rep = match c.trim() {
                "H1" => check_h1(field, &region, points, seed)?,
                "H2" => check_h2(field, &region, points, directions, seed, H2Mode::Strict)?,
                "H2w" => check_h2(field, &region, points, directions, seed, H2Mode::Weak)?,
                "H2c" => check_h2c(field, &region, points, directions, seed, None)?,
                other => {
                    return Err(Error::Invalid(format!("unknown condition {other:?}")));
                }
            };
            reports.push(rep);
        }
        let json = serde_json::to_string_pretty(&serde_json::json!({
            "potential": entry.name,
            "reports": reports,
        }))?;
        CString::new(json).map_err(|_| Error::Invalid("report contains NUL".into()))
    });
    match result {
        Ok(cs) => cs.into_raw(),
        Err(_) => std::ptr::null_mut(),
    }
}

/// Closed-form curvature expression of the inverse-power kernel's cost at
/// `z` with unit directions `xi`, `eta` in dimension `dim >= 3`.
///
/// # Safety
/// `z`, `xi`, `eta` must each hold `dim` doubles; `out` receives the value.
#[no_mangle]
pub unsafe extern "C" fn ts_coulomb_mtw_lhs(
    dim: usize,
    z: *const f64,
    xi: *const f64,
    eta: *const f64,
    out: *mut f64,
) -> TsStatus {
    match guard(|| {
        if z.is_null() || xi.is_null() || eta.is_null() || out.is_null() {
            return Err(Error::Invalid("null argument".into()));
        }
        let zs = unsafe { std::slice::from_raw_parts(z, dim) };
        let xs = unsafe { std::slice::from_raw_parts(xi, dim) };
        let es = unsafe { std::slice::from_raw_parts(eta, dim) };
        let v = twostep::conditions::coulomb_mtw_lhs(zs, xs, es, dim)?;
        unsafe { *out = v };
        Ok(())
    }) {
        Ok(()) => TsStatus::TsOk,
        Err(s) => s,
    }
}

/// Frees a string returned by this library (null is a no-op).
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

// Keep the kernel-convolution entry points minimal: expose the interaction
// energy, which bindings use for objective bookkeeping.
/// `½ ΣΣ w_i w_j κ(y_i − y_j)` for a named kernel; singular kernels use the
/// given exclusion radius (pass 0 for entire kernels).
///
/// # Safety
/// `m` must be a live measure handle, `kernel` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ts_interaction_energy(
    m: *const TsMeasure,
    kernel: *const c_char,
    exclusion_radius: f64,
    out: *mut f64,
) -> TsStatus {
    match guard(|| {
        if m.is_null() || out.is_null() {
            return Err(Error::Invalid("null argument".into()));
        }
        let name = unsafe { cstr(kernel) }?;
        let entry = lookup(name)?;
        let excl = if exclusion_radius > 0.0 {
            Some(exclusion_radius)
        } else if entry.punctured {
            Some(1e-12)
        } else {
            None
        };
        let field: Arc<dyn twostep::potentials::ScalarField> = entry.field.clone();
        let v = twostep::meanfield::interaction_energy(&unsafe { &*m }.0, field.as_ref(), excl)?;
        unsafe { *out = v };
        Ok(())
    }) {
        Ok(()) => TsStatus::TsOk,
        Err(s) => s,
    }
}
