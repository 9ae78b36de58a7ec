//! C ABI for the heatw solver.
//!
//! All entry points follow the same contract: opaque handles created and
//! destroyed by this library, [`HwStatus`] return codes, and out-pointers for
//! results. No exceptions cross the boundary (panics are caught and reported
//! as [`HwStatus::Panic`]); the last error message is kept per-thread and
//! retrievable via [`hw_last_error_message`].
//!
//! The generated header lives at `include/heatw.h`.

use heatw::grid::GridFunction;
use heatw::initial::{from_xspace, from_yspace, CompatibleData, COMPAT_TOL_USER};
use heatw::measure::MeasureSpec;
use heatw::oracle::{step_scheme, SchemeConfig, Theta};
use heatw::resolvent::{sweep, FrequencyGrid};
use heatw::synthesis::{synthesize, SolutionField};
use libc::{c_char, size_t};
use std::cell::RefCell;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMeasure = 3,
    IncompatibleData = 4,
    SingularSystem = 5,
    NumericalBreakdown = 6,
    TailBoundExceeded = 7,
    RuntimeError = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes, or be NULL (then only
/// the length is returned).
#[no_mangle]
pub unsafe extern "C" fn hw_last_error_message(buf: *mut c_char, cap: size_t) -> size_t {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Opaque measure handle.
pub struct HwMeasure {
    spec: MeasureSpec,
}

/// Opaque problem handle: a measure, a grid resolution, and (once set)
/// admissible initial data.
pub struct HwProblem {
    spec: MeasureSpec,
    n_cells: usize,
    data: Option<CompatibleData>,
}

/// Opaque solution handle: space-time samples plus metadata.
pub struct HwSolution {
    field: SolutionField,
}

fn guarded<F: FnOnce() -> HwStatus>(f: F) -> HwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            HwStatus::Panic
        }
    }
}

fn emit_measure(out: *mut *mut HwMeasure, spec: Result<MeasureSpec, heatw::MeasureError>) -> HwStatus {
    match spec {
        Ok(spec) => {
            unsafe { *out = Box::into_raw(Box::new(HwMeasure { spec })) };
            HwStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            HwStatus::InvalidMeasure
        }
    }
}

/// Create the Lebesgue measure.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hw_measure_lebesgue(out: *mut *mut HwMeasure) -> HwStatus {
    if out.is_null() {
        return HwStatus::NullPointer;
    }
    guarded(|| emit_measure(out, Ok(MeasureSpec::lebesgue())))
}

/// Create `(1−c)·Lebesgue + c·δ_p`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hw_measure_lebesgue_plus_delta(
    p: f64,
    c: f64,
    out: *mut *mut HwMeasure,
) -> HwStatus {
    if out.is_null() {
        return HwStatus::NullPointer;
    }
    guarded(|| emit_measure(out, MeasureSpec::lebesgue_plus_delta(p, c)))
}

/// Create the two-atom measure `½L + ¼δ_{½−1/n} + ¼δ_{½+1/n}`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hw_measure_two_atoms(n: u32, out: *mut *mut HwMeasure) -> HwStatus {
    if out.is_null() {
        return HwStatus::NullPointer;
    }
    guarded(|| emit_measure(out, MeasureSpec::two_atoms(n)))
}

/// Create the level-`n` Cantor staircase approximant measure.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hw_measure_cantor_approx(level: u32, out: *mut *mut HwMeasure) -> HwStatus {
    if out.is_null() {
        return HwStatus::NullPointer;
    }
    guarded(|| emit_measure(out, MeasureSpec::cantor_approx(level)))
}

/// Create a measure from raw arrays: breakpoints (length `n_breaks`, first 0,
/// last 1), densities (length `n_breaks − 1`), and optional atoms.
///
/// # Safety
/// The array pointers must be valid for the stated lengths; `atom_pos` and
/// `atom_mass` may be NULL when `n_atoms` is 0.
#[no_mangle]
pub unsafe extern "C" fn hw_measure_custom(
    breakpoints: *const f64,
    n_breaks: size_t,
    densities: *const f64,
    n_densities: size_t,
    atom_pos: *const f64,
    atom_mass: *const f64,
    n_atoms: size_t,
    out: *mut *mut HwMeasure,
) -> HwStatus {
    if out.is_null() || breakpoints.is_null() || densities.is_null() {
        return HwStatus::NullPointer;
    }
    if n_atoms > 0 && (atom_pos.is_null() || atom_mass.is_null()) {
        return HwStatus::NullPointer;
    }
    guarded(|| {
        let breaks = std::slice::from_raw_parts(breakpoints, n_breaks).to_vec();
        let dens = std::slice::from_raw_parts(densities, n_densities).to_vec();
        let atoms = (0..n_atoms)
            .map(|k| (*atom_pos.add(k), *atom_mass.add(k)))
            .collect();
        emit_measure(out, MeasureSpec::new(breaks, dens, atoms))
    })
}

/// Evaluate the distribution function `W(x)`.
///
/// # Safety
/// `measure` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hw_measure_cdf(
    measure: *const HwMeasure,
    x: f64,
    out: *mut f64,
) -> HwStatus {
    if measure.is_null() || out.is_null() {
        return HwStatus::NullPointer;
    }
    guarded(|| {
        *out = (*measure).spec.cdf(x);
        HwStatus::Ok
    })
}

/// Evaluate the generalized inverse `w(s)`.
///
/// # Safety
/// `measure` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hw_measure_inverse_cdf(
    measure: *const HwMeasure,
    s: f64,
    out: *mut f64,
) -> HwStatus {
    if measure.is_null() || out.is_null() {
        return HwStatus::NullPointer;
    }
    guarded(|| {
        *out = (*measure).spec.inverse_cdf(s);
        HwStatus::Ok
    })
}

/// Release a measure handle. NULL is a no-op.
///
/// # Safety
/// `measure` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hw_measure_free(measure: *mut HwMeasure) {
    if !measure.is_null() {
        drop(Box::from_raw(measure));
    }
}

/// Create a problem on `n_cells` grid cells (at least 4).
///
/// # Safety
/// `measure` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hw_problem_new(
    measure: *const HwMeasure,
    n_cells: size_t,
    out: *mut *mut HwProblem,
) -> HwStatus {
    if measure.is_null() || out.is_null() {
        return HwStatus::NullPointer;
    }
    guarded(|| {
        if n_cells < 4 {
            set_error("n_cells must be at least 4");
            return HwStatus::InvalidArgument;
        }
        *out = Box::into_raw(Box::new(HwProblem {
            spec: (*measure).spec.clone(),
            n_cells,
            data: None,
        }));
        HwStatus::Ok
    })
}

/// Set the initial condition through the `y`-space pathway: samples of the
/// generalized second derivative `g` on a uniform grid, plus the additive
/// constant `b`.
///
/// # Safety
/// `g` must point to `len` readable doubles; `problem` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hw_problem_set_initial_yspace(
    problem: *mut HwProblem,
    g: *const f64,
    len: size_t,
    b: f64,
) -> HwStatus {
    if problem.is_null() || g.is_null() {
        return HwStatus::NullPointer;
    }
    guarded(|| {
        if len < 2 {
            set_error("need at least two samples of g");
            return HwStatus::InvalidArgument;
        }
        let samples = std::slice::from_raw_parts(g, len);
        if samples.iter().any(|v| !v.is_finite()) {
            set_error("g contains non-finite values");
            return HwStatus::InvalidArgument;
        }
        let p = &mut *problem;
        match from_yspace(&GridFunction::new(samples.to_vec()), b, &p.spec, p.n_cells) {
            Ok(data) => {
                p.data = Some(data);
                HwStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                HwStatus::IncompatibleData
            }
        }
    })
}

/// Set the initial condition through the `x`-space pathway: samples of `f`
/// and `f″` at the cell centers (`len` must equal the problem's `n_cells`).
///
/// # Safety
/// `f` and `f_second` must point to `len` readable doubles; `problem` valid.
#[no_mangle]
pub unsafe extern "C" fn hw_problem_set_initial_xspace(
    problem: *mut HwProblem,
    f: *const f64,
    f_second: *const f64,
    len: size_t,
) -> HwStatus {
    if problem.is_null() || f.is_null() || f_second.is_null() {
        return HwStatus::NullPointer;
    }
    guarded(|| {
        let p = &mut *problem;
        if len != p.n_cells {
            set_error(format!("expected {} samples, got {len}", p.n_cells));
            return HwStatus::InvalidArgument;
        }
        let fv = std::slice::from_raw_parts(f, len);
        let sv = std::slice::from_raw_parts(f_second, len);
        if fv.iter().chain(sv.iter()).any(|v| !v.is_finite()) {
            set_error("initial data contains non-finite values");
            return HwStatus::InvalidArgument;
        }
        let profile = match p.spec.capacity(p.n_cells) {
            Ok(prof) => prof,
            Err(e) => {
                set_error(e.to_string());
                return HwStatus::InvalidArgument;
            }
        };
        match from_xspace(
            GridFunction::new(fv.to_vec()),
            GridFunction::new(sv.to_vec()),
            &profile,
            COMPAT_TOL_USER,
        ) {
            Ok(data) => {
                p.data = Some(data);
                HwStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                HwStatus::IncompatibleData
            }
        }
    })
}

/// Release a problem handle. NULL is a no-op.
///
/// # Safety
/// `problem` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hw_problem_free(problem: *mut HwProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

unsafe fn take_times(times: *const f64, n_times: size_t) -> Result<Vec<f64>, HwStatus> {
    if n_times == 0 {
        set_error("need at least one evaluation time");
        return Err(HwStatus::InvalidArgument);
    }
    let ts = std::slice::from_raw_parts(times, n_times);
    if ts.iter().any(|t| !t.is_finite() || *t < 0.0) {
        set_error("times must be finite and nonnegative");
        return Err(HwStatus::InvalidArgument);
    }
    Ok(ts.to_vec())
}

/// Solve with the frequency-domain pipeline and sample at the given times.
///
/// # Safety
/// `problem`, `times` (length `n_times`) and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hw_solve_spectral(
    problem: *const HwProblem,
    xi_max: f64,
    n_freqs: size_t,
    times: *const f64,
    n_times: size_t,
    out: *mut *mut HwSolution,
) -> HwStatus {
    if problem.is_null() || times.is_null() || out.is_null() {
        return HwStatus::NullPointer;
    }
    guarded(|| {
        let p = &*problem;
        let Some(data) = &p.data else {
            set_error("initial data not set");
            return HwStatus::InvalidArgument;
        };
        if !xi_max.is_finite() || xi_max <= 0.0 {
            set_error("xi_max must be positive");
            return HwStatus::InvalidArgument;
        }
        let ts = match take_times(times, n_times) {
            Ok(ts) => ts,
            Err(status) => return status,
        };
        let profile = match p.spec.capacity(p.n_cells) {
            Ok(prof) => prof,
            Err(e) => {
                set_error(e.to_string());
                return HwStatus::InvalidArgument;
            }
        };
        let family = match sweep(FrequencyGrid::new(xi_max, n_freqs), &profile, data) {
            Ok(f) => f,
            Err(e) => {
                set_error(e.to_string());
                return HwStatus::NumericalBreakdown;
            }
        };
        match synthesize(&family, &ts, None) {
            Ok(field) => {
                *out = Box::into_raw(Box::new(HwSolution { field }));
                HwStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                HwStatus::TailBoundExceeded
            }
        }
    })
}

/// Solve with the time-stepping backend (`theta` is 1.0 or 0.5).
///
/// # Safety
/// `problem`, `times` (length `n_times`) and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hw_solve_oracle(
    problem: *const HwProblem,
    dt: f64,
    theta: f64,
    times: *const f64,
    n_times: size_t,
    out: *mut *mut HwSolution,
) -> HwStatus {
    if problem.is_null() || times.is_null() || out.is_null() {
        return HwStatus::NullPointer;
    }
    guarded(|| {
        let p = &*problem;
        let Some(data) = &p.data else {
            set_error("initial data not set");
            return HwStatus::InvalidArgument;
        };
        let theta = if theta == 1.0 {
            Theta::Implicit
        } else if theta == 0.5 {
            Theta::CrankNicolson
        } else {
            set_error("theta must be 1.0 or 0.5");
            return HwStatus::InvalidArgument;
        };
        let ts = match take_times(times, n_times) {
            Ok(ts) => ts,
            Err(status) => return status,
        };
        let t_end = ts.iter().cloned().fold(0.0f64, f64::max);
        let profile = match p.spec.capacity(p.n_cells) {
            Ok(prof) => prof,
            Err(e) => {
                set_error(e.to_string());
                return HwStatus::InvalidArgument;
            }
        };
        let cfg = SchemeConfig { dt, theta, t_end };
        match step_scheme(&profile, data.f(), &cfg, &ts) {
            Ok(field) => {
                *out = Box::into_raw(Box::new(HwSolution { field }));
                HwStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                HwStatus::RuntimeError
            }
        }
    })
}

/// Number of stored time samples.
///
/// # Safety
/// `solution` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn hw_solution_n_times(solution: *const HwSolution) -> size_t {
    if solution.is_null() {
        return 0;
    }
    (*solution).field.times().len()
}

/// Number of spatial cells.
///
/// # Safety
/// `solution` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn hw_solution_n_cells(solution: *const HwSolution) -> size_t {
    if solution.is_null() {
        return 0;
    }
    (*solution).field.n_cells()
}

/// Time of sample `i` (after snapping, for the oracle backend).
///
/// # Safety
/// `solution` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hw_solution_time(
    solution: *const HwSolution,
    i: size_t,
    out: *mut f64,
) -> HwStatus {
    if solution.is_null() || out.is_null() {
        return HwStatus::NullPointer;
    }
    let field = &(*solution).field;
    if i >= field.times().len() {
        set_error("time index out of range");
        return HwStatus::InvalidArgument;
    }
    *out = field.times()[i];
    HwStatus::Ok
}

/// Value `v(t_i, x_j)`.
///
/// # Safety
/// `solution` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hw_solution_value(
    solution: *const HwSolution,
    i: size_t,
    j: size_t,
    out: *mut f64,
) -> HwStatus {
    if solution.is_null() || out.is_null() {
        return HwStatus::NullPointer;
    }
    let field = &(*solution).field;
    if i >= field.times().len() || j >= field.n_cells() {
        set_error("sample index out of range");
        return HwStatus::InvalidArgument;
    }
    *out = field.value(i, j);
    HwStatus::Ok
}

/// The conserved weighted mean of the solution.
///
/// # Safety
/// `solution` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hw_solution_mean(solution: *const HwSolution, out: *mut f64) -> HwStatus {
    if solution.is_null() || out.is_null() {
        return HwStatus::NullPointer;
    }
    *out = (*solution).field.mean();
    HwStatus::Ok
}

/// Reported spectral tail bound (0 for the oracle backend).
///
/// # Safety
/// `solution` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hw_solution_tail_bound(
    solution: *const HwSolution,
    out: *mut f64,
) -> HwStatus {
    if solution.is_null() || out.is_null() {
        return HwStatus::NullPointer;
    }
    *out = (*solution).field.tail_bound();
    HwStatus::Ok
}

/// Release a solution handle. NULL is a no-op.
///
/// # Safety
/// `solution` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hw_solution_free(solution: *mut HwSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}
