//! Independent time-stepping backend: advance `a(x) v_t = v_xx` directly with
//! a θ-scheme. Rows with `a_j = 0` carry no time derivative and act as
//! algebraic constraints (discrete harmonicity), which makes the system a DAE:
//! backward Euler (θ = 1) satisfies the constraints exactly from the first
//! step on, while the trapezoidal rule can oscillate on them; hence the
//! logged warning when it is combined with plateaus.
//!
//! The step matrix `diag(a) − dt·θ·D₂` is constant, so it is factored once and
//! reused; each step costs `O(n)`. Summing the rows telescopes `D₂` away, so
//! `Σ a_j v_j` is conserved to rounding, the same conservation law the
//! frequency route satisfies through its mean handling.

use crate::grid::GridFunction;
use crate::linalg::{CyclicMatrix, FactoredSystem};
use crate::measure::CapacityProfile;
use crate::synthesis::SolutionField;
use thiserror::Error;

/// Implicitness of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theta {
    /// Backward Euler, the default: plateau constraints hold exactly.
    Implicit,
    /// Trapezoidal rule; second order in time but not safe on plateaus.
    CrankNicolson,
}

impl Theta {
    pub fn value(self) -> f64 {
        match self {
            Theta::Implicit => 1.0,
            Theta::CrankNicolson => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    pub dt: f64,
    pub theta: Theta,
    pub t_end: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("time step must be positive, got {dt}")]
    InvalidTimeStep { dt: f64 },
    #[error("sample time {t} outside [0, {t_end}]")]
    SampleOutOfRange { t: f64, t_end: f64 },
    #[error("scheme matrix became singular (pivot {pivot:.3e} at row {index})")]
    SingularScheme { index: usize, pivot: f64 },
    #[error("discrete maximum principle violated at step {step}: range grew by {growth:.3e}")]
    MaxPrincipleViolated { step: usize, growth: f64 },
    #[error("profile has no plateaus; the flux relation needs one")]
    NoPlateaus,
    #[error("profile has {count} plateaus; the flux relation applies to exactly one")]
    MultiplePlateaus { count: usize },
}

/// Advance the θ-scheme and sample the trajectory at (snapped) times.
///
/// `(diag(a) − dt·θ·D₂) v^{n+1} = (diag(a) + dt·(1−θ)·D₂) v^n`, periodic.
/// Sample times are snapped to the nearest step; the returned field stores
/// the actual step times.
pub fn step_scheme(
    profile: &CapacityProfile,
    f0: &GridFunction,
    cfg: &SchemeConfig,
    sample_times: &[f64],
) -> Result<SolutionField, OracleError> {
    if !cfg.dt.is_finite() || cfg.dt <= 0.0 {
        return Err(OracleError::InvalidTimeStep { dt: cfg.dt });
    }
    let n = profile.n();
    assert_eq!(f0.n(), n, "initial data must live on the capacity grid");
    if cfg.theta == Theta::CrankNicolson && !profile.plateaus().is_empty() {
        log::warn!(
            "trapezoidal stepping with {} plateau(s): algebraic constraints may oscillate",
            profile.plateaus().len()
        );
    }

    let mut indices: Vec<usize> = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        if t < 0.0 || t > cfg.t_end + 0.5 * cfg.dt {
            return Err(OracleError::SampleOutOfRange { t, t_end: cfg.t_end });
        }
        indices.push((t / cfg.dt).round() as usize);
    }
    indices.sort_unstable();
    indices.dedup();
    let last_step = indices.last().copied().unwrap_or(0);

    let a = profile.a();
    let nn = (n * n) as f64;
    let theta = cfg.theta.value();
    let implicit = cfg.dt * theta * nn;
    let explicit = cfg.dt * (1.0 - theta) * nn;
    let matrix = CyclicMatrix {
        sub: vec![-implicit; n],
        diag: a.iter().map(|&aj| aj + 2.0 * implicit).collect(),
        sup: vec![-implicit; n],
    };
    let factored = FactoredSystem::new(matrix, vec![]).map_err(|p| OracleError::SingularScheme {
        index: p.index,
        pivot: p.magnitude,
    })?;

    let mut v: Vec<f64> = f0.values().to_vec();
    let mut samples: Vec<(f64, Vec<f64>)> = Vec::with_capacity(indices.len());
    let mut next_sample = 0usize;
    if indices.first() == Some(&0) {
        samples.push((0.0, v.clone()));
        next_sample = 1;
    }

    let mut range = (
        v.iter().cloned().fold(f64::INFINITY, f64::min),
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let mut rhs = vec![0.0f64; n];
    for step in 1..=last_step {
        for j in 0..n {
            let lap = if explicit != 0.0 {
                explicit * (v[(j + 1) % n] - 2.0 * v[j] + v[(j + n - 1) % n])
            } else {
                0.0
            };
            rhs[j] = a[j] * v[j] + lap;
        }
        v = factored.solve_refined(&rhs);

        if cfg.theta == Theta::Implicit {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let slack = 1e-12 * (range.1 - range.0).abs().max(range.1.abs()).max(1.0);
            let growth = (hi - range.1).max(range.0 - lo);
            if growth > slack {
                return Err(OracleError::MaxPrincipleViolated { step, growth });
            }
            range = (lo.max(range.0), hi.min(range.1));
        }

        if next_sample < indices.len() && indices[next_sample] == step {
            samples.push((step as f64 * cfg.dt, v.clone()));
            next_sample += 1;
        }
    }

    let mean = f0.weighted_mean(a);
    let (times, values): (Vec<f64>, Vec<Vec<f64>>) = samples.into_iter().unzip();
    Ok(SolutionField::from_parts(times, values, mean, 0.0))
}

/// One row of the flux table: one-sided slopes at the plateau edges and the
/// jump scaled by the plateau length (all three agree for the true solution).
#[derive(Debug, Clone, Copy)]
pub struct RobinFluxRow {
    pub t: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    pub scaled_jump: f64,
    /// `max_j |Dv|` at this time, the natural scale for comparisons.
    pub slope_scale: f64,
}

#[derive(Debug, Clone)]
pub struct RobinFluxTable {
    pub rows: Vec<RobinFluxRow>,
    /// The flux coefficient `1/(plateau length)` the relation realizes.
    pub b_effective: f64,
}

impl RobinFluxTable {
    /// Worst relative disagreement between the three columns.
    pub fn max_disagreement(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let scale = r.slope_scale.max(1e-300);
                ((r.left_slope - r.right_slope).abs())
                    .max((r.left_slope - r.scaled_jump).abs())
                    .max((r.right_slope - r.scaled_jump).abs())
                    / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Check the flux relation at a single plateau: one-sided derivatives at the
/// edges against `jump/(plateau length)`, per sampled time `t > 0`.
pub fn robin_flux_check(
    sol: &SolutionField,
    profile: &CapacityProfile,
) -> Result<RobinFluxTable, OracleError> {
    match profile.plateaus().len() {
        0 => return Err(OracleError::NoPlateaus),
        1 => {}
        count => return Err(OracleError::MultiplePlateaus { count }),
    }
    let n = profile.n();
    let nf = n as f64;
    let zero_cells: Vec<usize> = profile.plateau_cells();
    assert!(
        zero_cells.len() >= 3,
        "plateau too thin for the capacity grid; refine n"
    );

    // contiguous run in circular order (the plateau may touch the origin)
    let run = circular_run(&zero_cells, n);
    let first = run[0];
    let last = *run.last().unwrap();
    let before = |k: usize, off: usize| (k + n - off) % n;
    let after = |k: usize, off: usize| (k + off) % n;

    let plateau_len = profile.plateaus()[0].length();
    let mut rows = Vec::new();
    for (i, &t) in sol.times().iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        let v = sol.slice(i);
        let left_slope = (v[before(first, 1)] - v[before(first, 2)]) * nf;
        let right_slope = (v[after(last, 2)] - v[after(last, 1)]) * nf;
        let run_span = (run.len() - 1) as f64 / nf;
        let inside_slope = (v[last] - v[first]) / run_span;
        let slope_scale = (0..n)
            .map(|j| (v[(j + 1) % n] - v[j]).abs() * nf)
            .fold(0.0, f64::max);
        rows.push(RobinFluxRow {
            t,
            left_slope,
            right_slope,
            scaled_jump: inside_slope,
            slope_scale,
        });
    }
    Ok(RobinFluxTable {
        rows,
        b_effective: 1.0 / plateau_len,
    })
}

/// Order the cells of a single circular run so consecutive entries are
/// adjacent, starting just after the gap.
fn circular_run(cells: &[usize], n: usize) -> Vec<usize> {
    let mut in_run = vec![false; n];
    for &c in cells {
        in_run[c] = true;
    }
    let mut start = cells[0];
    if in_run[0] && in_run[n - 1] {
        // run crosses the origin: walk back to its true start
        let mut s = 0;
        while in_run[(s + n - 1) % n] {
            s = (s + n - 1) % n;
            if s == 0 {
                break;
            }
        }
        start = s;
    } else {
        for &c in cells {
            if !in_run[(c + n - 1) % n] {
                start = c;
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(cells.len());
    let mut k = start;
    while in_run[k] {
        out.push(k);
        k = (k + 1) % n;
        if out.len() == cells.len() {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::from_yspace;
    use crate::measure::MeasureSpec;
    use std::f64::consts::{PI, TAU};

    fn implicit_cfg(dt: f64, t_end: f64) -> SchemeConfig {
        SchemeConfig {
            dt,
            theta: Theta::Implicit,
            t_end,
        }
    }

    #[test]
    fn lebesgue_cosine_matches_closed_form() {
        let n = 512;
        let profile = MeasureSpec::lebesgue().capacity(n).unwrap();
        let f0 = GridFunction::sample(n, |x| (TAU * x).cos());
        let sol = step_scheme(&profile, &f0, &implicit_cfg(1e-5, 0.05), &[0.05]).unwrap();
        let lam = 4.0 * PI * PI;
        let mut worst = 0.0f64;
        for j in 0..n {
            let x = (j as f64 + 0.5) / n as f64;
            worst = worst.max((sol.value(0, j) - (-lam * 0.05).exp() * (TAU * x).cos()).abs());
        }
        assert!(worst <= 5e-3, "sup error {worst}");
        let peak = sol.slice(0).iter().fold(0.0f64, |m, v| m.max(*v));
        assert!((peak - 0.1389).abs() <= 5e-3, "peak {peak}");
    }

    #[test]
    fn constants_are_fixed_points() {
        let n = 128;
        let spec = MeasureSpec::lebesgue_plus_delta(0.5, 0.5).unwrap();
        let profile = spec.capacity(n).unwrap();
        let f0 = GridFunction::constant(n, 2.5);
        let sol = step_scheme(&profile, &f0, &implicit_cfg(1e-3, 0.2), &[0.0, 0.1, 0.2]).unwrap();
        for i in 0..sol.times().len() {
            for j in 0..n {
                assert!((sol.value(i, j) - 2.5).abs() <= 1e-13, "t index {i}");
            }
        }
    }

    #[test]
    fn plateau_rows_become_exact_constraints() {
        let n = 256;
        let spec = MeasureSpec::lebesgue_plus_delta(0.5, 0.5).unwrap();
        let profile = spec.capacity(n).unwrap();
        let data = from_yspace(
            &GridFunction::sample(1024, |y| (TAU * y).cos()),
            0.0,
            &spec,
            n,
        )
        .unwrap();
        let sol = step_scheme(
            &profile,
            data.f(),
            &implicit_cfg(1e-4, 0.01),
            &[1e-4, 5e-3, 0.01],
        )
        .unwrap();
        let scale = sol.sup_norm().max(1e-300);
        assert!(
            sol.plateau_curvature(&profile) <= 1e-10 * scale,
            "curvature {:e}",
            sol.plateau_curvature(&profile)
        );
    }

    #[test]
    fn conservation_to_rounding() {
        let n = 256;
        for theta in [Theta::Implicit, Theta::CrankNicolson] {
            let spec = MeasureSpec::lebesgue_plus_delta(0.25, 0.4).unwrap();
            let profile = spec.capacity(n).unwrap();
            let f0 = GridFunction::sample(n, |x| (TAU * x).sin() + 0.3);
            let cfg = SchemeConfig {
                dt: 1e-4,
                theta,
                t_end: 0.1,
            };
            let sol = step_scheme(&profile, &f0, &cfg, &[0.0, 0.05, 0.1]).unwrap();
            let drift = sol.conservation_error(&profile);
            assert!(drift <= 1e-13, "theta {theta:?}: drift {drift:e}");
        }
    }

    #[test]
    fn first_order_convergence_in_time() {
        // halving dt halves the error against the closed form, within 20%
        let n = 512;
        let profile = MeasureSpec::lebesgue().capacity(n).unwrap();
        let f0 = GridFunction::sample(n, |x| (TAU * x).cos());
        let lam = 4.0 * PI * PI;
        let t = 0.05;
        let error_at = |dt: f64| -> f64 {
            let sol = step_scheme(&profile, &f0, &implicit_cfg(dt, t), &[t]).unwrap();
            let mut worst = 0.0f64;
            for j in 0..n {
                let x = (j as f64 + 0.5) / n as f64;
                worst = worst.max((sol.value(0, j) - (-lam * t).exp() * (TAU * x).cos()).abs());
            }
            worst
        };
        let e1 = error_at(4e-4);
        let e2 = error_at(2e-4);
        let ratio = e1 / e2;
        assert!(
            (ratio - 2.0).abs() <= 0.4,
            "Richardson ratio {ratio} (errors {e1:e}, {e2:e})"
        );
    }

    #[test]
    fn max_principle_holds_for_implicit_scheme() {
        let n = 128;
        let spec = MeasureSpec::two_atoms(4).unwrap();
        let profile = spec.capacity(n).unwrap();
        let f0 = GridFunction::sample(n, |x| (3.0 * TAU * x).sin());
        // would return MaxPrincipleViolated otherwise
        let sol = step_scheme(&profile, &f0, &implicit_cfg(1e-3, 0.5), &[0.5]).unwrap();
        assert!(sol.sup_norm() <= f0.sup_norm() + 1e-12);
    }

    #[test]
    fn robin_relation_for_one_atom_measure() {
        let n = 512;
        let spec = MeasureSpec::lebesgue_plus_delta(0.5, 0.5).unwrap();
        let profile = spec.capacity(n).unwrap();
        let data = from_yspace(
            &GridFunction::sample(1024, |y| (TAU * y).sin()),
            0.0,
            &spec,
            n,
        )
        .unwrap();
        let sol = step_scheme(
            &profile,
            data.f(),
            &implicit_cfg(2e-5, 0.1),
            &[0.05, 0.1],
        )
        .unwrap();
        let table = robin_flux_check(&sol, &profile).unwrap();
        assert!((table.b_effective - 2.0).abs() < 1e-12);
        assert_eq!(table.rows.len(), 2);
        assert!(
            table.max_disagreement() <= 5e-2,
            "disagreement {}",
            table.max_disagreement()
        );
    }

    #[test]
    fn flux_coefficient_is_inverse_plateau_length() {
        let n = 512;
        let spec = MeasureSpec::lebesgue_plus_delta(0.3, 0.25).unwrap();
        let profile = spec.capacity(n).unwrap();
        let data = from_yspace(
            &GridFunction::sample(1024, |y| (TAU * y).sin()),
            0.0,
            &spec,
            n,
        )
        .unwrap();
        let sol = step_scheme(&profile, data.f(), &implicit_cfg(5e-5, 0.1), &[0.05, 0.1]).unwrap();
        let table = robin_flux_check(&sol, &profile).unwrap();
        assert!((table.b_effective - 4.0).abs() < 1e-12);
        assert!(table.max_disagreement() <= 5e-2, "{}", table.max_disagreement());
    }

    #[test]
    fn steady_state_fluxes_vanish() {
        let n = 256;
        let spec = MeasureSpec::lebesgue_plus_delta(0.5, 0.5).unwrap();
        let profile = spec.capacity(n).unwrap();
        let f0 = GridFunction::constant(n, 1.0);
        let sol = step_scheme(&profile, &f0, &implicit_cfg(1e-3, 0.1), &[0.05, 0.1]).unwrap();
        let table = robin_flux_check(&sol, &profile).unwrap();
        for row in &table.rows {
            assert!(row.left_slope.abs() <= 1e-10);
            assert!(row.right_slope.abs() <= 1e-10);
            assert!(row.scaled_jump.abs() <= 1e-10);
        }
    }

    #[test]
    fn flux_check_requires_exactly_one_plateau() {
        let n = 128;
        let lebesgue = MeasureSpec::lebesgue().capacity(n).unwrap();
        let f0 = GridFunction::constant(n, 1.0);
        let sol = step_scheme(&lebesgue, &f0, &implicit_cfg(1e-3, 0.01), &[0.01]).unwrap();
        assert!(matches!(
            robin_flux_check(&sol, &lebesgue),
            Err(OracleError::NoPlateaus)
        ));
        let two = MeasureSpec::two_atoms(4).unwrap().capacity(n).unwrap();
        let sol2 = step_scheme(&two, &f0, &implicit_cfg(1e-3, 0.01), &[0.01]).unwrap();
        assert!(matches!(
            robin_flux_check(&sol2, &two),
            Err(OracleError::MultiplePlateaus { count: 2 })
        ));
    }

    #[test]
    fn wrapped_plateau_run_is_ordered() {
        // atom at 0: plateau [1-c, 1] touches the origin from the left
        let n = 128;
        let spec = MeasureSpec::lebesgue_plus_delta(0.0, 0.25).unwrap();
        let profile = spec.capacity(n).unwrap();
        let cells = profile.plateau_cells();
        let run = circular_run(&cells, n);
        assert_eq!(run.len(), cells.len());
        for w in run.windows(2) {
            assert_eq!((w[0] + 1) % n, w[1]);
        }
    }

    #[test]
    fn sample_snapping_records_actual_step_times() {
        let n = 64;
        let profile = MeasureSpec::lebesgue().capacity(n).unwrap();
        let f0 = GridFunction::sample(n, |x| (TAU * x).cos());
        let sol = step_scheme(&profile, &f0, &implicit_cfg(1e-3, 0.1), &[0.0333, 0.1]).unwrap();
        assert!((sol.times()[0] - 0.033).abs() < 1e-12);
        assert!((sol.times()[1] - 0.1).abs() < 1e-12);
    }
}
