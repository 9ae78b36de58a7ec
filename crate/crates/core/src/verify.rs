//! Verification harness: the definitions and estimates behind the solver are
//! restated as runnable checks with explicit thresholds and provenance.
//!
//! * weak-solution residuals in both coordinates (the `⟨·,·⟩_a` pairing in
//!   `x`-space, the `L²` pairing against admissible test profiles in
//!   `y`-space), which must agree through the substitution identity;
//! * the a-priori bounds of the frequency analysis, with their explicit
//!   discrete constants (`‖u‖∞ ≤ 2[f]_a`, `‖u‖_{H¹} ≤ √5‖u‖_{H¹_a}`,
//!   `√ξ‖u‖_{H¹} ≤ √10·[f]_a`, `ξ^{3/2}‖k‖∞ ≤ 2√2·[f+g]_a`);
//! * the continuity-in-μ experiment: solutions for a vaguely convergent
//!   sequence of measures approach the limit solution in sup norm and in the
//!   Hölder-trace metric, with at least a 2× total reduction (the statement
//!   gives no rate, so monotone decrease plus the 2× gate is the falsifiable
//!   surrogate);
//! * the incompatible-data experiment: with a fixed profile that is curved
//!   over the merging plateaus, the time-L² error vanishes while the
//!   uniform-in-time error at the merge point stays bounded away from zero.

use crate::grid::{a_seminorm_real, h1_norm, h1a_norm, GridFunction};
use crate::initial::{compose_at, from_yspace, CompatibleData};
use crate::measure::{CapacityProfile, MeasureSpec};
use crate::oracle::{step_scheme, SchemeConfig, Theta};
use crate::resolvent::{energy_residual, solve_shifted, solve_split, sweep, FrequencyGrid};
use crate::synthesis::{holder_seminorm, synthesize, RhoField, SolutionField};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::TAU;

/// Where a threshold comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdSource {
    /// An explicit constant carried by the estimates themselves.
    AnalyticBound,
    /// Calibrated against this artifact's own refinement studies.
    DerivedOracle,
    /// An engineering choice (quadrature budgets, rounding slack).
    Artifact,
}

/// Comparison direction for a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cmp {
    Le,
    Ge,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub cmp: Cmp,
    pub source: ThresholdSource,
    pub pass: bool,
}

/// Append-only record of named checks for one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub scenario: String,
    pub checks: Vec<CheckRow>,
}

impl ExperimentReport {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            scenario: scenario.into(),
            checks: Vec::new(),
        }
    }

    pub fn check(
        &mut self,
        name: impl Into<String>,
        value: f64,
        threshold: f64,
        cmp: Cmp,
        source: ThresholdSource,
    ) -> bool {
        let pass = match cmp {
            Cmp::Le => value <= threshold,
            Cmp::Ge => value >= threshold,
        };
        self.checks.push(CheckRow {
            name: name.into(),
            value,
            threshold,
            cmp,
            source,
            pass,
        });
        pass
    }

    /// Record a measurement without a pass/fail gate.
    pub fn note(&mut self, name: impl Into<String>, value: f64) {
        self.checks.push(CheckRow {
            name: name.into(),
            value,
            threshold: f64::INFINITY,
            cmp: Cmp::Le,
            source: ThresholdSource::Artifact,
            pass: true,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn merge(&mut self, other: ExperimentReport) {
        self.checks.extend(other.checks);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn summary(&self) -> String {
        let mut out = format!("scenario: {}\n", self.scenario);
        for c in &self.checks {
            let sym = match c.cmp {
                Cmp::Le => "<=",
                Cmp::Ge => ">=",
            };
            if c.threshold.is_finite() {
                out.push_str(&format!(
                    "  [{}] {}: {:.6e} {} {:.6e} ({:?})\n",
                    if c.pass { "pass" } else { "FAIL" },
                    c.name,
                    c.value,
                    sym,
                    c.threshold,
                    c.source
                ));
            } else {
                out.push_str(&format!("  [note] {}: {:.6e}\n", c.name, c.value));
            }
        }
        out.push_str(&format!(
            "  overall: {}\n",
            if self.all_pass() { "pass" } else { "FAIL" }
        ));
        out
    }
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] - t[0]))
        .sum()
}

/// Max residual of the `x`-space weak identity
/// `⟨v(T),φ⟩_a − ⟨f,φ⟩_a = ∫₀^T ⟨v(t),φ″⟩ dt`
/// over trig test functions up to frequency `n_test`, scaled by `‖f‖∞`.
pub fn weak_residual_x(
    sol: &SolutionField,
    profile: &CapacityProfile,
    data: &CompatibleData,
    t_horizon: f64,
    n_test: usize,
) -> f64 {
    let times = sol.times();
    assert!(times[0] == 0.0, "field must be sampled from t = 0");
    let i_top = times
        .iter()
        .rposition(|&t| t <= t_horizon + 1e-12)
        .expect("horizon below first sample");
    assert!(i_top + 1 >= 64, "need at least 64 samples in [0, T]");

    let n = sol.n_cells();
    let a = profile.a();
    let f = data.f().values();
    let scale = data.f().sup_norm().max(1e-300);
    let mut worst = 0.0f64;

    let mut phis: Vec<(Vec<f64>, f64)> = vec![(vec![1.0; n], 0.0)];
    for m in 1..=n_test {
        let om = TAU * m as f64;
        phis.push((
            (0..n).map(|j| (om * (j as f64 + 0.5) / n as f64).cos()).collect(),
            -om * om,
        ));
        phis.push((
            (0..n).map(|j| (om * (j as f64 + 0.5) / n as f64).sin()).collect(),
            -om * om,
        ));
    }

    for (phi, curv) in &phis {
        let pair_a = |row: &[f64]| -> f64 {
            crate::grid::kahan_sum(row.iter().zip(phi).zip(a).map(|((v, p), aj)| aj * v * p))
                / n as f64
        };
        let lhs = pair_a(sol.slice(i_top)) - pair_a(f);
        let integrand: Vec<f64> = (0..=i_top)
            .map(|i| {
                curv * crate::grid::kahan_sum(sol.slice(i).iter().zip(phi).map(|(v, p)| v * p))
                    / n as f64
            })
            .collect();
        let rhs = trapezoid(&times[0..=i_top], &integrand);
        worst = worst.max((lhs - rhs).abs());
    }
    worst / scale
}

/// Residual of the `y`-space weak identity against a test profile built from
/// `gW_test` (so its generalized second derivative is known exactly), scaled
/// by `‖h‖∞`. Inner products are midpoint sums on the `ρ` grid.
pub fn weak_residual_y(
    rho: &RhoField,
    spec: &MeasureSpec,
    data_f: &GridFunction,
    gw_test: &GridFunction,
    t_horizon: f64,
) -> Result<f64, crate::initial::InitialDataError> {
    let psi_data = from_yspace(gw_test, 0.0, spec, data_f.n())?;
    let my = rho.y_cells;
    let harmonics = crate::harmonics::Harmonics::from_samples(gw_test.values());

    let mut psi = Vec::with_capacity(my);
    let mut lw_psi = Vec::with_capacity(my);
    let mut h0 = Vec::with_capacity(my);
    for i in 0..my {
        let y = (i as f64 + 0.5) / my as f64;
        psi.push(compose_at(psi_data.f(), spec, y));
        lw_psi.push(harmonics.eval(y));
        h0.push(compose_at(data_f, spec, y));
    }
    let dot = |u: &[f64], w: &[f64]| -> f64 {
        crate::grid::kahan_sum(u.iter().zip(w).map(|(a, b)| a * b)) / my as f64
    };

    let times = &rho.times;
    assert!(times[0] == 0.0, "field must be sampled from t = 0");
    let i_top = times
        .iter()
        .rposition(|&t| t <= t_horizon + 1e-12)
        .expect("horizon below first sample");
    let lhs = dot(&rho.values[i_top], &psi) - dot(&h0, &psi);
    let integrand: Vec<f64> = (0..=i_top)
        .map(|i| dot(&rho.values[i], &lw_psi))
        .collect();
    let rhs = trapezoid(&times[0..=i_top], &integrand);
    let scale = h0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    Ok((lhs - rhs).abs() / scale)
}

/// Both weak residuals for one corresponding test pair: the `x`-space
/// identity against a profile `F` with exactly known `F″ = a·g`, and the
/// `y`-space identity against `ψ = F∘W`. The substitution rule makes the two
/// identities coincide in the continuum, so the residuals must agree within
/// quadrature tolerance.
pub fn paired_residuals(
    sol: &SolutionField,
    rho: &RhoField,
    spec: &MeasureSpec,
    profile: &CapacityProfile,
    data: &CompatibleData,
    gw_test: &GridFunction,
    t_horizon: f64,
) -> Result<(f64, f64), crate::initial::InitialDataError> {
    let psi_data = from_yspace(gw_test, 0.0, spec, sol.n_cells())?;
    let scale = data.f().sup_norm().max(1e-300);

    // x-space side with φ = F, φ″ = a·g exactly
    let times = sol.times();
    let i_top = times
        .iter()
        .rposition(|&t| t <= t_horizon + 1e-12)
        .expect("horizon below first sample");
    let n = sol.n_cells();
    let a = profile.a();
    let phi = psi_data.f().values();
    let phi_curv = psi_data.f_second().values();
    let pair_a = |row: &[f64]| -> f64 {
        crate::grid::kahan_sum(row.iter().zip(phi).zip(a).map(|((v, p), aj)| aj * v * p))
            / n as f64
    };
    let lhs = pair_a(sol.slice(i_top)) - pair_a(data.f().values());
    let integrand: Vec<f64> = (0..=i_top)
        .map(|i| {
            crate::grid::kahan_sum(sol.slice(i).iter().zip(phi_curv).map(|(v, c)| v * c))
                / n as f64
        })
        .collect();
    let rx = (lhs - trapezoid(&times[0..=i_top], &integrand)).abs() / scale;

    let ry = weak_residual_y(rho, spec, data.f(), gw_test, t_horizon)?;
    Ok((rx, ry))
}

/// Discrepancies between the two backends on identical grids and times.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrossValidation {
    pub sup: f64,
    /// `√(∫₀^T ‖Δv(t)‖²_{L²(x)} dt / T)`.
    pub l2_time: f64,
}

pub fn cross_validate(spectral: &SolutionField, oracle: &SolutionField) -> CrossValidation {
    assert_eq!(spectral.n_cells(), oracle.n_cells());
    assert_eq!(spectral.times().len(), oracle.times().len());
    for (a, b) in spectral.times().iter().zip(oracle.times()) {
        assert!((a - b).abs() <= 1e-9, "sample times differ: {a} vs {b}");
    }
    let n = spectral.n_cells();
    let sup = spectral.sup_distance(oracle);
    let sq: Vec<f64> = (0..spectral.times().len())
        .map(|i| {
            spectral
                .slice(i)
                .iter()
                .zip(oracle.slice(i))
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let horizon = spectral.times().last().unwrap() - spectral.times()[0];
    let l2_time = (trapezoid(spectral.times(), &sq) / horizon.max(1e-300)).sqrt();
    CrossValidation { sup, l2_time }
}

/// Per-frequency a-priori bounds on the default grid: the energy identity and
/// the four explicit lemma constants. `2[f]_a`, `√10`, `2√2` and `√5` are the
/// values the discrete summation-by-parts chain yields with no slack beyond
/// rounding.
pub fn lemma_suite(
    spec: &MeasureSpec,
    data: &CompatibleData,
    grid: FrequencyGrid,
    label: &str,
) -> ExperimentReport {
    use rayon::prelude::*;
    let n = data.n();
    let profile = spec.capacity(n).expect("valid grid");
    let a = profile.a().to_vec();
    let f = data.centered_f().values().to_vec();
    let fa = a_seminorm_real(&f, &a);
    let fg: Vec<f64> = f
        .iter()
        .zip(data.g().values())
        .map(|(x, g)| x + g)
        .collect();
    let fga = a_seminorm_real(&fg, &a);

    struct PerXi {
        energy: f64,
        sup_over_2fa: f64,
        h1_scaled: f64,
        k_scaled: f64,
        norm_equiv_excess: f64,
    }

    let rows: Vec<PerXi> = (0..grid.len())
        .into_par_iter()
        .map(|m| {
            let xi = grid.xi(m);
            let rhs: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new(a[j] * f[j], 0.0))
                .collect();
            let u = solve_shifted(xi, &profile, &rhs).expect("solvable");
            let uv = u.values();
            let energy = energy_residual(xi, &a, &rhs, uv);
            let sup_over_2fa = if xi != 0.0 && fa > 0.0 {
                u.sup_norm() - 2.0 * fa
            } else {
                f64::NEG_INFINITY
            };
            let h1_scaled = if xi >= 1.0 && fa > 0.0 {
                xi.sqrt() * h1_norm(uv) / fa
            } else {
                0.0
            };
            let k = solve_split(xi, &profile, data).expect("solvable");
            let k_scaled = if xi >= 1.0 && fga > 0.0 {
                xi.powf(1.5) * k.sup_norm() / fga
            } else {
                0.0
            };
            let norm_equiv_excess = h1_norm(uv) - 5.0f64.sqrt() * h1a_norm(uv, &a);
            PerXi {
                energy,
                sup_over_2fa,
                h1_scaled,
                k_scaled,
                norm_equiv_excess,
            }
        })
        .collect();

    let fold_max = |sel: fn(&PerXi) -> f64| rows.iter().map(sel).fold(f64::NEG_INFINITY, f64::max);
    let mut report = ExperimentReport::new(label);
    report.check(
        "energy_identity_relative_residual",
        fold_max(|r| r.energy),
        1e-10,
        Cmp::Le,
        ThresholdSource::Artifact,
    );
    report.check(
        "sup_bound_excess_over_2fa",
        fold_max(|r| r.sup_over_2fa),
        1e-6,
        Cmp::Le,
        ThresholdSource::AnalyticBound,
    );
    report.check(
        "h1_decay_scaled_max",
        fold_max(|r| r.h1_scaled),
        10.0f64.sqrt() + 1e-6,
        Cmp::Le,
        ThresholdSource::AnalyticBound,
    );
    report.check(
        "k_decay_scaled_max",
        fold_max(|r| r.k_scaled),
        2.0 * 2.0f64.sqrt() + 1e-6,
        Cmp::Le,
        ThresholdSource::AnalyticBound,
    );
    report.check(
        "norm_equivalence_excess",
        fold_max(|r| r.norm_equiv_excess),
        1e-8,
        Cmp::Le,
        ThresholdSource::AnalyticBound,
    );
    report
}

/// Parameters shared by the convergence experiments.
#[derive(Debug, Clone)]
pub struct ExperimentParams {
    pub n: usize,
    pub xi_max: f64,
    pub n_freqs: usize,
    pub times: Vec<f64>,
    pub holder_eps: f64,
}

/// Continuity of the solution in the measure: solve the sequence and its
/// limit from a shared `y`-space datum and require both distance sequences to
/// decrease with a ≥ 2× total reduction.
pub fn continuity_experiment(
    label: &str,
    limit_spec: &MeasureSpec,
    seq_specs: &[MeasureSpec],
    gw: &GridFunction,
    params: &ExperimentParams,
) -> ExperimentReport {
    let mut report = ExperimentReport::new(label);
    let grid = FrequencyGrid::new(params.xi_max, params.n_freqs);

    let solve_one = |spec: &MeasureSpec| -> SolutionField {
        let data = from_yspace(gw, 0.0, spec, params.n).expect("admissible datum");
        let profile = spec.capacity(params.n).expect("valid grid");
        let family = sweep(grid, &profile, &data).expect("sweep");
        synthesize(&family, &params.times, None).expect("synthesis")
    };

    let v_limit = solve_one(limit_spec);
    let limit_profile = limit_spec.capacity(params.n).expect("valid grid");
    let mut probes: Vec<usize> = (0..8)
        .map(|k| (k * params.n) / 8 + params.n / 16)
        .collect();
    for p in limit_profile.plateaus() {
        for edge in [p.start, p.end] {
            let j = ((edge * params.n as f64) as usize).min(params.n - 1);
            probes.push(j);
        }
    }
    probes.sort_unstable();
    probes.dedup();

    let mut sup_seq = Vec::with_capacity(seq_specs.len());
    let mut holder_seq = Vec::with_capacity(seq_specs.len());
    for (idx, spec) in seq_specs.iter().enumerate() {
        let v_n = solve_one(spec);
        let sup = v_n.sup_distance(&v_limit);
        let holder = probes
            .iter()
            .map(|&j| {
                let diff: Vec<f64> = v_n
                    .trace(j)
                    .iter()
                    .zip(v_limit.trace(j))
                    .map(|(a, b)| a - b)
                    .collect();
                holder_seminorm(v_n.times(), &diff, params.holder_eps)
            })
            .fold(0.0f64, f64::max);
        report.note(format!("sup_distance_{idx}"), sup);
        report.note(format!("holder_distance_{idx}"), holder);
        sup_seq.push(sup);
        holder_seq.push(holder);
    }

    decreasing_checks(&mut report, "sup", &sup_seq);
    decreasing_checks(&mut report, "holder", &holder_seq);
    report
}

fn decreasing_checks(report: &mut ExperimentReport, tag: &str, seq: &[f64]) {
    if seq.len() < 2 {
        return;
    }
    let worst_ratio = seq
        .windows(2)
        .map(|w| w[1] / w[0].max(1e-300))
        .fold(0.0f64, f64::max);
    report.check(
        format!("{tag}_strictly_decreasing_ratio"),
        worst_ratio,
        1.0,
        Cmp::Le,
        ThresholdSource::DerivedOracle,
    );
    report.check(
        format!("{tag}_total_reduction"),
        seq[0] / seq.last().unwrap().max(1e-300),
        2.0,
        Cmp::Ge,
        ThresholdSource::DerivedOracle,
    );
}

/// Initial condition for the merging-plateaus experiment.
pub enum MergeInitial<'a> {
    /// A fixed profile, curved over the plateaus: the failure configuration.
    Fixed(&'a GridFunction),
    /// Per-measure admissible data from a shared `y`-space datum: the control.
    Compatible(&'a GridFunction),
}

/// The uniform-vs-L² split at the merge point of the two-atom sequence.
///
/// With fixed incompatible data the time-L² error halves while the
/// max-over-time error at the merge point stays above half its initial value;
/// with compatible data both decrease.
pub fn counterexample_experiment(
    label: &str,
    n_list: &[u32],
    initial: MergeInitial<'_>,
    params: &ExperimentParams,
    dt: f64,
) -> ExperimentReport {
    let mut report = ExperimentReport::new(label);
    let n = params.n;
    let t_end = params.times.last().copied().unwrap_or(0.1);
    let cfg = SchemeConfig {
        dt,
        theta: Theta::Implicit,
        t_end,
    };
    let limit_spec = MeasureSpec::lebesgue_plus_delta(0.5, 0.5).unwrap();

    let run = |spec: &MeasureSpec| -> SolutionField {
        let profile = spec.capacity(n).expect("valid grid");
        let f0 = match &initial {
            MergeInitial::Fixed(f) => (*f).clone(),
            MergeInitial::Compatible(gw) => from_yspace(gw, 0.0, spec, n)
                .expect("admissible datum")
                .f()
                .clone(),
        };
        step_scheme(&profile, &f0, &cfg, &params.times).expect("oracle run")
    };

    let v_limit = run(&limit_spec);
    let merge_cell = n / 2; // cell center nearest x = 1/2
    let limit_trace = v_limit.trace(merge_cell);

    let mut m_seq = Vec::with_capacity(n_list.len());
    let mut l2_seq = Vec::with_capacity(n_list.len());
    for &nn in n_list {
        let spec = MeasureSpec::two_atoms(nn).expect("two-atom measure");
        let v_n = run(&spec);
        let trace = v_n.trace(merge_cell);
        let diff: Vec<f64> = trace
            .iter()
            .zip(&limit_trace)
            .map(|(a, b)| a - b)
            .collect();
        let m_err = v_n
            .times()
            .iter()
            .zip(&diff)
            .filter(|(&t, _)| t > 0.0)
            .map(|(_, d)| d.abs())
            .fold(0.0f64, f64::max);
        let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
        let l2 = trapezoid(v_n.times(), &sq).max(0.0).sqrt();
        report.note(format!("max_over_t_n{nn}"), m_err);
        report.note(format!("l2_in_t_n{nn}"), l2);
        m_seq.push(m_err);
        l2_seq.push(l2);
    }

    if n_list.len() >= 2 {
        report.check(
            "l2_total_reduction",
            l2_seq[0] / l2_seq.last().unwrap().max(1e-300),
            2.0,
            Cmp::Ge,
            ThresholdSource::DerivedOracle,
        );
        match initial {
            MergeInitial::Fixed(_) => {
                let floor = m_seq.iter().cloned().fold(f64::INFINITY, f64::min);
                report.check(
                    "uniform_error_floor",
                    floor / m_seq[0].max(1e-300),
                    0.5,
                    Cmp::Ge,
                    ThresholdSource::DerivedOracle,
                );
            }
            MergeInitial::Compatible(_) => {
                let worst_ratio = m_seq
                    .windows(2)
                    .map(|w| w[1] / w[0].max(1e-300))
                    .fold(0.0f64, f64::max);
                report.check(
                    "uniform_error_decreasing_ratio",
                    worst_ratio,
                    1.0,
                    Cmp::Le,
                    ThresholdSource::DerivedOracle,
                );
            }
        }
    }
    report
}

/// The tent profile of the failure configuration: peak 1 at the merge point,
/// falling to 0 at the plateau edges of the limit measure, zero outside.
pub fn merge_tent_profile(n: usize) -> GridFunction {
    GridFunction::sample(n, |x| {
        let d = (x - 0.5).abs();
        if d < 0.25 {
            1.0 - 4.0 * d
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{from_xspace, COMPAT_TOL_USER};
    use crate::synthesis::{graded_times, pushback};
    use std::f64::consts::PI;

    fn lebesgue_mode_field(n: usize, times: &[f64]) -> (SolutionField, CompatibleData) {
        // the exact separated solution injected as a field
        let lam = 4.0 * PI * PI;
        let values: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| {
                (0..n)
                    .map(|j| (-lam * t).exp() * (TAU * ((j as f64 + 0.5) / n as f64)).cos())
                    .collect()
            })
            .collect();
        let sol = SolutionField::from_parts(times.to_vec(), values, 0.0, 0.0);
        let profile = MeasureSpec::lebesgue().capacity(n).unwrap();
        let f = GridFunction::sample(n, |x| (TAU * x).cos());
        let fpp = GridFunction::sample(n, |x| -lam * (TAU * x).cos());
        let data = from_xspace(f, fpp, &profile, COMPAT_TOL_USER).unwrap();
        (sol, data)
    }

    #[test]
    fn weak_residual_x_of_exact_solution() {
        let n = 512;
        let times = graded_times(0.5, 256);
        let (sol, data) = lebesgue_mode_field(n, &times);
        let profile = MeasureSpec::lebesgue().capacity(n).unwrap();
        let r = weak_residual_x(&sol, &profile, &data, 0.5, 3);
        assert!(r <= 1e-3, "residual {r:e}");
    }

    #[test]
    fn weak_residual_x_of_constant_solution() {
        let n = 128;
        let times = graded_times(0.5, 65);
        let values: Vec<Vec<f64>> = times.iter().map(|_| vec![0.7; n]).collect();
        let sol = SolutionField::from_parts(times.clone(), values, 0.7, 0.0);
        let spec = MeasureSpec::lebesgue_plus_delta(0.5, 0.5).unwrap();
        let profile = spec.capacity(n).unwrap();
        let data = from_yspace(&GridFunction::constant(256, 0.0), 0.7, &spec, n).unwrap();
        // the rounding floor of this machine-zero check scales with the test
        // frequency through φ″ = −4π²m²·φ
        let r = weak_residual_x(&sol, &profile, &data, 0.5, 2);
        assert!(r <= 1e-14, "residual {r:e}");
    }

    #[test]
    fn weak_residuals_scale_linearly_with_data() {
        let n = 256;
        let times = graded_times(0.3, 128);
        let (sol, data) = lebesgue_mode_field(n, &times);
        let profile = MeasureSpec::lebesgue().capacity(n).unwrap();
        let r1 = weak_residual_x(&sol, &profile, &data, 0.3, 2);

        let doubled = SolutionField::from_parts(
            times.clone(),
            (0..times.len())
                .map(|i| sol.slice(i).iter().map(|v| 2.0 * v).collect())
                .collect(),
            0.0,
            0.0,
        );
        let f2 = data.f().map(|v| 2.0 * v);
        let fpp2 = data.f_second().map(|v| 2.0 * v);
        let data2 = from_xspace(f2, fpp2, &profile, COMPAT_TOL_USER).unwrap();
        let r2 = weak_residual_x(&doubled, &profile, &data2, 0.3, 2);
        // scaled residuals are invariant under data scaling
        assert!((r1 - r2).abs() <= 1e-10 * r1.max(1e-300), "{r1:e} vs {r2:e}");
    }

    #[test]
    fn weak_residual_y_reduces_to_conservation_for_constant_test() {
        let n = 256;
        let spec = MeasureSpec::lebesgue_plus_delta(0.5, 0.5).unwrap();
        let profile = spec.capacity(n).unwrap();
        let data = from_yspace(
            &GridFunction::sample(1024, |y| (TAU * y).cos()),
            0.2,
            &spec,
            n,
        )
        .unwrap();
        let sol = step_scheme(
            &profile,
            data.f(),
            &SchemeConfig {
                dt: 1e-4,
                theta: Theta::Implicit,
                t_end: 0.3,
            },
            &graded_times(0.3, 128),
        )
        .unwrap();
        let rho = pushback(&sol, &spec, 2048);
        let r = weak_residual_y(
            &rho,
            &spec,
            data.f(),
            &GridFunction::constant(256, 0.0),
            0.3,
        )
        .unwrap();
        assert!(r <= 5e-3, "conservation residual {r:e}");
    }

    #[test]
    fn cross_validation_of_identical_fields_is_zero() {
        let times = graded_times(0.2, 65);
        let (sol, _) = lebesgue_mode_field(64, &times);
        let cv = cross_validate(&sol, &sol);
        assert_eq!(cv.sup, 0.0);
        assert_eq!(cv.l2_time, 0.0);
    }

    #[test]
    fn cross_validation_of_constant_data_is_at_rounding() {
        use crate::resolvent::{sweep, FrequencyGrid};
        use crate::synthesis::synthesize;
        let n = 128;
        let spec = MeasureSpec::lebesgue_plus_delta(0.5, 0.5).unwrap();
        let profile = spec.capacity(n).unwrap();
        let data = from_yspace(&GridFunction::constant(256, 0.0), 0.8, &spec, n).unwrap();
        let dt = 1e-3;
        let times = [0.0, 0.05, 0.1];
        let oracle = step_scheme(
            &profile,
            data.f(),
            &SchemeConfig {
                dt,
                theta: Theta::Implicit,
                t_end: 0.1,
            },
            &times,
        )
        .unwrap();
        let family = sweep(FrequencyGrid::new(64.0, 64), &profile, &data).unwrap();
        let spectral = synthesize(&family, &times, None).unwrap();
        let cv = cross_validate(&spectral, &oracle);
        assert!(cv.sup <= 1e-12, "constants disagree by {:e}", cv.sup);
    }

    #[test]
    fn counterexample_control_with_compatible_data_decreases_everywhere() {
        let n = 256;
        let dt = 2e-4;
        let mut times: Vec<f64> = (1..=30).map(|k| k as f64 * dt).collect();
        times.extend(graded_times(0.15, 60));
        let mut times: Vec<f64> = times.into_iter().map(|t| (t / dt).round() * dt).collect();
        times.push(0.0);
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let params = ExperimentParams {
            n,
            xi_max: 1.0,
            n_freqs: 0,
            times,
            holder_eps: 0.1,
        };
        let gw = GridFunction::sample(1024, |y| (TAU * y).cos());
        let report = counterexample_experiment(
            "control",
            &[4, 8, 16],
            MergeInitial::Compatible(&gw),
            &params,
            dt,
        );
        print!("{}", report.summary());
        assert!(report.all_pass(), "compatible control must decrease");
    }

    #[test]
    fn continuity_experiment_on_constant_sequence_is_reflexive() {
        let spec = MeasureSpec::lebesgue_plus_delta(0.5, 0.5).unwrap();
        let params = ExperimentParams {
            n: 128,
            xi_max: 256.0,
            n_freqs: 512,
            times: graded_times(0.5, 48),
            holder_eps: 0.1,
        };
        let gw = GridFunction::sample(512, |y| (TAU * y).cos());
        let report = continuity_experiment(
            "reflexive",
            &spec,
            &[spec.clone(), spec.clone()],
            &gw,
            &params,
        );
        for row in &report.checks {
            if row.name.starts_with("sup_distance") || row.name.starts_with("holder_distance") {
                assert!(row.value <= 1e-12, "{}: {:e}", row.name, row.value);
            }
        }
    }

    #[test]
    fn counterexample_single_entry_reports_without_gates() {
        let params = ExperimentParams {
            n: 128,
            xi_max: 0.0,
            n_freqs: 0,
            times: graded_times(0.05, 40),
            holder_eps: 0.1,
        };
        let tent = merge_tent_profile(128);
        let report = counterexample_experiment(
            "singleton",
            &[8],
            MergeInitial::Fixed(&tent),
            &params,
            1e-4,
        );
        assert!(report.checks.iter().all(|c| !c.threshold.is_finite()));
        assert!(report.all_pass());
    }

    #[test]
    fn report_json_round_trips_structure() {
        let mut report = ExperimentReport::new("demo");
        report.check("alpha", 1.0, 2.0, Cmp::Le, ThresholdSource::AnalyticBound);
        report.note("beta", 0.5);
        let json = report.to_json();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["scenario"], "demo");
        assert_eq!(parsed["checks"][0]["pass"], true);
        assert!(report.summary().contains("alpha"));
    }
}
