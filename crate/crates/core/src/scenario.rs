//! Scenario front end: parse a structured config, dispatch solves and
//! experiments, and emit plain-text data files plus a structured report.
//!
//! Output contract for every run directory:
//! `v.csv` (t,x,v), `rho.csv` (t,y,rho), `report.json`, `summary.txt`, and
//! `effective.toml` (the fully defaulted configuration, which re-runs
//! identically). Exit status is mapped by the binary: 0 all checks pass,
//! 1 some check failed, 2 configuration or usage error.

use crate::grid::GridFunction;
use crate::initial::{
    from_xspace, from_yspace, CompatibleData, InitialDataError, COMPAT_TOL_USER,
};
use crate::measure::{CapacityProfile, MeasureError, MeasureSpec};
use crate::oracle::{robin_flux_check, step_scheme, OracleError, SchemeConfig, Theta};
use crate::resolvent::{sweep, FrequencyGrid, SweepError};
use crate::synthesis::{
    graded_times, pushback, synthesize, RhoField, SolutionField, SynthesisError,
};
use crate::verify::{
    continuity_experiment, counterexample_experiment, cross_validate, merge_tent_profile,
    paired_residuals, weak_residual_x, Cmp, ExperimentParams, ExperimentReport, MergeInitial,
    ThresholdSource,
};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid measure: {0}")]
    Measure(#[from] MeasureError),
    #[error("initial block must set exactly one pathway: either g_yspace (+b) or f_xspace + f_second")]
    AmbiguousInitial,
    #[error("expression error in `{source_text}`: {message}")]
    Expression {
        source_text: String,
        message: String,
    },
    #[error("sample file {path}: {message}")]
    SampleFile { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Initial(#[from] InitialDataError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// configuration surface

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureConfig {
    Lebesgue,
    LebesguePlusDelta { p: f64, c: f64 },
    CantorApprox { level: u32 },
    TwoAtoms { n: u32 },
    Custom {
        breakpoints: Vec<f64>,
        densities: Vec<f64>,
        #[serde(default)]
        atoms: Vec<(f64, f64)>,
    },
}

impl MeasureConfig {
    pub fn build(&self) -> Result<MeasureSpec, MeasureError> {
        match self {
            MeasureConfig::Lebesgue => Ok(MeasureSpec::lebesgue()),
            MeasureConfig::LebesguePlusDelta { p, c } => MeasureSpec::lebesgue_plus_delta(*p, *c),
            MeasureConfig::CantorApprox { level } => MeasureSpec::cantor_approx(*level),
            MeasureConfig::TwoAtoms { n } => MeasureSpec::two_atoms(*n),
            MeasureConfig::Custom {
                breakpoints,
                densities,
                atoms,
            } => MeasureSpec::new(breakpoints.clone(), densities.clone(), atoms.clone()),
        }
    }

    fn id(&self) -> String {
        match self {
            MeasureConfig::Lebesgue => "lebesgue".into(),
            MeasureConfig::LebesguePlusDelta { p, c } => format!("delta_p{p}_c{c}"),
            MeasureConfig::CantorApprox { level } => format!("cantor{level}"),
            MeasureConfig::TwoAtoms { n } => format!("two_atoms{n}"),
            MeasureConfig::Custom { .. } => "custom".into(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_yspace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_xspace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_second: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleSpec {
    Uniform { count: usize },
    Graded { count: usize },
    Explicit { times: Vec<f64> },
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec::Graded { count: 129 }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub xi_max: f64,
    pub n_freqs: usize,
    pub dt: f64,
    pub theta: f64,
    pub t_max: f64,
    pub y_cells: usize,
    pub y_samples: usize,
    pub samples: SampleSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requested_tol: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 512,
            xi_max: 4096.0,
            n_freqs: 8192,
            dt: 1e-4,
            theta: 1.0,
            t_max: 2.0,
            y_cells: 1024,
            y_samples: 2048,
            samples: SampleSpec::default(),
            requested_tol: None,
        }
    }
}

impl GridConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("n", self.n as f64),
            ("xi_max", self.xi_max),
            ("dt", self.dt),
            ("t_max", self.t_max),
            ("y_cells", self.y_cells as f64),
            ("y_samples", self.y_samples as f64),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(ConfigError::Invalid(format!("{name} must be positive")));
            }
        }
        if self.theta != 1.0 && self.theta != 0.5 {
            return Err(ConfigError::Invalid(
                "theta must be 1 (implicit) or 0.5 (trapezoidal)".into(),
            ));
        }
        Ok(())
    }

    pub fn theta_enum(&self) -> Theta {
        if self.theta == 0.5 {
            Theta::CrankNicolson
        } else {
            Theta::Implicit
        }
    }

    /// Sample times snapped to the step grid so both backends share them.
    pub fn sample_times(&self) -> Vec<f64> {
        let raw = match &self.samples {
            SampleSpec::Uniform { count } => (0..*count)
                .map(|i| self.t_max * i as f64 / (*count - 1).max(1) as f64)
                .collect(),
            SampleSpec::Graded { count } => graded_times(self.t_max, (*count).max(2)),
            SampleSpec::Explicit { times } => times.clone(),
        };
        let mut snapped: Vec<f64> = raw
            .into_iter()
            .map(|t| (t / self.dt).round() * self.dt)
            .filter(|t| *t >= 0.0 && *t <= self.t_max + 0.5 * self.dt)
            .collect();
        snapped.push(0.0);
        snapped.sort_by(|a, b| a.partial_cmp(b).unwrap());
        snapped.dedup();
        snapped
    }
}

fn default_sequence() -> Vec<u32> {
    vec![4, 8, 16, 32]
}
fn default_cantor_levels() -> Vec<u32> {
    vec![2, 3, 4, 5]
}
fn default_holder_eps() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub sequence: Vec<u32>,
    pub cantor_levels: Vec<u32>,
    pub holder_eps: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sequence: default_sequence(),
            cantor_levels: default_cantor_levels(),
            holder_eps: default_holder_eps(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    pub dump_family: bool,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub measure: MeasureConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Cross-backend sup tolerance; calibrated per measure family.
    #[serde(default = "default_cross_tol")]
    pub cross_tol: f64,
}

fn default_cross_tol() -> f64 {
    5e-2
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.grid.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization")
    }

    pub fn id(&self) -> String {
        self.measure.id()
    }
}

// ---------------------------------------------------------------------------
// profile sources: expressions and sample files

/// Evaluate a profile source on `count` cell centers. Sources are either a
/// math expression in the named variable or `@path` pointing at two-column
/// numeric text (coordinate, value), interpolated linearly and periodically.
pub fn eval_profile(
    source: &str,
    var: &str,
    count: usize,
    base_dir: &Path,
) -> Result<GridFunction, ConfigError> {
    if let Some(path) = source.strip_prefix('@') {
        let full = base_dir.join(path);
        let pairs = load_pairs(&full)?;
        Ok(GridFunction::new(
            (0..count)
                .map(|i| interp_pairs(&pairs, (i as f64 + 0.5) / count as f64))
                .collect(),
        ))
    } else {
        let expr: meval::Expr = source.parse().map_err(|e| ConfigError::Expression {
            source_text: source.into(),
            message: format!("{e}"),
        })?;
        let func = expr.bind(var).map_err(|e| ConfigError::Expression {
            source_text: source.into(),
            message: format!("{e}"),
        })?;
        let values: Vec<f64> = (0..count)
            .map(|i| func((i as f64 + 0.5) / count as f64))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::Expression {
                source_text: source.into(),
                message: "expression produced a non-finite value".into(),
            });
        }
        Ok(GridFunction::new(values))
    }
}

fn load_pairs(path: &Path) -> Result<Vec<(f64, f64)>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError::SampleFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (a, b) = (it.next(), it.next());
        match (a, b) {
            (Some(a), Some(b)) => {
                let x: f64 = a.parse().map_err(|_| ConfigError::SampleFile {
                    path: path.to_path_buf(),
                    message: format!("line {}: bad number", lineno + 1),
                })?;
                let v: f64 = b.parse().map_err(|_| ConfigError::SampleFile {
                    path: path.to_path_buf(),
                    message: format!("line {}: bad number", lineno + 1),
                })?;
                pairs.push((x, v));
            }
            _ => {
                return Err(ConfigError::SampleFile {
                    path: path.to_path_buf(),
                    message: format!("line {}: expected two columns", lineno + 1),
                })
            }
        }
    }
    if pairs.len() < 2 {
        return Err(ConfigError::SampleFile {
            path: path.to_path_buf(),
            message: "need at least two samples".into(),
        });
    }
    pairs.sort_by(|u, v| u.0.partial_cmp(&v.0).unwrap());
    Ok(pairs)
}

fn interp_pairs(pairs: &[(f64, f64)], x: f64) -> f64 {
    let x = x - x.floor();
    let idx = pairs.partition_point(|&(p, _)| p <= x);
    let (x0, v0, x1, v1) = if idx == 0 {
        let &(xl, vl) = pairs.last().unwrap();
        (xl - 1.0, vl, pairs[0].0, pairs[0].1)
    } else if idx == pairs.len() {
        let &(xl, vl) = pairs.last().unwrap();
        (xl, vl, pairs[0].0 + 1.0, pairs[0].1)
    } else {
        (
            pairs[idx - 1].0,
            pairs[idx - 1].1,
            pairs[idx].0,
            pairs[idx].1,
        )
    };
    if x1 == x0 {
        v0
    } else {
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }
}

// ---------------------------------------------------------------------------
// resolved scenario and runners

pub struct Scenario {
    pub config: ScenarioConfig,
    pub spec: MeasureSpec,
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Oracle,
    Verify,
    Converge,
    Counterexample,
}

impl Scenario {
    pub fn resolve(config: ScenarioConfig, base_dir: &Path) -> Result<Self, ConfigError> {
        let spec = config.measure.build()?;
        Ok(Self {
            config,
            spec,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn build_data(&self) -> Result<CompatibleData, RunError> {
        let g = &self.config.grid;
        let init = &self.config.initial;
        match (
            &init.g_yspace,
            &init.f_xspace,
            &init.f_second,
        ) {
            (Some(gy), None, None) => {
                let samples = eval_profile(gy, "y", g.y_samples, &self.base_dir)?;
                Ok(from_yspace(
                    &samples,
                    init.b.unwrap_or(0.0),
                    &self.spec,
                    g.n,
                )?)
            }
            (None, Some(fx), Some(fs)) => {
                let f = eval_profile(fx, "x", g.n, &self.base_dir)?;
                let fpp = eval_profile(fs, "x", g.n, &self.base_dir)?;
                let profile = self.spec.capacity(g.n)?;
                Ok(from_xspace(f, fpp, &profile, COMPAT_TOL_USER)?)
            }
            _ => Err(ConfigError::AmbiguousInitial.into()),
        }
    }

    fn profile(&self) -> Result<CapacityProfile, RunError> {
        Ok(self.spec.capacity(self.config.grid.n)?)
    }

    fn run_spectral(
        &self,
        data: &CompatibleData,
        times: &[f64],
    ) -> Result<(SolutionField, RhoField, Option<String>), RunError> {
        let g = &self.config.grid;
        let profile = self.profile()?;
        let family = sweep(FrequencyGrid::new(g.xi_max, g.n_freqs), &profile, data)?;
        let sol = synthesize(&family, times, g.requested_tol)?;
        let rho = pushback(&sol, &self.spec, g.y_cells);
        let dump = self
            .config
            .output
            .dump_family
            .then(|| family.dump_table());
        Ok((sol, rho, dump))
    }

    fn run_oracle(
        &self,
        data: &CompatibleData,
        times: &[f64],
    ) -> Result<SolutionField, RunError> {
        let g = &self.config.grid;
        let profile = self.profile()?;
        let cfg = SchemeConfig {
            dt: g.dt,
            theta: g.theta_enum(),
            t_end: g.t_max,
        };
        Ok(step_scheme(&profile, data.f(), &cfg, times)?)
    }

    fn structural_checks(
        &self,
        report: &mut ExperimentReport,
        tag: &str,
        sol: &SolutionField,
        profile: &CapacityProfile,
        data: &CompatibleData,
        is_oracle: bool,
    ) {
        let f_scale = data.f().sup_norm().max(1.0);
        let conservation = sol.conservation_error(profile);
        if is_oracle {
            report.check(
                format!("{tag}_conservation"),
                conservation,
                1e-13 * f_scale,
                Cmp::Le,
                ThresholdSource::Artifact,
            );
            if !profile.plateaus().is_empty() {
                report.check(
                    format!("{tag}_plateau_curvature"),
                    sol.plateau_curvature(profile),
                    1e-10 * sol.sup_norm().max(1e-300),
                    Cmp::Le,
                    ThresholdSource::Artifact,
                );
            }
        } else {
            report.check(
                format!("{tag}_conservation"),
                conservation,
                sol.tail_bound().max(1e-2 * data.f().sup_norm().max(1e-300)),
                Cmp::Le,
                ThresholdSource::Artifact,
            );
            report.note(format!("{tag}_tail_bound"), sol.tail_bound());
        }
        let horizon = *sol.times().last().unwrap();
        if sol.times().len() >= 64 {
            let rx = weak_residual_x(sol, profile, data, horizon, 4);
            if is_oracle {
                report.check(
                    format!("{tag}_weak_residual_x"),
                    rx,
                    5e-3,
                    Cmp::Le,
                    ThresholdSource::DerivedOracle,
                );
            } else {
                // trig test functions amplify the spectral truncation tail by
                // 4π²m²; the gated spectral checks are the paired ones, whose
                // test profiles have balanced norms
                report.note(format!("{tag}_weak_residual_x"), rx);
            }
        }
    }

    fn weak_residual_pair_checks(
        &self,
        report: &mut ExperimentReport,
        sol: &SolutionField,
        rho: &RhoField,
        profile: &CapacityProfile,
        data: &CompatibleData,
    ) {
        // mixed parity so the pairing cannot vanish identically against
        // symmetric data
        let gw_test = GridFunction::sample(self.config.grid.y_samples, |y| {
            (std::f64::consts::TAU * y).sin() + (std::f64::consts::TAU * y).cos()
        });
        let horizon = *sol.times().last().unwrap();
        match paired_residuals(sol, rho, &self.spec, profile, data, &gw_test, horizon) {
            Ok((rx, ry)) => {
                report.check(
                    "weak_residual_x_paired",
                    rx,
                    5e-3,
                    Cmp::Le,
                    ThresholdSource::DerivedOracle,
                );
                report.check(
                    "weak_residual_y_paired",
                    ry,
                    5e-3,
                    Cmp::Le,
                    ThresholdSource::DerivedOracle,
                );
                report.check(
                    "weak_residual_forms_agree",
                    (rx - ry).abs(),
                    2e-3,
                    Cmp::Le,
                    ThresholdSource::Artifact,
                );
            }
            Err(e) => {
                log::warn!("paired residual skipped: {e}");
            }
        }
    }

    fn robin_checks(
        &self,
        report: &mut ExperimentReport,
        sol: &SolutionField,
        profile: &CapacityProfile,
    ) -> Option<String> {
        if profile.plateaus().len() != 1 {
            return None;
        }
        match robin_flux_check(sol, profile) {
            Ok(table) => {
                report.note("robin_b_effective", table.b_effective);
                report.check(
                    "robin_flux_agreement",
                    table.max_disagreement(),
                    5e-2,
                    Cmp::Le,
                    ThresholdSource::DerivedOracle,
                );
                let mut csv = String::from("t,left_slope,right_slope,scaled_jump\n");
                for r in &table.rows {
                    csv.push_str(&format!(
                        "{},{},{},{}\n",
                        r.t, r.left_slope, r.right_slope, r.scaled_jump
                    ));
                }
                Some(csv)
            }
            Err(e) => {
                log::warn!("flux check skipped: {e}");
                None
            }
        }
    }

    /// Execute a command, write artifacts into `out_dir`, return the report.
    pub fn run(&self, cmd: Command, out_dir: &Path) -> Result<ExperimentReport, RunError> {
        fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
            path: out_dir.to_path_buf(),
            source,
        })?;
        let report = match cmd {
            Command::Solve => self.cmd_solve(out_dir)?,
            Command::Oracle => self.cmd_oracle(out_dir)?,
            Command::Verify => self.cmd_verify(out_dir)?,
            Command::Converge => self.cmd_converge()?,
            Command::Counterexample => self.cmd_counterexample()?,
        };
        write_file(out_dir, "effective.toml", &self.config.to_toml())?;
        write_file(out_dir, "report.json", &report.to_json())?;
        write_file(out_dir, "summary.txt", &report.summary())?;
        Ok(report)
    }

    fn cmd_solve(&self, out_dir: &Path) -> Result<ExperimentReport, RunError> {
        let data = self.build_data()?;
        let profile = self.profile()?;
        let times = self.config.grid.sample_times();
        let (sol, rho, dump) = self.run_spectral(&data, &times)?;
        let mut report = ExperimentReport::new(format!("solve:{}", self.config.id()));
        self.structural_checks(&mut report, "spectral", &sol, &profile, &data, false);
        self.weak_residual_pair_checks(&mut report, &sol, &rho, &profile, &data);
        write_file(out_dir, "v.csv", &field_csv(&sol, "x"))?;
        write_file(out_dir, "rho.csv", &rho_csv(&rho))?;
        if let Some(dump) = dump {
            write_file(out_dir, "resolvent.csv", &dump)?;
        }
        Ok(report)
    }

    fn cmd_oracle(&self, out_dir: &Path) -> Result<ExperimentReport, RunError> {
        let data = self.build_data()?;
        let profile = self.profile()?;
        let times = self.config.grid.sample_times();
        let sol = self.run_oracle(&data, &times)?;
        let rho = pushback(&sol, &self.spec, self.config.grid.y_cells);
        let mut report = ExperimentReport::new(format!("oracle:{}", self.config.id()));
        self.structural_checks(&mut report, "oracle", &sol, &profile, &data, true);
        self.weak_residual_pair_checks(&mut report, &sol, &rho, &profile, &data);
        if let Some(csv) = self.robin_checks(&mut report, &sol, &profile) {
            write_file(out_dir, "robin.csv", &csv)?;
        }
        write_file(out_dir, "v.csv", &field_csv(&sol, "x"))?;
        write_file(out_dir, "rho.csv", &rho_csv(&rho))?;
        Ok(report)
    }

    fn cmd_verify(&self, out_dir: &Path) -> Result<ExperimentReport, RunError> {
        let data = self.build_data()?;
        let profile = self.profile()?;
        let times = self.config.grid.sample_times();
        let (sol, rho, dump) = self.run_spectral(&data, &times)?;
        let oracle_sol = self.run_oracle(&data, &times)?;
        let mut report = ExperimentReport::new(format!("verify:{}", self.config.id()));
        self.structural_checks(&mut report, "spectral", &sol, &profile, &data, false);
        self.structural_checks(&mut report, "oracle", &oracle_sol, &profile, &data, true);
        self.weak_residual_pair_checks(&mut report, &sol, &rho, &profile, &data);
        let cv = cross_validate(&sol, &oracle_sol);
        report.check(
            "cross_backend_sup",
            cv.sup,
            self.config.cross_tol,
            Cmp::Le,
            ThresholdSource::DerivedOracle,
        );
        report.note("cross_backend_l2_time", cv.l2_time);
        if let Some(csv) = self.robin_checks(&mut report, &oracle_sol, &profile) {
            write_file(out_dir, "robin.csv", &csv)?;
        }
        write_file(out_dir, "v.csv", &field_csv(&sol, "x"))?;
        write_file(out_dir, "v_oracle.csv", &field_csv(&oracle_sol, "x"))?;
        write_file(out_dir, "rho.csv", &rho_csv(&rho))?;
        if let Some(dump) = dump {
            write_file(out_dir, "resolvent.csv", &dump)?;
        }
        Ok(report)
    }

    fn cmd_converge(&self) -> Result<ExperimentReport, RunError> {
        let g = &self.config.grid;
        let exp = &self.config.experiment;
        let params = ExperimentParams {
            n: g.n,
            xi_max: g.xi_max,
            n_freqs: g.n_freqs,
            times: graded_times(g.t_max.min(1.0), 97),
            holder_eps: exp.holder_eps,
        };
        let gw = GridFunction::sample(g.y_samples, |y| (std::f64::consts::TAU * y).cos());
        let mut report = ExperimentReport::new(format!("converge:{}", self.config.id()));
        if !exp.sequence.is_empty() {
            let limit = MeasureSpec::lebesgue_plus_delta(0.5, 0.5)?;
            let seq: Result<Vec<MeasureSpec>, MeasureError> = exp
                .sequence
                .iter()
                .map(|&n| MeasureSpec::two_atoms(n))
                .collect();
            report.merge(continuity_experiment(
                "merging_atoms",
                &limit,
                &seq?,
                &gw,
                &params,
            ));
        }
        if !exp.cantor_levels.is_empty() {
            let reference_level = exp.cantor_levels.iter().copied().max().unwrap() + 2;
            let limit = MeasureSpec::cantor_approx(reference_level)?;
            let seq: Result<Vec<MeasureSpec>, MeasureError> = exp
                .cantor_levels
                .iter()
                .map(|&l| MeasureSpec::cantor_approx(l))
                .collect();
            report.merge(continuity_experiment(
                "cantor_approximants",
                &limit,
                &seq?,
                &gw,
                &params,
            ));
        }
        Ok(report)
    }

    fn cmd_counterexample(&self) -> Result<ExperimentReport, RunError> {
        let g = &self.config.grid;
        let exp = &self.config.experiment;
        let t_end = g.t_max.min(0.25);
        let mut times: Vec<f64> = (1..=50).map(|k| k as f64 * g.dt).collect();
        times.extend(graded_times(t_end, 100));
        let mut times: Vec<f64> = times
            .into_iter()
            .map(|t| (t / g.dt).round() * g.dt)
            .filter(|&t| t <= t_end + 0.5 * g.dt)
            .collect();
        times.push(0.0);
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let params = ExperimentParams {
            n: g.n,
            xi_max: g.xi_max,
            n_freqs: g.n_freqs,
            times,
            holder_eps: exp.holder_eps,
        };
        let tent = merge_tent_profile(g.n);
        let mut report = counterexample_experiment(
            format!("counterexample:{}", self.config.id()).as_str(),
            &exp.sequence,
            MergeInitial::Fixed(&tent),
            &params,
            g.dt,
        );
        let gw = GridFunction::sample(g.y_samples, |y| (std::f64::consts::TAU * y).cos());
        report.merge(counterexample_experiment(
            "compatible_control",
            &exp.sequence,
            MergeInitial::Compatible(&gw),
            &params,
            g.dt,
        ));
        Ok(report)
    }
}

fn field_csv(sol: &SolutionField, coord: &str) -> String {
    let n = sol.n_cells();
    let mut out = format!("t,{coord},v\n");
    for (i, &t) in sol.times().iter().enumerate() {
        for j in 0..n {
            out.push_str(&format!("{},{},{}\n", t, (j as f64 + 0.5) / n as f64, sol.value(i, j)));
        }
    }
    out
}

fn rho_csv(rho: &RhoField) -> String {
    let m = rho.y_cells;
    let mut out = String::from("t,y,rho\n");
    for (i, &t) in rho.times.iter().enumerate() {
        for j in 0..m {
            out.push_str(&format!(
                "{},{},{}\n",
                t,
                (j as f64 + 0.5) / m as f64,
                rho.values[i][j]
            ));
        }
    }
    out
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), RunError> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|source| RunError::Io { path, source })
}

// ---------------------------------------------------------------------------
// canned scenarios

/// Built-in scenarios; names map onto the standard examples the solver is
/// demonstrated on.
pub fn canned_scenario(name: &str) -> Option<(ScenarioConfig, Command)> {
    let mut cfg = ScenarioConfig {
        measure: MeasureConfig::Lebesgue,
        initial: InitialConfig::default(),
        grid: GridConfig::default(),
        experiment: ExperimentConfig::default(),
        output: OutputConfig::default(),
        cross_tol: default_cross_tol(),
    };
    match name {
        "lebesgue" => {
            cfg.initial.f_xspace = Some("cos(2*pi*x)".into());
            cfg.initial.f_second = Some("-4*pi^2*cos(2*pi*x)".into());
            cfg.grid.t_max = 0.5;
            cfg.cross_tol = 2.5e-2;
            Some((cfg, Command::Verify))
        }
        "robin" => {
            cfg.measure = MeasureConfig::LebesguePlusDelta { p: 0.5, c: 0.5 };
            cfg.initial.g_yspace = Some("sin(2*pi*y)".into());
            cfg.initial.b = Some(0.0);
            cfg.grid.t_max = 0.5;
            cfg.grid.dt = 5e-5;
            cfg.grid.samples = SampleSpec::Graded { count: 129 };
            Some((cfg, Command::Oracle))
        }
        "cantor" => {
            cfg.measure = MeasureConfig::CantorApprox { level: 4 };
            cfg.initial.g_yspace = Some("cos(2*pi*y)".into());
            cfg.initial.b = Some(0.0);
            cfg.grid.t_max = 0.5;
            Some((cfg, Command::Verify))
        }
        "merge-atoms" => {
            cfg.measure = MeasureConfig::LebesguePlusDelta { p: 0.5, c: 0.5 };
            cfg.initial.g_yspace = Some("cos(2*pi*y)".into());
            cfg.initial.b = Some(0.0);
            cfg.experiment.cantor_levels = vec![];
            Some((cfg, Command::Converge))
        }
        "incompatible" => {
            cfg.measure = MeasureConfig::LebesguePlusDelta { p: 0.5, c: 0.5 };
            cfg.initial.g_yspace = Some("cos(2*pi*y)".into());
            cfg.initial.b = Some(0.0);
            Some((cfg, Command::Counterexample))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = r#"
            cross_tol = 0.025

            [measure]
            kind = "lebesgue_plus_delta"
            p = 0.5
            c = 0.5

            [initial]
            g_yspace = "cos(2*pi*y)"
            b = 0.1

            [grid]
            n = 128
            xi_max = 256.0
            n_freqs = 512
            dt = 1e-3
            theta = 1.0
            t_max = 0.5
            y_cells = 256
            y_samples = 512
            samples = { kind = "graded", count = 65 }

            [experiment]
            sequence = [4, 8]
            cantor_levels = []
            holder_eps = 0.1
        "#;
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(cfg.grid.n, 128);
        assert_eq!(cfg.cross_tol, 0.025);
        let scenario = Scenario::resolve(cfg, Path::new(".")).unwrap();
        let data = scenario.build_data().unwrap();
        assert_eq!(data.n(), 128);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"
            [measure]
            kind = "lebesgue"
            [initial]
            g_yspace = "0"
            [grid]
            bogus_key = 1
        "#;
        assert!(matches!(
            ScenarioConfig::from_toml(text),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn rejects_two_pathways() {
        let text = r#"
            [measure]
            kind = "lebesgue"
            [initial]
            g_yspace = "cos(2*pi*y)"
            f_xspace = "cos(2*pi*x)"
            f_second = "-cos(2*pi*x)"
        "#;
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        let scenario = Scenario::resolve(cfg, Path::new(".")).unwrap();
        assert!(matches!(
            scenario.build_data(),
            Err(RunError::Config(ConfigError::AmbiguousInitial))
        ));
    }

    #[test]
    fn rejects_bad_theta() {
        let text = r#"
            [measure]
            kind = "lebesgue"
            [initial]
            g_yspace = "0"
            [grid]
            theta = 0.75
        "#;
        assert!(ScenarioConfig::from_toml(text).is_err());
    }

    #[test]
    fn expression_and_file_profiles() {
        let dir = std::env::temp_dir().join("heatw_profile_test");
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("g.dat"), "0.0 1.0\n0.5 -1.0\n").unwrap();
        let from_expr = eval_profile("cos(2*pi*y)", "y", 64, &dir).unwrap();
        assert!((from_expr.values()[0] - (std::f64::consts::TAU * (0.5 / 64.0)).cos()).abs() < 1e-12);
        let from_file = eval_profile("@g.dat", "y", 8, &dir).unwrap();
        assert_eq!(from_file.n(), 8);
        // linear between (0,1) and (0.5,-1)
        assert!((from_file.values()[1] - interp_pairs(&[(0.0, 1.0), (0.5, -1.0)], 3.0 / 16.0)).abs() < 1e-12);
    }

    #[test]
    #[allow(clippy::field_reassign_with_default)]
    fn sample_times_are_snapped_and_start_at_zero() {
        let mut grid = GridConfig::default();
        grid.dt = 1e-3;
        grid.t_max = 0.1;
        grid.samples = SampleSpec::Uniform { count: 33 };
        let times = grid.sample_times();
        assert_eq!(times[0], 0.0);
        for &t in &times {
            let steps = t / grid.dt;
            assert!((steps - steps.round()).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn effective_config_round_trips() {
        let (cfg, _) = canned_scenario("lebesgue").unwrap();
        let text = cfg.to_toml();
        let re: ScenarioConfig = toml::from_str(&text).unwrap();
        assert_eq!(re.grid, cfg.grid);
        assert_eq!(re.experiment, cfg.experiment);
    }

    #[test]
    fn all_canned_names_resolve() {
        for name in ["lebesgue", "robin", "cantor", "merge-atoms", "incompatible"] {
            assert!(canned_scenario(name).is_some(), "{name}");
        }
        assert!(canned_scenario("nope").is_none());
    }
}
