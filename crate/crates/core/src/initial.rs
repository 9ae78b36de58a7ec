//! Initial-condition calculus: profiles `h = f∘W` with `f″ = a·g`, `g` bounded.
//!
//! Two pathways build a [`CompatibleData`]:
//!
//! * [`from_yspace`] starts from the generalized second derivative `g` given in
//!   the `y`-coordinate and integrates the profile
//!   `G(x) = b + cx + ∫₀^x ∫₀^l g(w(s)) a(s) ds dl` exactly, choosing `c` so
//!   that `G` is periodic. Data built this way is compatible by construction
//!   and affine across every plateau.
//! * [`from_xspace`] accepts user samples `(f, f″)` and checks compatibility,
//!   rejecting profiles that are curved where the capacity vanishes, the
//!   configuration for which uniform-in-time continuity is known to fail.
//!
//! The solver pipeline runs on mean-centered data; the conserved `a`-weighted
//! average is carried in the `mean` field and restored at synthesis time.

use crate::grid::GridFunction;
use crate::harmonics::Harmonics;
use crate::measure::{CapacityProfile, MeasureSpec};
use thiserror::Error;

/// Compatibility tolerance for analytically constructed data.
pub const COMPAT_TOL_ANALYTIC: f64 = 1e-8;
/// Compatibility tolerance for user-supplied grid data.
pub const COMPAT_TOL_USER: f64 = 1e-3;
/// Bound on `|g|` beyond which data is treated as inadmissible.
pub const G_MAX: f64 = 1e6;
/// Tolerance for the zero-mean requirement on `y`-space data.
pub const MEAN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InitialDataError {
    #[error("y-space datum has mean {mean:.3e}; an admissible generalized second derivative integrates to zero")]
    NonZeroMean { mean: f64 },
    #[error("incompatible data: |f''| = {value:.3e} on zero-capacity cell {cell} (limit {limit:.3e})")]
    IncompatibleData { cell: usize, value: f64, limit: f64 },
    #[error("incompatible data: |g| = {value:.3e} on cell {cell} exceeds the bound {limit:.3e}")]
    UnboundedG { cell: usize, value: f64, limit: f64 },
    #[error("grid length {got} does not match the capacity grid {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("a-weighted mean of g is {value:.3e} (limit {limit:.3e}); f' would not be periodic")]
    NonPeriodicSlope { value: f64, limit: f64 },
}

/// An admissible initial condition: profile `f`, its second derivative, the
/// bounded factor `g` with `f″ = a·g`, and the conserved `a`-weighted mean.
#[derive(Debug, Clone)]
pub struct CompatibleData {
    f: GridFunction,
    f_second: GridFunction,
    g: GridFunction,
    mean: f64,
    centered_f: GridFunction,
}

impl CompatibleData {
    /// Validate the pieces against a capacity profile and assemble.
    pub fn assemble(
        f: GridFunction,
        f_second: GridFunction,
        g: GridFunction,
        profile: &CapacityProfile,
        compat_tol: f64,
    ) -> Result<Self, InitialDataError> {
        let n = profile.n();
        for grid in [&f, &f_second, &g] {
            if grid.n() != n {
                return Err(InitialDataError::LengthMismatch {
                    got: grid.n(),
                    want: n,
                });
            }
        }
        let a = profile.a();
        let scale = f_second.sup_norm();
        for j in 0..n {
            let residual = (f_second.values()[j] - a[j] * g.values()[j]).abs();
            if residual > compat_tol * scale {
                return Err(InitialDataError::IncompatibleData {
                    cell: j,
                    value: residual,
                    limit: compat_tol * scale,
                });
            }
            if g.values()[j].abs() > G_MAX {
                return Err(InitialDataError::UnboundedG {
                    cell: j,
                    value: g.values()[j].abs(),
                    limit: G_MAX,
                });
            }
        }
        let g_mean = g.weighted_mean(a);
        let g_limit = MEAN_TOL * g.sup_norm().max(1.0);
        if g_mean.abs() > g_limit {
            return Err(InitialDataError::NonPeriodicSlope {
                value: g_mean,
                limit: g_limit,
            });
        }
        let mean = f.weighted_mean(a);
        let centered_f = f.shifted(-mean);
        Ok(Self {
            f,
            f_second,
            g,
            mean,
            centered_f,
        })
    }

    pub fn f(&self) -> &GridFunction {
        &self.f
    }

    pub fn f_second(&self) -> &GridFunction {
        &self.f_second
    }

    pub fn g(&self) -> &GridFunction {
        &self.g
    }

    /// Conserved `a`-weighted average; the solver runs on centered data and
    /// adds this back at synthesis.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn centered_f(&self) -> &GridFunction {
        &self.centered_f
    }

    pub fn n(&self) -> usize {
        self.f.n()
    }
}

/// Build compatible data from the generalized second derivative in `y`-space.
///
/// `g_samples` are samples of `g` at the centers of a uniform `y`-grid (they
/// are read through their trigonometric interpolant), `b` is the additive
/// constant of the profile. Fails with [`InitialDataError::NonZeroMean`] when
/// `∫ g ≠ 0`, which has no admissible profile.
pub fn from_yspace(
    g_samples: &GridFunction,
    b: f64,
    spec: &MeasureSpec,
    n: usize,
) -> Result<CompatibleData, InitialDataError> {
    let profile = spec
        .capacity(n)
        .expect("capacity grid validated by caller");
    let harmonics = Harmonics::from_samples(g_samples.values());
    let mean_limit = MEAN_TOL * g_samples.sup_norm().max(1.0);
    if harmonics.mean().abs() > mean_limit {
        return Err(InitialDataError::NonZeroMean {
            mean: harmonics.mean(),
        });
    }
    build_from_harmonics(&harmonics, b, spec, &profile)
}

/// Same construction, reading `g` directly as a trigonometric series.
pub fn from_yspace_harmonics(
    harmonics: &Harmonics,
    b: f64,
    spec: &MeasureSpec,
    n: usize,
) -> Result<CompatibleData, InitialDataError> {
    let profile = spec
        .capacity(n)
        .expect("capacity grid validated by caller");
    if harmonics.mean().abs() > MEAN_TOL * harmonics.coefficient_bound().max(1.0) {
        return Err(InitialDataError::NonZeroMean {
            mean: harmonics.mean(),
        });
    }
    build_from_harmonics(harmonics, b, spec, &profile)
}

fn build_from_harmonics(
    harmonics: &Harmonics,
    b: f64,
    spec: &MeasureSpec,
    profile: &CapacityProfile,
) -> Result<CompatibleData, InitialDataError> {
    let n = profile.n();
    let a = profile.a();

    // g on the x-grid as exact cell averages: the mean of g over the y-image
    // of each cell. Division by the cell-averaged a makes Σ a_j g_j /N
    // telescope to ∫ g = 0 and keeps g bounded on edge-straddling cells.
    let mut g_vals = vec![0.0; n];
    for j in 0..n {
        if a[j] > 0.0 {
            let w_lo = spec.inverse_cdf(j as f64 / n as f64);
            let w_hi = spec.inverse_cdf((j + 1) as f64 / n as f64);
            g_vals[j] = (harmonics.primitive(w_hi) - harmonics.primitive(w_lo))
                / (w_hi - w_lo);
        }
    }
    let g = GridFunction::new(g_vals);

    // Q(x) = ∫₀^x P, with P(l) = ∫₀^{w(l)} g, exact per piece of the inverse
    // table: plateaus contribute linearly, density pieces through the closed
    // double primitive.
    let mut q_centers = vec![0.0; n];
    let q_one;
    {
        let mut q_acc = 0.0f64;
        let mut target = 0usize;
        let segments = inverse_pieces(spec);
        for piece in &segments {
            let piece_q = |x: f64| -> f64 {
                if piece.slope == 0.0 {
                    harmonics.primitive(piece.y_lo) * (x - piece.x_lo)
                } else {
                    (harmonics.double_primitive(piece.y_lo + piece.slope * (x - piece.x_lo))
                        - harmonics.double_primitive(piece.y_lo))
                        / piece.slope
                }
            };
            while target < n {
                let xc = (target as f64 + 0.5) / n as f64;
                if xc > piece.x_hi {
                    break;
                }
                q_centers[target] = q_acc + piece_q(xc);
                target += 1;
            }
            q_acc += piece_q(piece.x_hi);
        }
        q_one = q_acc;
    }
    let c = -q_one;

    let f = GridFunction::new(
        (0..n)
            .map(|j| {
                let x = (j as f64 + 0.5) / n as f64;
                b + c * x + q_centers[j]
            })
            .collect(),
    );
    let f_second = GridFunction::new((0..n).map(|j| a[j] * g.values()[j]).collect());
    CompatibleData::assemble(f, f_second, g, profile, COMPAT_TOL_ANALYTIC)
}

/// One affine piece of the generalized inverse in `x`-space coordinates.
struct InversePiece {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    slope: f64,
}

fn inverse_pieces(spec: &MeasureSpec) -> Vec<InversePiece> {
    // Reconstruct the piecewise structure of w from its breakpoints in x:
    // images of measure nodes and plateau edges.
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for &bp in spec.breakpoints() {
        cuts.push(spec.cdf(bp));
        cuts.push(spec.cdf_left(bp));
    }
    for &(p, _) in spec.atoms() {
        let left = if p == 0.0 {
            spec.cdf_left(1.0)
        } else {
            spec.cdf_left(p)
        };
        cuts.push(left);
        cuts.push(spec.cdf(if p == 0.0 { 1.0 } else { p }));
    }
    cuts.retain(|&x| (0.0..=1.0).contains(&x));
    cuts.sort_by(|u, v| u.partial_cmp(v).unwrap());
    cuts.dedup_by(|u, v| (*u - *v).abs() < 1e-15);
    let mut pieces = Vec::with_capacity(cuts.len());
    for win in cuts.windows(2) {
        let (x_lo, x_hi) = (win[0], win[1]);
        if x_hi - x_lo < 1e-15 {
            continue;
        }
        let y_lo = spec.inverse_cdf(x_lo);
        let y_hi = spec.inverse_cdf(x_hi);
        pieces.push(InversePiece {
            x_lo,
            x_hi,
            y_lo,
            slope: (y_hi - y_lo) / (x_hi - x_lo),
        });
    }
    pieces
}

/// Build data from user samples of `f` and `f″` in `x`-space.
///
/// Sets `g = f″/a` off the plateaus and zero on them; rejects data whose
/// second derivative does not vanish where the capacity does.
pub fn from_xspace(
    f: GridFunction,
    f_second: GridFunction,
    profile: &CapacityProfile,
    compat_tol: f64,
) -> Result<CompatibleData, InitialDataError> {
    let n = profile.n();
    if f.n() != n || f_second.n() != n {
        return Err(InitialDataError::LengthMismatch {
            got: f.n(),
            want: n,
        });
    }
    let a = profile.a();
    let scale = f_second.sup_norm();
    let mut g_vals = vec![0.0; n];
    for j in 0..n {
        if a[j] == 0.0 {
            if f_second.values()[j].abs() > compat_tol * scale {
                return Err(InitialDataError::IncompatibleData {
                    cell: j,
                    value: f_second.values()[j].abs(),
                    limit: compat_tol * scale,
                });
            }
        } else {
            g_vals[j] = f_second.values()[j] / a[j];
            if g_vals[j].abs() > G_MAX {
                return Err(InitialDataError::UnboundedG {
                    cell: j,
                    value: g_vals[j].abs(),
                    limit: G_MAX,
                });
            }
        }
    }
    CompatibleData::assemble(f, f_second, GridFunction::new(g_vals), profile, compat_tol)
}

/// Monotonicity-limited periodic cubic interpolation (PCHIP-style slopes).
///
/// Used wherever grid samples are composed with `W`: clamped slopes keep the
/// composition free of overshoot next to plateau edges, so jumps of `f∘W`
/// stay clean.
pub fn interp_periodic(values: &[f64], x: f64) -> f64 {
    let n = values.len();
    assert!(n >= 2);
    let nf = n as f64;
    let pos = (x - x.floor()) * nf - 0.5;
    let j0 = pos.floor();
    let t = pos - j0;
    let j = ((j0 as i64).rem_euclid(n as i64)) as usize;
    let jm = (j + n - 1) % n;
    let jp = (j + 1) % n;
    let jpp = (j + 2) % n;

    let slope = |lo: usize, hi: usize| (values[hi] - values[lo]) * nf;
    let limited = |d1: f64, d2: f64| {
        if d1 * d2 <= 0.0 {
            0.0
        } else {
            2.0 * d1 * d2 / (d1 + d2)
        }
    };
    let d_prev = slope(jm, j);
    let d_mid = slope(j, jp);
    let d_next = slope(jp, jpp);
    let m0 = limited(d_prev, d_mid);
    let m1 = limited(d_mid, d_next);

    let h = 1.0 / nf;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    values[j] * h00 + h * m0 * h10 + values[jp] * h01 + h * m1 * h11
}

/// Evaluate `f(W(y))` pointwise; `f` given by x-grid samples.
pub fn compose_at(f: &GridFunction, spec: &MeasureSpec, y: f64) -> f64 {
    let x = spec.cdf(y - y.floor());
    interp_periodic(f.values(), x.min(1.0 - f64::EPSILON))
}

/// Sample `h(y) = f(W(y))` on a uniform `y`-grid. Jumps of `h` sit exactly at
/// the atoms because `W` itself jumps there.
pub fn compose_h(f: &GridFunction, spec: &MeasureSpec, y_cells: usize) -> GridFunction {
    GridFunction::new(
        (0..y_cells)
            .map(|i| compose_at(f, spec, (i as f64 + 0.5) / y_cells as f64))
            .collect(),
    )
}
