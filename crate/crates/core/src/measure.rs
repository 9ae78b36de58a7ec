//! Probability measures on the torus with Lebesgue ≪ μ, their distribution
//! functions, generalized inverses, and the derived capacity coefficient.
//!
//! A [`MeasureSpec`] is a piecewise-constant density plus finitely many atoms.
//! That class keeps everything exactly computable: the CDF `W` is piecewise
//! affine with jumps at the atoms, its generalized inverse
//! `w(s) = sup{r : W(r) ≤ s}` is piecewise affine and continuous, and the
//! capacity `a = w′` is piecewise constant, vanishing exactly on the intervals
//! `[W(p⁻), W(p⁻)+c]` that atoms `(p, c)` map to ("plateaus").
//!
//! Conventions: `W(0) = 0`, `W` right-continuous, `W(x+1) = W(x) + 1`. An atom
//! sitting at `0` therefore produces the jump at `1` (so `W(0⁻) = -c`), and its
//! plateau `[1-c, 1]` touches the torus point `0` from the left.

use thiserror::Error;

/// Default lower bound on the piecewise densities. Strictly positive densities
/// are the computable surrogate for "Lebesgue ≪ μ": they make `W` strictly
/// increasing and `w` absolutely continuous.
pub const DEFAULT_MIN_DENSITY: f64 = 1e-9;

/// Absolute tolerance for the total-mass-one check.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("total mass is {total}, not 1 within {MASS_TOL}")]
    MassNotNormalized { total: f64 },
    #[error("density {density} on cell {cell} is below the minimum {min}; the measure would not dominate Lebesgue")]
    DensityBelowMinimum { cell: usize, density: f64, min: f64 },
    #[error("breakpoints must be strictly increasing from 0 to 1")]
    InvalidBreakpoints,
    #[error("densities length {got} does not match {want} cells")]
    DensityCountMismatch { got: usize, want: usize },
    #[error("atoms must have distinct locations; {location} repeats")]
    DuplicateAtom { location: f64 },
    #[error("atom at {location} with mass {mass} is invalid (need location in [0,1) and positive mass)")]
    InvalidAtom { location: f64, mass: f64 },
    #[error("inputs contain a non-finite value")]
    NonFinite,
    #[error("capacity grid needs at least 4 cells, got {n}")]
    TooFewCells { n: usize },
}

/// Density-plus-atoms description of a probability measure μ on the torus.
///
/// The single source of truth for `W`, `w` and `a`: all three are evaluated
/// from precomputed exact piecewise tables, never from grid samples.
#[derive(Debug, Clone)]
pub struct MeasureSpec {
    breakpoints: Vec<f64>,
    densities: Vec<f64>,
    atoms: Vec<(f64, f64)>,
    // Exact piecewise tables, derived at construction.
    nodes: Vec<f64>,
    node_w: Vec<f64>,
    node_density: Vec<f64>,
    node_jump: Vec<f64>,
    inv_segments: Vec<InvSegment>,
}

/// One affine piece of the generalized inverse: `w(s) = x_lo + slope·(s - s_lo)`
/// for `s ∈ [s_lo, s_hi]`. Plateaus have `slope = 0`.
#[derive(Debug, Clone, Copy)]
struct InvSegment {
    s_lo: f64,
    s_hi: f64,
    x_lo: f64,
    slope: f64,
}

/// Maximal interval of the `x`-coordinate where the capacity vanishes,
/// together with the atom that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub start: f64,
    pub end: f64,
    /// Location of the originating atom in the `y`-coordinate.
    pub atom: f64,
}

impl Plateau {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// Exact cell averages of the capacity `a = w′` on a uniform grid.
#[derive(Debug, Clone)]
pub struct CapacityProfile {
    n_cells: usize,
    a_values: Vec<f64>,
    plateaus: Vec<Plateau>,
}

impl CapacityProfile {
    pub fn n(&self) -> usize {
        self.n_cells
    }

    pub fn a(&self) -> &[f64] {
        &self.a_values
    }

    pub fn plateaus(&self) -> &[Plateau] {
        &self.plateaus
    }

    /// Cells whose closure lies inside a plateau; exactly the cells with `a_j = 0`.
    pub fn plateau_cells(&self) -> Vec<usize> {
        (0..self.n_cells).filter(|&j| self.is_plateau_cell(j)).collect()
    }

    pub fn is_plateau_cell(&self, j: usize) -> bool {
        self.a_values[j] == 0.0
    }
}

impl MeasureSpec {
    /// Validate and build with the default minimum density.
    pub fn new(
        breakpoints: Vec<f64>,
        densities: Vec<f64>,
        atoms: Vec<(f64, f64)>,
    ) -> Result<Self, MeasureError> {
        Self::with_min_density(breakpoints, densities, atoms, DEFAULT_MIN_DENSITY)
    }

    pub fn with_min_density(
        breakpoints: Vec<f64>,
        densities: Vec<f64>,
        mut atoms: Vec<(f64, f64)>,
        min_density: f64,
    ) -> Result<Self, MeasureError> {
        if breakpoints.iter().any(|v| !v.is_finite())
            || densities.iter().any(|v| !v.is_finite())
            || atoms.iter().any(|&(p, c)| !p.is_finite() || !c.is_finite())
        {
            return Err(MeasureError::NonFinite);
        }
        if breakpoints.len() < 2
            || breakpoints[0] != 0.0
            || *breakpoints.last().unwrap() != 1.0
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(MeasureError::InvalidBreakpoints);
        }
        let cells = breakpoints.len() - 1;
        if densities.len() != cells {
            return Err(MeasureError::DensityCountMismatch {
                got: densities.len(),
                want: cells,
            });
        }
        for (i, &d) in densities.iter().enumerate() {
            if d < min_density {
                return Err(MeasureError::DensityBelowMinimum {
                    cell: i,
                    density: d,
                    min: min_density,
                });
            }
        }
        for &(p, c) in &atoms {
            if !(0.0..1.0).contains(&p) || c <= 0.0 {
                return Err(MeasureError::InvalidAtom { location: p, mass: c });
            }
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            let loc = atoms
                .windows(2)
                .find(|w| w[0].0 == w[1].0)
                .unwrap()[0]
                .0;
            return Err(MeasureError::DuplicateAtom { location: loc });
        }
        let density_mass: f64 = densities
            .iter()
            .zip(breakpoints.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .sum();
        let atom_mass: f64 = atoms.iter().map(|&(_, c)| c).sum();
        let total = density_mass + atom_mass;
        if (total - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::MassNotNormalized { total });
        }

        let mut spec = Self {
            breakpoints,
            densities,
            atoms,
            nodes: Vec::new(),
            node_w: Vec::new(),
            node_density: Vec::new(),
            node_jump: Vec::new(),
            inv_segments: Vec::new(),
        };
        spec.build_tables();
        Ok(spec)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    fn build_tables(&mut self) {
        // Jump positions: an atom at 0 jumps at 1 (right-continuity, W(0)=0).
        let jumps: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .map(|&(p, c)| if p == 0.0 { (1.0, c) } else { (p, c) })
            .collect();

        let mut nodes: Vec<f64> = self.breakpoints.clone();
        nodes.extend(jumps.iter().map(|&(q, _)| q));
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nodes.dedup();

        let jump_at = |x: f64| -> f64 {
            jumps
                .iter()
                .find(|&&(q, _)| q == x)
                .map(|&(_, c)| c)
                .unwrap_or(0.0)
        };
        let density_at = |x: f64| -> f64 {
            // density of the original cell containing x (x strictly inside [0,1))
            let i = match self
                .breakpoints
                .binary_search_by(|b| b.partial_cmp(&x).unwrap())
            {
                Ok(i) => i,
                Err(i) => i - 1,
            };
            self.densities[i.min(self.densities.len() - 1)]
        };

        let m = nodes.len();
        let mut node_w = vec![0.0; m];
        let mut node_density = vec![0.0; m];
        let mut node_jump = vec![0.0; m];
        for i in 0..m - 1 {
            node_density[i] = density_at(0.5 * (nodes[i] + nodes[i + 1]));
        }
        for i in 1..m {
            node_jump[i] = jump_at(nodes[i]);
            node_w[i] =
                node_w[i - 1] + node_density[i - 1] * (nodes[i] - nodes[i - 1]) + node_jump[i];
        }
        // Pin the endpoint exactly; accumulated rounding stays within MASS_TOL.
        node_w[m - 1] = 1.0;

        let mut segs = Vec::with_capacity(2 * m);
        for i in 0..m - 1 {
            if node_jump[i] > 0.0 {
                segs.push(InvSegment {
                    s_lo: node_w[i] - node_jump[i],
                    s_hi: node_w[i],
                    x_lo: nodes[i],
                    slope: 0.0,
                });
            }
            segs.push(InvSegment {
                s_lo: node_w[i],
                s_hi: node_w[i] + node_density[i] * (nodes[i + 1] - nodes[i]),
                x_lo: nodes[i],
                slope: 1.0 / node_density[i],
            });
        }
        if node_jump[m - 1] > 0.0 {
            segs.push(InvSegment {
                s_lo: node_w[m - 1] - node_jump[m - 1],
                s_hi: node_w[m - 1],
                x_lo: 1.0,
                slope: 0.0,
            });
        }
        // Stitch the s-intervals exactly so lookups never fall in a gap.
        for i in 1..segs.len() {
            segs[i].s_lo = segs[i - 1].s_hi;
        }
        if let Some(last) = segs.last_mut() {
            last.s_hi = 1.0;
        }
        self.nodes = nodes;
        self.node_w = node_w;
        self.node_density = node_density;
        self.node_jump = node_jump;
        self.inv_segments = segs;
    }

    /// The distribution function `W` at any real `x`, with the periodic
    /// extension `W(x+1) = W(x) + 1`.
    pub fn cdf(&self, x: f64) -> f64 {
        let shift = x.floor();
        let frac = x - shift;
        shift + self.cdf01(frac)
    }

    fn cdf01(&self, x: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&x));
        if x >= 1.0 {
            return 1.0;
        }
        let i = match self
            .nodes
            .binary_search_by(|n| n.partial_cmp(&x).unwrap())
        {
            Ok(i) => return self.node_w[i],
            Err(i) => i - 1,
        };
        self.node_w[i] + self.node_density[i] * (x - self.nodes[i])
    }

    /// Left limit `W(x⁻)`, needed to place plateaus.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let shift = x.floor();
        let frac = x - shift;
        if frac == 0.0 {
            // W(k⁻) = W(1⁻) + (k-1)
            return shift - 1.0 + self.cdf01_left1();
        }
        let v = match self
            .nodes
            .binary_search_by(|n| n.partial_cmp(&frac).unwrap())
        {
            Ok(i) => self.node_w[i] - self.node_jump[i],
            Err(i) => self.node_w[i - 1] + self.node_density[i - 1] * (frac - self.nodes[i - 1]),
        };
        shift + v
    }

    fn cdf01_left1(&self) -> f64 {
        let m = self.nodes.len();
        self.node_w[m - 1] - self.node_jump[m - 1]
    }

    /// Generalized inverse `w(s) = sup{r : W(r) ≤ s}`, periodically extended.
    /// Continuous and nondecreasing; constant on `[W(p⁻), W(p)]` for every atom.
    pub fn inverse_cdf(&self, s: f64) -> f64 {
        let shift = s.floor();
        let frac = s - shift;
        shift + self.inv01(frac)
    }

    fn inv01(&self, s: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&s));
        let segs = &self.inv_segments;
        let mut lo = 0usize;
        let mut hi = segs.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if segs[mid].s_hi < s {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let seg = &segs[lo];
        (seg.x_lo + seg.slope * (s - seg.s_lo)).min(1.0)
    }

    /// Exact cell averages of `a = w′`: `a_j = N·(w((j+1)/N) − w(j/N))`.
    ///
    /// Cell averages rather than point samples keep `Σ a_j/N = 1` to rounding
    /// and make `a_j = 0` exact on cells inside a plateau.
    pub fn capacity(&self, n: usize) -> Result<CapacityProfile, MeasureError> {
        if n < 4 {
            return Err(MeasureError::TooFewCells { n });
        }
        let nf = n as f64;
        let mut w_edges = Vec::with_capacity(n + 1);
        for j in 0..=n {
            w_edges.push(self.inv01(j as f64 / nf));
        }
        let a_values: Vec<f64> = (0..n).map(|j| nf * (w_edges[j + 1] - w_edges[j])).collect();
        let plateaus = self
            .atoms
            .iter()
            .map(|&(p, c)| {
                let left = if p == 0.0 {
                    self.cdf01_left1()
                } else {
                    self.cdf_left(p)
                };
                Plateau {
                    start: left,
                    end: left + c,
                    atom: p,
                }
            })
            .collect();
        Ok(CapacityProfile {
            n_cells: n,
            a_values,
            plateaus,
        })
    }

    // ---- canned measures ------------------------------------------------

    /// The Lebesgue measure: `W = w = identity`, `a ≡ 1`.
    pub fn lebesgue() -> Self {
        Self::new(vec![0.0, 1.0], vec![1.0], vec![]).unwrap()
    }

    /// `(1−c)·Lebesgue + c·δ_p`.
    pub fn lebesgue_plus_delta(p: f64, c: f64) -> Result<Self, MeasureError> {
        Self::new(vec![0.0, 1.0], vec![1.0 - c], vec![(p, c)])
    }

    /// The merging-atoms sequence `½L + ¼δ_{½−1/n} + ¼δ_{½+1/n}`; its vague
    /// limit is `½L + ½δ_{½}`. Needs `n ≥ 3` so both atoms stay inside (0,1).
    pub fn two_atoms(n: u32) -> Result<Self, MeasureError> {
        let h = 1.0 / n as f64;
        Self::new(
            vec![0.0, 1.0],
            vec![0.5],
            vec![(0.5 - h, 0.25), (0.5 + h, 0.25)],
        )
    }

    /// `W_n(x) = x/2 + C_n(x)/2` with `C_n` the n-th piecewise-linear
    /// approximant of the Cantor staircase. Purely absolutely continuous:
    /// density `(1 + (3/2)^n)/2` on the 2^n kept intervals, `1/2` on the gaps.
    pub fn cantor_approx(level: u32) -> Result<Self, MeasureError> {
        let mut kept = vec![(0.0f64, 1.0f64)];
        for _ in 0..level {
            let mut next = Vec::with_capacity(kept.len() * 2);
            for &(l, r) in &kept {
                let third = (r - l) / 3.0;
                next.push((l, l + third));
                next.push((r - third, r));
            }
            kept = next;
        }
        let inside = 0.5 * (1.0 + 1.5f64.powi(level as i32));
        let mut breakpoints = vec![0.0];
        let mut densities = Vec::new();
        let mut cursor = 0.0f64;
        for &(l, r) in &kept {
            if l > cursor {
                breakpoints.push(l);
                densities.push(0.5);
            }
            breakpoints.push(r);
            densities.push(inside);
            cursor = r;
        }
        if cursor < 1.0 {
            breakpoints.push(1.0);
            densities.push(0.5);
        }
        // The kept-interval masses sum to 1 in exact arithmetic; renormalize
        // the last density to absorb rounding so validation stays strict.
        let mut spec = Self::new(breakpoints.clone(), densities.clone(), vec![]);
        if let Err(MeasureError::MassNotNormalized { total }) = &spec {
            let excess = total - 1.0;
            let last = densities.len() - 1;
            let len = breakpoints[last + 1] - breakpoints[last];
            densities[last] -= excess / len;
            spec = Self::new(breakpoints, densities, vec![]);
        }
        spec
    }
}

/// Lévy distance between the CDFs of two measures: the smallest `ε` such that
/// `F(x−ε)−ε ≤ G(x) ≤ F(x+ε)+ε` for all scanned `x`. Metrizes vague
/// convergence for this class. Evaluated by a sup-scan over a fine grid plus
/// both specs' structural points, with a monotone bisection per point.
pub fn vague_distance(spec1: &MeasureSpec, spec2: &MeasureSpec) -> f64 {
    let scan = scan_points(spec1, spec2);
    let d12 = levy_one_sided(spec1, spec2, &scan);
    let d21 = levy_one_sided(spec2, spec1, &scan);
    d12.max(d21)
}

fn scan_points(spec1: &MeasureSpec, spec2: &MeasureSpec) -> Vec<f64> {
    const GRID: usize = 2048;
    let mut pts: Vec<f64> = (0..GRID).map(|k| k as f64 / GRID as f64).collect();
    for spec in [spec1, spec2] {
        for &q in &spec.nodes {
            if (0.0..1.0).contains(&q) {
                pts.push(q);
                if q > 1e-12 {
                    pts.push(q - 1e-12);
                }
            }
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

fn levy_one_sided(f: &MeasureSpec, g: &MeasureSpec, scan: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for &x in scan {
        let gx = g.cdf(x);
        // smallest ε with F(x+ε)+ε ≥ G(x)
        let up = bisect_monotone(|e| f.cdf(x + e) + e - gx);
        // smallest ε with G(x) ≥ F(x−ε)−ε
        let down = bisect_monotone(|e| gx - f.cdf(x - e) + e);
        worst = worst.max(up.max(down));
    }
    worst
}

/// Smallest `e ∈ [0,1]` with `φ(e) ≥ 0`, for nondecreasing `φ` with `φ(1) ≥ 0`.
fn bisect_monotone(phi: impl Fn(f64) -> f64) -> f64 {
    if phi(0.0) >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Both sides of the two substitution identities, evaluated independently:
/// the Stieltjes pair `∫_{(0,t]} h dW  =  ∫_{(0,W(t)]} h(w(x)) dx`
/// and the capacity pair `∫ a·h dx  =  ∫ h(W(y)) dy`.
#[derive(Debug, Clone, Copy)]
pub struct SubstitutionCheck {
    pub stieltjes_lhs: f64,
    pub stieltjes_rhs: f64,
    pub capacity_lhs: f64,
    pub capacity_rhs: f64,
}

/// Evaluate the substitution identities for a piecewise-continuous `h` by
/// quadrature on both sides; `n_quad` is the subdivision count per unit
/// length. A self-test of the measure tables, not a production path.
pub fn substitution_check(
    spec: &MeasureSpec,
    h: impl Fn(f64) -> f64,
    t: f64,
    n_quad: usize,
) -> SubstitutionCheck {
    assert!((0.0..=1.0).contains(&t) && t > 0.0);
    let wt = spec.cdf(t);

    // ∫_{(0,t]} h dW: density pieces in y plus atoms at or left of t.
    let mut stieltjes_lhs = 0.0;
    for i in 0..spec.nodes.len() - 1 {
        let lo = spec.nodes[i];
        let hi = spec.nodes[i + 1].min(t);
        if hi > lo {
            stieltjes_lhs += spec.node_density[i] * simpson(&h, lo, hi, n_quad);
        }
    }
    for i in 1..spec.nodes.len() {
        if spec.node_jump[i] > 0.0 && spec.nodes[i] <= t {
            stieltjes_lhs += spec.node_jump[i] * h(spec.nodes[i]);
        }
    }

    // ∫_{(0,W(t)]} h(w(x)) dx, split at the inverse-table segment boundaries.
    let mut stieltjes_rhs = 0.0;
    for seg in &spec.inv_segments {
        let lo = seg.s_lo;
        let hi = seg.s_hi.min(wt);
        if hi > lo {
            if seg.slope == 0.0 {
                stieltjes_rhs += h(seg.x_lo) * (hi - lo);
            } else {
                stieltjes_rhs += simpson(
                    |s| h(seg.x_lo + seg.slope * (s - seg.s_lo)),
                    lo,
                    hi,
                    n_quad,
                );
            }
        }
    }

    // ∫ a(x) h(x) dx over the full period, with the exact piecewise a.
    let mut capacity_lhs = 0.0;
    for seg in &spec.inv_segments {
        if seg.slope > 0.0 {
            // a = slope on the image interval
            capacity_lhs += seg.slope * simpson(&h, seg.s_lo, seg.s_hi, n_quad);
        }
    }

    // ∫ h(W(y)) dy over the full period, split at the measure's nodes. W is
    // affine inside each piece; the affine formula extends continuously to
    // the right endpoint, where cdf01 would already jump.
    let mut capacity_rhs = 0.0;
    for i in 0..spec.nodes.len() - 1 {
        let (w0, d, y0) = (spec.node_w[i], spec.node_density[i], spec.nodes[i]);
        capacity_rhs += simpson(
            |y| h(w0 + d * (y - y0)),
            spec.nodes[i],
            spec.nodes[i + 1],
            n_quad,
        );
    }

    SubstitutionCheck {
        stieltjes_lhs,
        stieltjes_rhs,
        capacity_lhs,
        capacity_rhs,
    }
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n_per_unit: usize) -> f64 {
    let len = hi - lo;
    if len <= 0.0 {
        return 0.0;
    }
    let n = ((len * n_per_unit as f64).ceil() as usize).max(2);
    let n = n + n % 2;
    let h = len / n as f64;
    let mut sum = f(lo) + f(hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(lo + k as f64 * h);
    }
    sum * h / 3.0
}
