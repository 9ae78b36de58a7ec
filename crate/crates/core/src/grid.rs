//! Uniform cell grids on the torus and the discrete calculus used throughout.
//!
//! Convention: the `x`-coordinate `[0,1)` is split into `n` cells
//! `[j/n, (j+1)/n)`; samples live at cell centers `(j + 1/2)/n`. Discrete
//! operators are periodic: the forward difference is `(Du)_j = n (u_{j+1} - u_j)`
//! and the second difference is `(D₂u)_j = n² (u_{j+1} - 2u_j + u_{j-1})`.
//! Integrals are plain cell sums, `∫u ≈ Σ_j u_j / n`.

use num_complex::Complex64;

/// Real-valued samples at the cell centers of a uniform torus grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

/// Complex-valued samples at the cell centers of a uniform torus grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGridFunction {
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "grid function needs at least one cell");
        assert!(
            values.iter().all(|v| v.is_finite()),
            "grid function values must be finite"
        );
        Self { values }
    }

    /// Constant function on `n` cells.
    pub fn constant(n: usize, value: f64) -> Self {
        Self::new(vec![value; n])
    }

    /// Sample a closure at the cell centers of an `n`-cell grid.
    pub fn sample(n: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::new((0..n).map(|j| f(cell_center(j, n))).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Position of the j-th sample.
    pub fn center(&self, j: usize) -> f64 {
        cell_center(j, self.n())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L² norm, `√(Σ u_j²/n)`.
    pub fn l2_norm(&self) -> f64 {
        let n = self.n() as f64;
        (self.values.iter().map(|v| v * v).sum::<f64>() / n).sqrt()
    }

    /// Plain mean `Σ u_j / n`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }

    /// Weighted mean `Σ w_j u_j / n` (the `a`-weighted average when `w = a`).
    pub fn weighted_mean(&self, weights: &[f64]) -> f64 {
        assert_eq!(weights.len(), self.n());
        kahan_sum(self.values.iter().zip(weights).map(|(u, w)| u * w)) / self.n() as f64
    }

    /// Periodic second difference `n²(u_{j+1} - 2u_j + u_{j-1})` at cell `j`.
    pub fn second_difference(&self, j: usize) -> f64 {
        let n = self.n();
        let nn = (n * n) as f64;
        let prev = self.values[(j + n - 1) % n];
        let next = self.values[(j + 1) % n];
        nn * (next - 2.0 * self.values[j] + prev)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn shifted(&self, offset: f64) -> Self {
        self.map(|v| v + offset)
    }
}

impl ComplexGridFunction {
    pub fn new(values: Vec<Complex64>) -> Self {
        assert!(!values.is_empty());
        assert!(values.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn l2_norm(&self) -> f64 {
        let n = self.n() as f64;
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / n).sqrt()
    }
}

/// Center of cell `j` on an `n`-cell grid.
pub fn cell_center(j: usize, n: usize) -> f64 {
    (j as f64 + 0.5) / n as f64
}

/// Kahan-compensated sum; the conservation and weak-residual checks sit at
/// rounding level, where the naive left fold loses a decade.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Discrete H¹ norm of a complex field: `√(‖u‖₂² + ‖Du‖₂²)`.
pub fn h1_norm(u: &[Complex64]) -> f64 {
    let n = u.len();
    let nf = n as f64;
    let l2: f64 = u.iter().map(|v| v.norm_sqr()).sum::<f64>() / nf;
    (l2 + h1_seminorm_sqr(u)).sqrt()
}

/// `‖Du‖₂²` with the periodic forward difference.
pub fn h1_seminorm_sqr(u: &[Complex64]) -> f64 {
    let n = u.len();
    let nf = n as f64;
    (0..n)
        .map(|j| {
            let d = (u[(j + 1) % n] - u[j]) * nf;
            d.norm_sqr()
        })
        .sum::<f64>()
        / nf
}

/// `a`-weighted seminorm `[u]_a = √(Σ a_j |u_j|² / n)`.
pub fn a_seminorm(u: &[Complex64], a: &[f64]) -> f64 {
    assert_eq!(u.len(), a.len());
    let n = u.len() as f64;
    (u.iter()
        .zip(a)
        .map(|(v, aj)| aj * v.norm_sqr())
        .sum::<f64>()
        / n)
        .sqrt()
}

/// Real version of [`a_seminorm`].
pub fn a_seminorm_real(u: &[f64], a: &[f64]) -> f64 {
    let n = u.len() as f64;
    (u.iter().zip(a).map(|(v, aj)| aj * v * v).sum::<f64>() / n).sqrt()
}

/// Mixed norm `‖u‖_{H¹_a} = √(‖Du‖₂² + [u]_a²)`.
pub fn h1a_norm(u: &[Complex64], a: &[f64]) -> f64 {
    (h1_seminorm_sqr(u) + a_seminorm(u, a).powi(2)).sqrt()
}
