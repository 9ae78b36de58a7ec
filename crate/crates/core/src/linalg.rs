//! Linear-time solvers for periodic tridiagonal systems.
//!
//! The frequency solves and the time stepper both reduce to cyclic
//! tridiagonal systems, occasionally augmented by rank-one terms (the corner
//! entries themselves, and the mean constraint of the `ξ = 0` problem). They
//! are handled uniformly: Thomas elimination on a modified tridiagonal core
//! plus a small Woodbury correction, `O(n)` per solve with the factorization
//! reusable across right-hand sides. A dense partially-pivoted elimination
//! backs the fast path up when a pivot collapses.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Relative pivot threshold that triggers the dense fallback.
pub const PIVOT_BREAKDOWN_REL: f64 = 1e-14;

pub trait Scalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Periodic tridiagonal matrix: `sub[j]`, `diag[j]`, `sup[j]` multiply
/// `u_{j-1}`, `u_j`, `u_{j+1}` in row `j`, indices mod `n`. `sub[0]` and
/// `sup[n-1]` are the cyclic corners.
#[derive(Debug, Clone)]
pub struct CyclicMatrix<T> {
    pub sub: Vec<T>,
    pub diag: Vec<T>,
    pub sup: Vec<T>,
}

/// Rank-one addition `col · rowᵀ` to a [`CyclicMatrix`].
#[derive(Debug, Clone)]
pub struct RankOne<T> {
    pub col: Vec<T>,
    pub row: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotBreakdown {
    pub index: usize,
    pub magnitude: f64,
}

impl<T: Scalar> CyclicMatrix<T> {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// `A·x` including any rank-one additions; used for residuals.
    pub fn apply(&self, extras: &[RankOne<T>], x: &[T]) -> Vec<T> {
        let n = self.n();
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let prev = x[(j + n - 1) % n];
            let next = x[(j + 1) % n];
            out.push(self.sub[j] * prev + self.diag[j] * x[j] + self.sup[j] * next);
        }
        for r in extras {
            let mut dot = T::zero();
            for j in 0..n {
                dot = dot + r.row[j] * x[j];
            }
            for j in 0..n {
                out[j] = out[j] + r.col[j] * dot;
            }
        }
        out
    }
}

/// Thomas factorization of the modified core plus the Woodbury data for the
/// corner correction and any extra rank-one terms. Factor once, solve many.
pub struct FactoredSystem<T> {
    matrix: CyclicMatrix<T>,
    extras: Vec<RankOne<T>>,
    sub_core: Vec<T>,
    gam: Vec<T>,
    inv_piv: Vec<T>,
    corr_cols: Vec<Vec<T>>,
    corr_rows: Vec<Vec<T>>,
    cap_inv: Vec<Vec<T>>,
}

impl<T: Scalar> FactoredSystem<T> {
    pub fn new(matrix: CyclicMatrix<T>, extras: Vec<RankOne<T>>) -> Result<Self, PivotBreakdown> {
        let n = matrix.n();
        assert!(n >= 3, "cyclic systems need n >= 3");
        let scale = matrix
            .diag
            .iter()
            .map(|d| d.modulus())
            .fold(0.0f64, f64::max)
            .max(1e-300);

        // Corner correction (Sherman–Morrison): pull the cyclic entries into
        // col·rowᵀ with col = [γ,0,…,0,β], row = [1,0,…,0,α/γ], γ = −diag[0].
        let alpha = matrix.sub[0];
        let beta = matrix.sup[n - 1];
        let gamma = if matrix.diag[0].modulus() > PIVOT_BREAKDOWN_REL * scale {
            -matrix.diag[0]
        } else {
            T::from_real(scale)
        };
        let mut core_diag = matrix.diag.clone();
        core_diag[0] = matrix.diag[0] - gamma;
        core_diag[n - 1] = matrix.diag[n - 1] - beta * alpha / gamma;

        let sub_core: Vec<T> = matrix.sub[1..].to_vec();
        let sup_core: &[T] = &matrix.sup[..n - 1];

        let mut gam = vec![T::zero(); n];
        let mut inv_piv = vec![T::zero(); n];
        let mut bet = core_diag[0];
        if bet.modulus() < PIVOT_BREAKDOWN_REL * scale {
            return Err(PivotBreakdown {
                index: 0,
                magnitude: bet.modulus(),
            });
        }
        inv_piv[0] = T::one() / bet;
        for j in 1..n {
            gam[j] = sup_core[j - 1] * inv_piv[j - 1];
            bet = core_diag[j] - sub_core[j - 1] * gam[j];
            if bet.modulus() < PIVOT_BREAKDOWN_REL * scale {
                return Err(PivotBreakdown {
                    index: j,
                    magnitude: bet.modulus(),
                });
            }
            inv_piv[j] = T::one() / bet;
        }

        let mut corr_cols = Vec::with_capacity(1 + extras.len());
        let mut corr_rows = Vec::with_capacity(1 + extras.len());
        let mut z = vec![T::zero(); n];
        z[0] = gamma;
        z[n - 1] = beta;
        let mut w = vec![T::zero(); n];
        w[0] = T::one();
        w[n - 1] = alpha / gamma;
        corr_cols.push(z);
        corr_rows.push(w);
        for r in &extras {
            corr_cols.push(r.col.clone());
            corr_rows.push(r.row.clone());
        }

        let mut partial = Self {
            matrix,
            extras,
            sub_core,
            gam,
            inv_piv,
            corr_cols,
            corr_rows,
            cap_inv: Vec::new(),
        };
        // Capacitance C = I + Wᵀ (T'⁻¹ Z); its inverse closes the factorization.
        let k = partial.corr_cols.len();
        let solved: Vec<Vec<T>> = partial
            .corr_cols
            .iter()
            .map(|z| partial.core_solve(z))
            .collect();
        let mut cap = vec![vec![T::zero(); k]; k];
        for (i, row) in partial.corr_rows.iter().enumerate() {
            for (j, zs) in solved.iter().enumerate() {
                let mut dot = T::zero();
                for l in 0..n {
                    dot = dot + row[l] * zs[l];
                }
                cap[i][j] = dot + if i == j { T::one() } else { T::zero() };
            }
        }
        let cap_inv = invert_small(&cap).ok_or(PivotBreakdown {
            index: usize::MAX,
            magnitude: 0.0,
        })?;
        partial.corr_cols = solved;
        partial.cap_inv = cap_inv;
        Ok(partial)
    }

    fn core_solve(&self, rhs: &[T]) -> Vec<T> {
        let n = rhs.len();
        let mut x = vec![T::zero(); n];
        x[0] = rhs[0] * self.inv_piv[0];
        for j in 1..n {
            x[j] = (rhs[j] - self.sub_core[j - 1] * x[j - 1]) * self.inv_piv[j];
        }
        for j in (0..n - 1).rev() {
            x[j] = x[j] - self.gam[j + 1] * x[j + 1];
        }
        x
    }

    /// Solve `A x = rhs` through the Woodbury identity.
    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let n = rhs.len();
        let k = self.corr_cols.len();
        let mut x = self.core_solve(rhs);
        let mut beta = vec![T::zero(); k];
        for (i, row) in self.corr_rows.iter().enumerate() {
            let mut dot = T::zero();
            for l in 0..n {
                dot = dot + row[l] * x[l];
            }
            beta[i] = dot;
        }
        let mut coef = vec![T::zero(); k];
        for i in 0..k {
            for (j, b) in beta.iter().enumerate() {
                coef[i] = coef[i] + self.cap_inv[i][j] * *b;
            }
        }
        for (i, zs) in self.corr_cols.iter().enumerate() {
            for l in 0..n {
                x[l] = x[l] - zs[l] * coef[i];
            }
        }
        x
    }

    /// One step of iterative refinement on top of [`Self::solve`]; costs a
    /// second O(n) pass and pushes the residual to rounding level.
    pub fn solve_refined(&self, rhs: &[T]) -> Vec<T> {
        let mut x = self.solve(rhs);
        let ax = self.matrix.apply(&self.extras, &x);
        let res: Vec<T> = rhs.iter().zip(&ax).map(|(&r, &a)| r - a).collect();
        let dx = self.solve(&res);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi = *xi + *di;
        }
        x
    }

    /// Relative residual `‖Ax − rhs‖∞ / ‖rhs‖∞`.
    pub fn relative_residual(&self, x: &[T], rhs: &[T]) -> f64 {
        let ax = self.matrix.apply(&self.extras, x);
        let num = ax
            .iter()
            .zip(rhs)
            .map(|(a, r)| (*a - *r).modulus())
            .fold(0.0f64, f64::max);
        let den = rhs.iter().map(|r| r.modulus()).fold(0.0f64, f64::max);
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

fn invert_small<T: Scalar>(m: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let k = m.len();
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut inv: Vec<Vec<T>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| {
                a[i][col]
                    .modulus()
                    .partial_cmp(&a[j][col].modulus())
                    .unwrap()
            })
            .unwrap();
        if a[piv][col].modulus() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..k {
            a[col][j] = a[col][j] / d;
            inv[col][j] = inv[col][j] / d;
        }
        for i in 0..k {
            if i != col {
                let factor = a[i][col];
                for j in 0..k {
                    a[i][j] = a[i][j] - factor * a[col][j];
                    inv[i][j] = inv[i][j] - factor * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

/// Dense partially-pivoted elimination on the assembled matrix. The slow but
/// robust path behind [`FactoredSystem`]; also serves the bordered systems in
/// degenerate configurations.
pub fn dense_solve<T: Scalar>(
    matrix: &CyclicMatrix<T>,
    extras: &[RankOne<T>],
    rhs: &[T],
) -> Option<Vec<T>> {
    let n = matrix.n();
    let mut a = vec![vec![T::zero(); n]; n];
    for j in 0..n {
        a[j][(j + n - 1) % n] = a[j][(j + n - 1) % n] + matrix.sub[j];
        a[j][j] = a[j][j] + matrix.diag[j];
        a[j][(j + 1) % n] = a[j][(j + 1) % n] + matrix.sup[j];
    }
    for r in extras {
        for i in 0..n {
            for j in 0..n {
                a[i][j] = a[i][j] + r.col[i] * r.row[j];
            }
        }
    }
    let mut b = rhs.to_vec();
    let scale = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v.modulus()))
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .modulus()
                    .partial_cmp(&a[j][col].modulus())
                    .unwrap()
            })
            .unwrap();
        if a[piv][col].modulus() < 1e-16 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = T::one() / a[col][col];
        for i in col + 1..n {
            let factor = a[i][col] * inv;
            if factor.modulus() == 0.0 {
                continue;
            }
            for j in col..n {
                a[i][j] = a[i][j] - factor * a[col][j];
            }
            b[i] = b[i] - factor * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc = acc - a[i][j] * x[j];
        }
        x[i] = acc / a[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_like(n: usize, shift: f64) -> CyclicMatrix<f64> {
        let nn = (n * n) as f64;
        CyclicMatrix {
            sub: vec![-nn; n],
            diag: vec![2.0 * nn + shift; n],
            sup: vec![-nn; n],
        }
    }

    #[test]
    fn factored_matches_dense_on_random_system() {
        let n = 24;
        let mut state = 1234567u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let matrix = CyclicMatrix {
            sub: (0..n).map(|_| next() - 1.0).collect(),
            diag: (0..n).map(|_| 4.0 + next()).collect(),
            sup: (0..n).map(|_| next() - 1.0).collect(),
        };
        let rhs: Vec<f64> = (0..n).map(|_| next()).collect();
        let fac = FactoredSystem::new(matrix.clone(), vec![]).unwrap();
        let x = fac.solve_refined(&rhs);
        let xd = dense_solve(&matrix, &[], &rhs).unwrap();
        for j in 0..n {
            assert!((x[j] - xd[j]).abs() < 1e-11, "{} vs {}", x[j], xd[j]);
        }
        assert!(fac.relative_residual(&x, &rhs) < 1e-13);
    }

    #[test]
    fn complex_shifted_laplacian_single_mode() {
        use std::f64::consts::PI;
        let n = 128;
        let nn = (n * n) as f64;
        let xi = 3.0;
        let matrix = CyclicMatrix {
            sub: vec![Complex64::new(-nn, 0.0); n],
            diag: vec![Complex64::new(2.0 * nn, xi); n],
            sup: vec![Complex64::new(-nn, 0.0); n],
        };
        let rhs: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new((2.0 * PI * (j as f64 + 0.5) / n as f64).cos(), 0.0))
            .collect();
        let fac = FactoredSystem::new(matrix, vec![]).unwrap();
        let x = fac.solve_refined(&rhs);
        let lam = 4.0 * nn * (PI / n as f64).sin().powi(2);
        let denom = Complex64::new(lam, xi);
        for j in 0..n {
            let expect = rhs[j] / denom;
            assert!((x[j] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn rank_one_correction_resolves_singular_laplacian() {
        // pure periodic second difference is singular; the mean constraint fixes it
        let n = 32;
        let matrix = laplacian_like(n, 0.0);
        let a_row: Vec<f64> = vec![1.0 / n as f64; n];
        let extra = RankOne {
            col: vec![1.0; n],
            row: a_row,
        };
        let rhs: Vec<f64> = (0..n)
            .map(|j| (2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos())
            .collect();
        let fac = FactoredSystem::new(matrix.clone(), vec![extra.clone()]).unwrap();
        let x = fac.solve_refined(&rhs);
        // mean of solution forced to (Σ rhs)/n ≈ 0
        let mean: f64 = x.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-12);
        let xd = dense_solve(&matrix, &[extra], &rhs).unwrap();
        for j in 0..n {
            assert!((x[j] - xd[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn pivot_breakdown_is_reported() {
        let n = 8;
        let matrix = CyclicMatrix {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
        };
        assert!(FactoredSystem::new(matrix, vec![]).is_err());
    }

    #[test]
    fn dense_solver_rejects_singular_matrix() {
        let n = 6;
        let matrix = laplacian_like(n, 0.0);
        // periodic Laplacian annihilates constants
        let rhs = vec![1.0; n];
        assert!(dense_solve(&matrix, &[], &rhs).is_none());
    }
}
