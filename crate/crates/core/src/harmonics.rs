//! Band-limited torus functions with closed-form antiderivatives.
//!
//! Grid samples are interpreted through their discrete Fourier coefficients,
//! which reproduces trigonometric polynomials below the Nyquist frequency
//! exactly. The admissible-data construction needs `∫₀^y g` and `∫₀^x ∫₀^l g`
//! at arbitrary points; both come out in closed form here, so the double
//! primitive in the profile construction carries no quadrature error.

use std::f64::consts::TAU;

/// Trigonometric series `mean + Σ_k a_k cos(2πky) + b_k sin(2πky)`.
#[derive(Debug, Clone)]
pub struct Harmonics {
    mean: f64,
    cos_coef: Vec<f64>,
    sin_coef: Vec<f64>,
}

impl Harmonics {
    /// Analyze samples taken at the cell centers `(m + 1/2)/M`. Frequencies up
    /// to `M/2 - 1` are recovered; a trig polynomial of lower degree is
    /// reproduced exactly.
    pub fn from_samples(values: &[f64]) -> Self {
        let m = values.len();
        assert!(m >= 2, "need at least two samples");
        let k_max = (m - 1) / 2;
        let mean = values.iter().sum::<f64>() / m as f64;
        let mut cos_coef = vec![0.0; k_max];
        let mut sin_coef = vec![0.0; k_max];
        for k in 1..=k_max {
            let (mut sc, mut ss) = (0.0, 0.0);
            for (idx, &v) in values.iter().enumerate() {
                let y = (idx as f64 + 0.5) / m as f64;
                let (s, c) = (TAU * k as f64 * y).sin_cos();
                sc += v * c;
                ss += v * s;
            }
            cos_coef[k - 1] = 2.0 * sc / m as f64;
            sin_coef[k - 1] = 2.0 * ss / m as f64;
        }
        Self {
            mean,
            cos_coef,
            sin_coef,
        }
    }

    /// Build directly from coefficients (`coef[k-1]` multiplies frequency `k`).
    pub fn from_coefficients(mean: f64, cos_coef: Vec<f64>, sin_coef: Vec<f64>) -> Self {
        assert_eq!(cos_coef.len(), sin_coef.len());
        Self {
            mean,
            cos_coef,
            sin_coef,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn eval(&self, y: f64) -> f64 {
        let mut acc = self.mean;
        for k in 1..=self.cos_coef.len() {
            let (s, c) = (TAU * k as f64 * y).sin_cos();
            acc += self.cos_coef[k - 1] * c + self.sin_coef[k - 1] * s;
        }
        acc
    }

    /// `∫₀^y (g - mean)`: the periodic primitive pinned to 0 at the origin.
    pub fn primitive(&self, y: f64) -> f64 {
        let mut acc = 0.0;
        for k in 1..=self.cos_coef.len() {
            let om = TAU * k as f64;
            let (s, c) = (om * y).sin_cos();
            acc += self.cos_coef[k - 1] * s / om + self.sin_coef[k - 1] * (1.0 - c) / om;
        }
        acc
    }

    /// `∫₀^x primitive(l) dl`, again in closed form.
    pub fn double_primitive(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for k in 1..=self.cos_coef.len() {
            let om = TAU * k as f64;
            let (s, c) = (om * x).sin_cos();
            acc += self.cos_coef[k - 1] * (1.0 - c) / (om * om)
                + self.sin_coef[k - 1] * (x / om - s / (om * om));
        }
        acc
    }

    /// Sup-norm estimate from the coefficients (`|mean| + Σ|a_k| + |b_k|`).
    pub fn coefficient_bound(&self) -> f64 {
        self.mean.abs()
            + self
                .cos_coef
                .iter()
                .zip(&self.sin_coef)
                .map(|(a, b)| a.abs() + b.abs())
                .sum::<f64>()
    }
}
