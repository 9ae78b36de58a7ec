//! Heat flow on the one-dimensional torus when the thermal resistance is a
//! Stieltjes measure: `∂t ρ = (d/dx)(d/dW) ρ` with `W` the CDF of a probability
//! measure `μ` such that Lebesgue ≪ μ.
//!
//! The library works in two coordinate systems. In `y`-space the equation has
//! discontinuous solutions with jumps at the atoms of `μ`. Composing with the
//! generalized inverse `w` of `W` moves the problem to `x`-space, where it
//! becomes the degenerate-capacity equation `a(x) v_t = v_xx` with `a = w′ ≥ 0`
//! vanishing exactly on the images of atoms ("plateaus"). Two independent
//! backends solve the `x`-space problem:
//!
//! * [`resolvent`]/[`synthesis`], the constructive route: a family of periodic
//!   complex problems `−u″ + iξ a u = a f` over a frequency grid, a regularized
//!   split `k = u − f/(1+iξ)`, and oscillatory quadrature back to the time
//!   domain;
//! * [`oracle`], a θ-scheme that treats the zero-capacity rows as algebraic
//!   constraints (a DAE), used for cross-validation and for configurations the
//!   strict pipeline rejects.
//!
//! [`verify`] turns the weak formulations, the a-priori bounds, and the
//! continuity-in-`μ` statement into runnable checks, and [`scenario`] wires
//! everything to the `heatw` command-line front end.

// stencil and solver kernels read better with explicit indices
#![allow(clippy::needless_range_loop)]

pub mod grid;
pub mod harmonics;
pub mod initial;
pub mod linalg;
pub mod measure;
pub mod oracle;
pub mod resolvent;
pub mod scenario;
pub mod synthesis;
pub mod verify;

pub use grid::{ComplexGridFunction, GridFunction};
pub use initial::{CompatibleData, InitialDataError};
pub use measure::{CapacityProfile, MeasureError, MeasureSpec, Plateau};
pub use oracle::{SchemeConfig, Theta};
pub use resolvent::{FrequencyGrid, ResolventFamily, SolveError};
pub use synthesis::{SolutionField, SynthesisError};
pub use verify::ExperimentReport;
