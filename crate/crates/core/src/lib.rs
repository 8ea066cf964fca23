//! Numerical laboratory for the magnetically coupled piezoelectric beam
//!
//! ```text
//! ρ v_tt − α v_xx + γβ p_xx + |v_t|^{m₁−1} v_t = |v|^{n₁−1} v
//! μ p_tt − β p_xx + γβ v_xx + |p_t|^{m₂−1} p_t = |p|^{n₂−1} p
//! ```
//!
//! on `(0, L)` with `v = p = 0` at `x = 0` and the coupled Neumann closure at
//! `x = L`. The crate provides a dissipation-consistent time integrator, the
//! energy functionals, potential-well geometry (Nehari projection, embedding
//! constants, mountain-pass lower bound), decay-envelope fitting and the
//! blow-up criteria and bounds.

pub mod blowup;
pub mod decay;
pub mod diagnostics;
pub mod grid;
pub mod integrator;
pub mod model;
pub mod well;

mod banded;

pub use diagnostics::{EnergyRecord, Side};
pub use grid::{Grid1D, State};
pub use integrator::{Outcome, Scheme, StepConfig, Trajectory};
pub use model::{ExponentMode, Exponents, MaterialParams};
