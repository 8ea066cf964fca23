//! Blow-up functionals, criteria and the upper bound on the blow-up time for
//! linear damping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{EnergyRecord, Functionals, Side};
use crate::grid::{Grid1D, State};
use crate::integrator::{Moments, Outcome, Trajectory, Trigger};
use crate::model::{Exponents, MaterialParams};
use crate::well::WellReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlowupError {
    #[error("exponents are outside the blow-up regime (need n_i > m_i)")]
    NotBlowupRegime,
    #[error("blow-up time bound does not apply: {0}")]
    BoundInapplicable(String),
}

/// `G = −ℰ`
pub fn g_of(record: &EnergyRecord) -> f64 {
    -record.etot
}

/// `N = ½(ρ‖v‖² + μ‖p‖²)`
pub fn n_of(state: &State, params: &MaterialParams, grid: &Grid1D) -> f64 {
    Moments::of(state, params, grid).n
}

/// `N′ = ρ∫v v_t + μ∫p p_t`
pub fn nprime_of(state: &State, params: &MaterialParams, grid: &Grid1D) -> f64 {
    Moments::of(state, params, grid).n_prime
}

/// Supremum of the admissible exponents `ϖ` in the functional `Y`.
pub fn varpi_max(exps: &Exponents) -> Result<f64, BlowupError> {
    if !(exps.n1 > exps.m1 && exps.n2 > exps.m2) {
        return Err(BlowupError::NotBlowupRegime);
    }
    let (m1, m2, n1, n2) = (exps.m1, exps.m2, exps.n1, exps.n2);
    Ok([
        1.0 / (m1 + 1.0) - 1.0 / (n1 + 1.0),
        1.0 / (m2 + 1.0) - 1.0 / (n2 + 1.0),
        (n1 - 1.0) / (2.0 * (n1 + 1.0)),
        (n2 - 1.0) / (2.0 * (n2 + 1.0)),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min))
}

/// `σ = max_i {1 − 2/((1 − 2ϖ)(n_i + 1))}`
pub fn sigma(exps: &Exponents, varpi: f64) -> f64 {
    let s = |n: f64| 1.0 - 2.0 / ((1.0 - 2.0 * varpi) * (n + 1.0));
    s(exps.n1).max(s(exps.n2))
}

/// Observations of `G` and `Y = G^{1−ϖ} + εN′` along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monitor {
    /// `G(0) > 0`, i.e. negative initial energy.
    pub active: bool,
    pub g_monotone_ok: bool,
    pub varpi: f64,
    pub epsilon: f64,
    pub y_positive: bool,
    pub y_increasing: bool,
}

/// Tracks `G` and `Y` on a negative-energy run; `tol` is the slack allowed
/// for a decrease of `G` between records.
pub fn monitor(traj: &Trajectory, exps: &Exponents, tol: f64) -> Monitor {
    let varpi = varpi_max(exps).map(|v| 0.5 * v).unwrap_or(f64::NAN);
    let g0 = g_of(&traj.records[0]);
    let active = g0 > 0.0 && varpi.is_finite();
    if !active {
        return Monitor {
            active,
            g_monotone_ok: true,
            varpi,
            epsilon: 0.0,
            y_positive: true,
            y_increasing: true,
        };
    }
    let g_monotone_ok = traj
        .records
        .windows(2)
        .all(|w| g_of(&w[1]) >= g_of(&w[0]) - tol);
    let np0 = traj.moments[0].n_prime;
    let mut epsilon = g0.min(1.0);
    if np0 < 0.0 {
        epsilon = epsilon.min(-g0.powf(1.0 - varpi) / (2.0 * np0));
    }
    let y: Vec<f64> = traj
        .records
        .iter()
        .zip(&traj.moments)
        .map(|(r, m)| g_of(r).max(0.0).powf(1.0 - varpi) + epsilon * m.n_prime)
        .collect();
    Monitor {
        active,
        g_monotone_ok,
        varpi,
        epsilon,
        y_positive: y.iter().all(|&v| v > 0.0),
        y_increasing: y.windows(2).all(|w| w[1] >= w[0] - tol),
    }
}

/// How the Poincaré constant enters the positive-energy threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// The constant multiplies by `c²`, as in the printed statement.
    PaperLiteral,
    /// The constant multiplies by `1/c²`, consistent with `‖u‖₂ ≤ c‖∇u‖₂`.
    #[default]
    PoincareConsistent,
}

impl Convention {
    pub fn factor(&self, poincare_c: f64) -> f64 {
        match self {
            Convention::PaperLiteral => poincare_c * poincare_c,
            Convention::PoincareConsistent => 1.0 / (poincare_c * poincare_c),
        }
    }
}

/// Initial-data quantities entering the linear-damping estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialMoments {
    pub energy: f64,
    /// `‖v₀‖² + ‖p₀‖²`
    pub l2_sum: f64,
    /// `ρ‖v₀‖² + μ‖p₀‖²`
    pub weighted_l2: f64,
    /// `ρ∫v₀v₁ + μ∫p₀p₁`
    pub cross: f64,
}

impl InitialMoments {
    pub fn of(state0: &State, params: &MaterialParams, exps: &Exponents, grid: &Grid1D) -> Self {
        let (v2, p2) = (grid.l2_norm_sq(&state0.v), grid.l2_norm_sq(&state0.p));
        Self {
            energy: Functionals::of(state0, params, exps, grid).total_energy(),
            l2_sum: v2 + p2,
            weighted_l2: params.rho() * v2 + params.mu() * p2,
            cross: nprime_of(state0, params, grid),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub satisfied: bool,
    pub energy: f64,
    pub rhs: f64,
}

/// `(ĉ−2)/ĉ · M⁻¹ · cfac · min{1/ρ, 1/μ}` with `M = max{(2γ²+1)/α₁, 2/β}`.
fn threshold_coefficient(params: &MaterialParams, c_hat: f64, cfac: f64) -> f64 {
    (c_hat - 2.0) / c_hat / params.gradient_bound_factor()
        * cfac
        * (1.0 / params.rho()).min(1.0 / params.mu())
}

/// Energy condition under which the blow-up time bound holds:
/// `ℰ(0) ≤ (ĉ−2)/(2ĉ) · M⁻¹ · cfac · min{1/ρ, 1/μ} (‖v₀‖² + ‖p₀‖²)`.
pub fn blowup_time_threshold(
    state0: &State,
    params: &MaterialParams,
    exps: &Exponents,
    grid: &Grid1D,
    poincare_c: f64,
    convention: Convention,
) -> Threshold {
    let im = InitialMoments::of(state0, params, exps, grid);
    let rhs =
        0.5 * threshold_coefficient(params, exps.c_hat, convention.factor(poincare_c)) * im.l2_sum;
    Threshold {
        satisfied: im.energy <= rhs,
        energy: im.energy,
        rhs,
    }
}

/// Constant `C̄` of the exponential growth estimate for `N′ − (ĉ/C̄)ℰ`.
pub fn levine_constant(params: &MaterialParams, c_hat: f64, poincare_c: f64) -> f64 {
    let base = (c_hat - 2.0) / 2.0 / params.gradient_bound_factor() / (poincare_c * poincare_c);
    let (rho, mu) = (params.rho(), params.mu());
    [
        (c_hat + 2.0 * rho) / rho,
        (c_hat + 2.0 * mu) / mu,
        base / (0.5 * mu + 0.25 / c_hat),
        base / (0.5 * rho + 0.25 / c_hat),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// `2(ρ‖v₀‖² + μ‖p₀‖² + κτ²) / ((ĉ−2)[cross + κτ] − 2(‖v₀‖² + ‖p₀‖²))`, or
/// `None` when the denominator is not positive.
pub fn tmax_formula(c_hat: f64, im: &InitialMoments, kappa: f64, tau: f64) -> Option<f64> {
    let denom = (c_hat - 2.0) * (im.cross + kappa * tau) - 2.0 * im.l2_sum;
    if denom > 0.0 {
        Some(2.0 * (im.weighted_l2 + kappa * tau * tau) / denom)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TmaxBound {
    pub kappa: f64,
    pub tau_min: f64,
    pub tau: f64,
    pub bound: f64,
}

/// `κ`, `τ` and the resulting upper bound on the blow-up time for linear damping.
pub fn tmax_upper_bound(
    state0: &State,
    params: &MaterialParams,
    exps: &Exponents,
    grid: &Grid1D,
    poincare_c: f64,
    convention: Convention,
) -> Result<TmaxBound, BlowupError> {
    if !exps.linear_damping() {
        return Err(BlowupError::BoundInapplicable(
            "requires m1 = m2 = 1".into(),
        ));
    }
    let im = InitialMoments::of(state0, params, exps, grid);
    let c_hat = exps.c_hat;
    let coeff = threshold_coefficient(params, c_hat, convention.factor(poincare_c));
    let kappa = -2.0 * im.energy + coeff * im.l2_sum;
    if !(kappa > 0.0) {
        return Err(BlowupError::BoundInapplicable(format!(
            "kappa = {kappa} is not positive"
        )));
    }
    let tau_min = ((2.0 * im.l2_sum - (c_hat - 2.0) * im.cross) / ((c_hat - 2.0) * kappa)).max(0.0);
    let tau = tau_min + 1e-6 * (1.0 + tau_min.abs());
    let bound = tmax_formula(c_hat, &im, kappa, tau)
        .ok_or_else(|| BlowupError::BoundInapplicable("denominator is not positive".into()))?;
    Ok(TmaxBound {
        kappa,
        tau_min,
        tau,
        bound,
    })
}

/// Which sufficient condition for blow-up holds at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    NegativeEnergy,
    UnstableSetBelowThreshold,
    PositiveEnergyLinearDamping,
    None,
}

pub fn initial_criterion(
    state0: &State,
    params: &MaterialParams,
    exps: &Exponents,
    grid: &Grid1D,
    well: &WellReport,
) -> Criterion {
    let f = Functionals::of(state0, params, exps, grid);
    let e0 = f.total_energy();
    if exps.blowup_regime && e0 < 0.0 {
        return Criterion::NegativeEnergy;
    }
    if exps.blowup_regime && f.side() == Side::W2 && e0 >= 0.0 && e0 < well.m_threshold {
        return Criterion::UnstableSetBelowThreshold;
    }
    if exps.linear_damping() {
        let c_bar = levine_constant(params, exps.c_hat, well.poincare_c);
        if e0 > 0.0 && e0 < c_bar / exps.c_hat * nprime_of(state0, params, grid) {
            return Criterion::PositiveEnergyLinearDamping;
        }
    }
    Criterion::None
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport {
    pub detected: bool,
    pub t_detect: Option<f64>,
    pub trigger: Option<Trigger>,
    pub kappa: Option<f64>,
    pub tau: Option<f64>,
    pub tmax_bound: Option<f64>,
    /// Bound under the other convention, when it applies.
    pub tmax_bound_alt: Option<f64>,
    pub criterion: Criterion,
    #[serde(rename = "G_monotone_ok")]
    pub g_monotone_ok: bool,
    pub monitor: Monitor,
    /// Sign functional at the last record of a run that blew up.
    pub final_sign_fn: Option<f64>,
}

impl BlowupReport {
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        traj: &Trajectory,
        state0: &State,
        params: &MaterialParams,
        exps: &Exponents,
        grid: &Grid1D,
        well: &WellReport,
        convention: Convention,
        tol: f64,
    ) -> Self {
        let mon = monitor(traj, exps, tol);
        let bound = tmax_upper_bound(state0, params, exps, grid, well.poincare_c, convention).ok();
        let other = match convention {
            Convention::PaperLiteral => Convention::PoincareConsistent,
            Convention::PoincareConsistent => Convention::PaperLiteral,
        };
        let alt = tmax_upper_bound(state0, params, exps, grid, well.poincare_c, other).ok();
        let (t_detect, trigger) = match traj.outcome {
            Outcome::Blowup { t_detect, trigger } => (Some(t_detect), Some(trigger)),
            Outcome::Completed => (None, None),
        };
        Self {
            detected: traj.outcome.is_blowup(),
            t_detect,
            trigger,
            kappa: bound.map(|b| b.kappa),
            tau: bound.map(|b| b.tau),
            tmax_bound: bound.map(|b| b.bound),
            tmax_bound_alt: alt.map(|b| b.bound),
            criterion: initial_criterion(state0, params, exps, grid, well),
            g_monotone_ok: mon.g_monotone_ok,
            monitor: mon,
            final_sign_fn: traj.outcome.is_blowup().then(|| traj.last().sign_fn),
        }
    }
}
