//! Scalar functionals of a state and the per-record row type.

use serde::{Deserialize, Serialize};

use crate::grid::{Grid1D, State};
use crate::model::{Exponents, MaterialParams};

/// Relative width of the band around the Nehari set reported as [`Side::Boundary`].
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Position relative to the Nehari set `𝕊 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `𝕊 > 0`, or the zero state.
    W1,
    /// `𝕊 < 0`.
    W2,
    /// `|𝕊| ≤ 1e-9 · Q`.
    Boundary,
}

/// All functionals of one state, computed with a single pass over each norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functionals {
    pub kinetic: f64,
    pub q: f64,
    /// `‖v‖^{n1+1}_{n1+1}`
    pub vnorm_n1: f64,
    /// `‖p‖^{n2+1}_{n2+1}`
    pub pnorm_n2: f64,
    pub n1: f64,
    pub n2: f64,
}

impl Functionals {
    pub fn of(state: &State, params: &MaterialParams, exps: &Exponents, grid: &Grid1D) -> Self {
        Self {
            kinetic: kinetic_energy(state, params, grid),
            q: grid.quadratic_form(&state.v, &state.p, params),
            vnorm_n1: grid.lp_norm_pow(&state.v, exps.n1 + 1.0),
            pnorm_n2: grid.lp_norm_pow(&state.p, exps.n2 + 1.0),
            n1: exps.n1,
            n2: exps.n2,
        }
    }

    pub fn quadratic_energy(&self) -> f64 {
        self.kinetic + 0.5 * self.q
    }

    pub fn source_potential(&self) -> f64 {
        self.vnorm_n1 / (self.n1 + 1.0) + self.pnorm_n2 / (self.n2 + 1.0)
    }

    pub fn potential_energy(&self) -> f64 {
        0.5 * self.q - self.source_potential()
    }

    pub fn total_energy(&self) -> f64 {
        self.quadratic_energy() - self.source_potential()
    }

    pub fn sign_functional(&self) -> f64 {
        self.q - self.vnorm_n1 - self.pnorm_n2
    }

    pub fn side(&self) -> Side {
        let s = self.sign_functional();
        if self.q == 0.0 && self.vnorm_n1 == 0.0 && self.pnorm_n2 == 0.0 {
            Side::W1
        } else if s.abs() <= BOUNDARY_TOL * self.q {
            Side::Boundary
        } else if s > 0.0 {
            Side::W1
        } else {
            Side::W2
        }
    }
}

/// `½(ρ‖v_t‖² + μ‖p_t‖²)`
pub fn kinetic_energy(state: &State, params: &MaterialParams, grid: &Grid1D) -> f64 {
    0.5 * (params.rho() * grid.l2_norm_sq(&state.vt) + params.mu() * grid.l2_norm_sq(&state.pt))
}

/// `E = ½(ρ‖v_t‖² + μ‖p_t‖² + Q)`
pub fn quadratic_energy(state: &State, params: &MaterialParams, grid: &Grid1D) -> f64 {
    kinetic_energy(state, params, grid) + 0.5 * grid.quadratic_form(&state.v, &state.p, params)
}

/// `J = ½Q − ‖v‖^{n1+1}/(n1+1) − ‖p‖^{n2+1}/(n2+1)`
pub fn potential_energy(
    state: &State,
    params: &MaterialParams,
    exps: &Exponents,
    grid: &Grid1D,
) -> f64 {
    Functionals::of(state, params, exps, grid).potential_energy()
}

/// `ℰ = kinetic + J`
pub fn total_energy(
    state: &State,
    params: &MaterialParams,
    exps: &Exponents,
    grid: &Grid1D,
) -> f64 {
    Functionals::of(state, params, exps, grid).total_energy()
}

/// `𝕊 = Q − ‖v‖^{n1+1} − ‖p‖^{n2+1}`
pub fn sign_functional(
    state: &State,
    params: &MaterialParams,
    exps: &Exponents,
    grid: &Grid1D,
) -> f64 {
    Functionals::of(state, params, exps, grid).sign_functional()
}

pub fn side(state: &State, params: &MaterialParams, exps: &Exponents, grid: &Grid1D) -> Side {
    Functionals::of(state, params, exps, grid).side()
}

/// Instantaneous dissipation `‖v_t‖^{m1+1}_{m1+1} + ‖p_t‖^{m2+1}_{m2+1}`.
pub fn damping_rate(state: &State, exps: &Exponents, grid: &Grid1D) -> f64 {
    grid.lp_norm_pow(&state.vt, exps.m1 + 1.0) + grid.lp_norm_pow(&state.pt, exps.m2 + 1.0)
}

/// One row of `energy.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Etot")]
    pub etot: f64,
    pub damping_cum: f64,
    pub residual: f64,
    pub sign_fn: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub vnorm_n1: f64,
    pub pnorm_n2: f64,
}

impl EnergyRecord {
    pub const CSV_HEADER: &'static str =
        "t,E,J,Etot,damping_cum,residual,sign_fn,Q,vnorm_n1,pnorm_n2";

    /// Builds a record; `residual` is measured against `reference`, the
    /// balanced energy at `t = 0`, using `balanced` as the current one.
    pub fn new(t: f64, f: &Functionals, damping_cum: f64, balanced: f64, reference: f64) -> Self {
        Self {
            t,
            e: f.quadratic_energy(),
            j: f.potential_energy(),
            etot: f.total_energy(),
            damping_cum,
            residual: (balanced + damping_cum - reference).abs(),
            sign_fn: f.sign_functional(),
            q: f.q,
            vnorm_n1: f.vnorm_n1,
            pnorm_n2: f.pnorm_n2,
        }
    }

    /// Kinetic part, recovered as `E − ½Q`.
    pub fn kinetic(&self) -> f64 {
        self.e - 0.5 * self.q
    }
}

/// `|ℰ(t_k) + damping_cum(t_k) − ℰ(0)|` for every record.
pub fn energy_identity_residual(records: &[EnergyRecord]) -> Vec<f64> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let e0 = first.etot + first.damping_cum;
    records
        .iter()
        .map(|r| (r.etot + r.damping_cum - e0).abs())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ExponentMode;

    fn setup() -> (Grid1D, MaterialParams, Exponents) {
        (
            Grid1D::new(1.0, 41).unwrap(),
            MaterialParams::new(1.0, 2.0, 1.0, 1.0, 1.0).unwrap(),
            Exponents::validate(1.0, 1.0, 2.0, 2.0, ExponentMode::General).unwrap(),
        )
    }

    #[test]
    fn zero_state_is_w1_with_zero_energy() {
        let (g, m, e) = setup();
        let s = State::zeros(&g);
        let f = Functionals::of(&s, &m, &e, &g);
        assert_eq!(f.total_energy(), 0.0);
        assert_eq!(f.sign_functional(), 0.0);
        assert_eq!(f.side(), Side::W1);
        assert_eq!(quadratic_energy(&s, &m, &g), 0.0);
    }

    #[test]
    fn velocity_only_state() {
        let (g, m, _) = setup();
        let mut s = State::zeros(&g);
        s.vt = g.sine_mode(2);
        let expected = 0.5 * g.l2_norm_sq(&s.vt);
        assert_eq!(quadratic_energy(&s, &m, &g), expected);
    }

    #[test]
    fn amplitude_controls_side() {
        let (g, m, e) = setup();
        let base = State::from_modes(&g, &[1.0], &[0.5], &[], &[]);
        assert_eq!(side(&base.scaled(1e-3), &m, &e, &g), Side::W1);
        assert_eq!(side(&base.scaled(1e3), &m, &e, &g), Side::W2);
    }

    #[test]
    fn potential_is_even() {
        let (g, m, e) = setup();
        let s = State::from_modes(&g, &[1.0, -0.4], &[0.3], &[], &[]);
        let a = potential_energy(&s, &m, &e, &g);
        let b = potential_energy(&s.scaled(-1.0), &m, &e, &g);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn residual_starts_at_zero() {
        let (g, m, e) = setup();
        let s = State::from_modes(&g, &[0.2], &[], &[0.1], &[]);
        let f = Functionals::of(&s, &m, &e, &g);
        let r0 = EnergyRecord::new(0.0, &f, 0.0, f.total_energy(), f.total_energy());
        assert_eq!(energy_identity_residual(&[r0]), vec![0.0]);
        assert_eq!(r0.residual, 0.0);
    }
}
