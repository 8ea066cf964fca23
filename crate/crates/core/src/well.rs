//! Potential-well geometry: embedding constants, the barrier function `Λ`,
//! its maximizer `s*`, Nehari projections and the initial-data classification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banded::Tridiag;
use crate::diagnostics::{Functionals, Side};
use crate::grid::{Grid1D, State};
use crate::model::{Exponents, MaterialParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WellError {
    #[error("the Nehari projection is undefined for the zero state")]
    ZeroState,
    #[error("delta = {delta} must lie in (0, s* = {s_star})")]
    DeltaOutOfRange { delta: f64, s_star: f64 },
    #[error("critical point at lambda = {lambda} is not a maximum")]
    NotAMaximum { lambda: f64 },
}

pub const EMBEDDING_RESTARTS: usize = 16;
pub const EMBEDDING_ITERS: usize = 500;
const EMBEDDING_STEP: f64 = 1e-2;
const INIT_MODES: usize = 8;

/// Stiffness `K` and trapezoid weights restricted to the free nodes `1..nx`,
/// so that `uᵀKu = ‖u_x‖²` and `uᵀWu = ‖u‖²` for `u` clamped at node 0.
struct Operators {
    k: Tridiag,
    k_diag: Vec<f64>,
    k_off: f64,
    w: Vec<f64>,
}

impl Operators {
    fn new(grid: &Grid1D) -> Self {
        let n = grid.nx() - 1;
        let h = grid.dx();
        let k_diag: Vec<f64> = (0..n)
            .map(|i| if i + 1 == n { 1.0 / h } else { 2.0 / h })
            .collect();
        let upper = vec![-1.0 / h; n - 1];
        let k = Tridiag::factor(&k_diag, &upper).expect("stiffness is positive definite");
        let w = (1..grid.nx()).map(|j| grid.weight(j)).collect();
        Self {
            k,
            k_diag,
            k_off: -1.0 / h,
            w,
        }
    }

    fn energy(&self, u: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..u.len() {
            let mut ku = self.k_diag[i] * u[i];
            if i > 0 {
                ku += self.k_off * u[i - 1];
            }
            if i + 1 < u.len() {
                ku += self.k_off * u[i + 1];
            }
            s += u[i] * ku;
        }
        s
    }

    fn lq(&self, u: &[f64], q: f64) -> f64 {
        u.iter()
            .zip(&self.w)
            .map(|(x, w)| w * x.abs().powf(q))
            .sum()
    }

    fn normalize(&self, u: &mut [f64]) {
        let e = self.energy(u).sqrt();
        for x in u.iter_mut() {
            *x /= e;
        }
    }
}

/// `‖u‖_q^q / ‖u_x‖₂^q` for a grid function clamped at node 0.
pub fn embedding_quotient(grid: &Grid1D, u: &[f64], q: f64) -> f64 {
    grid.lp_norm_pow(u, q) / grid.grad_norm_sq(u).powf(0.5 * q)
}

fn ascend(ops: &Operators, q: f64, mut u: Vec<f64>) -> f64 {
    ops.normalize(&mut u);
    let mut f = ops.lq(&u, q);
    let mut step = EMBEDDING_STEP;
    for _ in 0..EMBEDDING_ITERS {
        let g: Vec<f64> = u
            .iter()
            .zip(&ops.w)
            .map(|(x, w)| q * w * x.abs().powf(q - 2.0) * x)
            .collect();
        let z = ops.k.solve(&g);
        // Sobolev gradient projected onto the tangent space of uᵀKu = 1.
        let dir: Vec<f64> = z.iter().zip(&u).map(|(z, x)| z - q * f * x).collect();
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand: Vec<f64> = u.iter().zip(&dir).map(|(x, d)| x + step * d).collect();
            ops.normalize(&mut cand);
            let fc = ops.lq(&cand, q);
            if fc > f {
                u = cand;
                f = fc;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    f
}

/// Best constant `B` with `‖u‖_q^q ≤ B ‖u_x‖₂^q` on the grid, estimated by
/// projected gradient ascent over several starts. The result is the best
/// value found, hence a lower bound on the discrete supremum.
pub fn embedding_constant(grid: &Grid1D, q: f64, seed: u64) -> f64 {
    let ops = Operators::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<Vec<f64>> = (1..=INIT_MODES)
        .map(|k| grid.sine_mode(k)[1..].to_vec())
        .collect();
    let mut best: f64 = 0.0;
    for restart in 0..EMBEDDING_RESTARTS {
        let u0: Vec<f64> = if restart == 0 {
            (1..grid.nx()).map(|j| grid.x(j)).collect()
        } else {
            let coeffs: Vec<f64> = (1..=INIT_MODES)
                .map(|k| rng.gen_range(-1.0..1.0) / k as f64)
                .collect();
            (0..grid.nx() - 1)
                .map(|i| {
                    let s: f64 = coeffs.iter().zip(&modes).map(|(c, m)| c * m[i]).sum();
                    s + rng.gen_range(-0.05..0.05)
                })
                .collect()
        };
        if ops.energy(&u0) > 0.0 {
            best = best.max(ascend(&ops, q, u0));
        }
    }
    best
}

/// Smallest `c` with `‖u‖₂ ≤ c ‖u_x‖₂` on the grid, from inverse iteration on
/// the generalized eigenproblem `K u = λ W u`.
pub fn poincare_constant(grid: &Grid1D) -> f64 {
    let ops = Operators::new(grid);
    let mut u: Vec<f64> = (1..grid.nx()).map(|j| grid.x(j)).collect();
    let mut lambda = f64::INFINITY;
    for _ in 0..500 {
        let wu: Vec<f64> = u.iter().zip(&ops.w).map(|(x, w)| x * w).collect();
        u = ops.k.solve(&wu);
        ops.normalize(&mut u);
        let next = 1.0 / ops.lq(&u, 2.0);
        let done = (next - lambda).abs() <= 1e-15 * next;
        lambda = next;
        if done {
            break;
        }
    }
    (1.0 / lambda).sqrt()
}

/// `Ĉ = max{B₁ M^{(n₁+1)/2}, B₂ M^{(n₂+1)/2}}` with `M = max{(2γ²+1)/α₁, 2/β}`.
pub fn c_hat_constant(b1: f64, b2: f64, params: &MaterialParams, n1: f64, n2: f64) -> f64 {
    let m = params.gradient_bound_factor();
    (b1 * m.powf(0.5 * (n1 + 1.0))).max(b2 * m.powf(0.5 * (n2 + 1.0)))
}

/// `Λ(s) = s/2 − Ĉ s^{(n₁+1)/2}/(n₁+1) − Ĉ s^{(n₂+1)/2}/(n₂+1)`
pub fn barrier(s: f64, c_big: f64, n1: f64, n2: f64) -> f64 {
    0.5 * s
        - c_big / (n1 + 1.0) * s.powf(0.5 * (n1 + 1.0))
        - c_big / (n2 + 1.0) * s.powf(0.5 * (n2 + 1.0))
}

/// `Λ′(s) = ½ − (Ĉ/2)(s^{(n₁−1)/2} + s^{(n₂−1)/2})`
pub fn barrier_slope(s: f64, c_big: f64, n1: f64, n2: f64) -> f64 {
    0.5 - 0.5 * c_big * (s.powf(0.5 * (n1 - 1.0)) + s.powf(0.5 * (n2 - 1.0)))
}

/// Root of an increasing function with `h(0) < 0`, by bracketing and bisection.
fn increasing_root(h: impl Fn(f64) -> f64) -> f64 {
    let mut hi = 1.0;
    while h(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if h(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// The unique positive zero `s*` of `Λ′` and the barrier height `Λ(s*)`.
pub fn s_star_solve(c_big: f64, n1: f64, n2: f64) -> (f64, f64) {
    let s =
        increasing_root(|s| c_big * (s.powf(0.5 * (n1 - 1.0)) + s.powf(0.5 * (n2 - 1.0))) - 1.0);
    (s, barrier(s, c_big, n1, n2))
}

/// `y₀` with `Ĉ(2y₀)^{(n₁−1)/2} + Ĉ(2y₀)^{(n₂−1)/2} = 1` and the energy
/// threshold `𝓜 = (ĉ−2) y₀ / (2(2+ĉ))`.
pub fn y0_and_threshold(c_big: f64, n1: f64, n2: f64, c_hat: f64) -> (f64, f64) {
    let y0 = increasing_root(|y| {
        c_big * (2.0 * y).powf(0.5 * (n1 - 1.0)) + c_big * (2.0 * y).powf(0.5 * (n2 - 1.0)) - 1.0
    });
    (y0, (c_hat - 2.0) / (2.0 * (2.0 + c_hat)) * y0)
}

/// Maximizer of `λ ↦ J(λv, λp)` and the maximum value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NehariPoint {
    pub lambda: f64,
    pub j_max: f64,
}

/// Scaling `λ*` that puts `(v, p)` on the Nehari set:
/// `Q = λ^{n₁−1}‖v‖^{n₁+1} + λ^{n₂−1}‖p‖^{n₂+1}`.
pub fn nehari_point(
    v: &[f64],
    p: &[f64],
    params: &MaterialParams,
    exps: &Exponents,
    grid: &Grid1D,
) -> Result<NehariPoint, WellError> {
    let q = grid.quadratic_form(v, p, params);
    let a = grid.lp_norm_pow(v, exps.n1 + 1.0);
    let b = grid.lp_norm_pow(p, exps.n2 + 1.0);
    if q == 0.0 || a + b == 0.0 {
        return Err(WellError::ZeroState);
    }
    let (n1, n2) = (exps.n1, exps.n2);
    let lambda = if n1 == n2 {
        (q / (a + b)).powf(1.0 / (n1 - 1.0))
    } else {
        increasing_root(|l| l.powf(n1 - 1.0) * a + l.powf(n2 - 1.0) * b - q)
    };
    let curvature = q - n1 * lambda.powf(n1 - 1.0) * a - n2 * lambda.powf(n2 - 1.0) * b;
    if !(curvature < 0.0) {
        return Err(WellError::NotAMaximum { lambda });
    }
    let j_max = 0.5 * lambda * lambda * q
        - lambda.powf(n1 + 1.0) * a / (n1 + 1.0)
        - lambda.powf(n2 + 1.0) * b / (n2 + 1.0);
    Ok(NehariPoint { lambda, j_max })
}

pub fn nehari_lambda_star(
    state: &State,
    params: &MaterialParams,
    exps: &Exponents,
    grid: &Grid1D,
) -> Result<NehariPoint, WellError> {
    nehari_point(&state.v, &state.p, params, exps, grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaCheck {
    pub admissible: bool,
    pub c_tilde: f64,
    pub factor: f64,
    pub c_delta: f64,
}

/// Admissibility of `δ` for the decay estimates.
pub fn check_delta(
    delta: f64,
    s_star: f64,
    c_big: f64,
    n1: f64,
    n2: f64,
) -> Result<DeltaCheck, WellError> {
    if !(delta > 0.0 && delta < s_star) {
        return Err(WellError::DeltaOutOfRange { delta, s_star });
    }
    let s = s_star - delta;
    let (a1, a2) = (s.powf(0.5 * (n1 - 1.0)), s.powf(0.5 * (n2 - 1.0)));
    let c_tilde = c_big * (a1 + a2);
    let r = (n2 + 1.0) * (n1 - 1.0) / ((n2 - 1.0) * (n1 + 1.0));
    let factor = r.max(1.0 / r);
    let c_hat = (n1 + 1.0).min(n2 + 1.0);
    let c_delta = 2.0 * c_hat / (c_hat - 2.0)
        * c_big
        * ((0.5 - 1.0 / (n1 + 1.0)) * a1 + (0.5 - 1.0 / (n2 + 1.0)) * a2);
    Ok(DeltaCheck {
        admissible: c_tilde * factor < 1.0,
        c_tilde,
        factor,
        c_delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    GlobalPredicted,
    BlowupPredicted,
    BlowupPredictedNegative,
    Indeterminate,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::GlobalPredicted => "global-predicted",
            Classification::BlowupPredicted => "blowup-predicted",
            Classification::BlowupPredictedNegative => "blowup-predicted-negative",
            Classification::Indeterminate => "indeterminate",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellReport {
    #[serde(rename = "B1")]
    pub b1: f64,
    #[serde(rename = "B2")]
    pub b2: f64,
    #[serde(rename = "C_hat")]
    pub c_big: f64,
    pub s_star: f64,
    #[serde(rename = "Lambda_star")]
    pub lambda_star: f64,
    pub y0: f64,
    #[serde(rename = "M_threshold")]
    pub m_threshold: f64,
    pub poincare_c: f64,
    /// Smallest Nehari value `J(λ* u)` over the probe set; an upper bound on the well depth.
    pub d_upper: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
}

impl WellReport {
    /// Builds the report. Embedding constants are shared when `n₁ = n₂`.
    pub fn compute(grid: &Grid1D, params: &MaterialParams, exps: &Exponents, seed: u64) -> Self {
        let b1 = embedding_constant(grid, exps.n1 + 1.0, seed);
        let b2 = if exps.n2 == exps.n1 {
            b1
        } else {
            embedding_constant(grid, exps.n2 + 1.0, seed)
        };
        let c_big = c_hat_constant(b1, b2, params, exps.n1, exps.n2);
        let (s_star, lambda_star) = s_star_solve(c_big, exps.n1, exps.n2);
        let (y0, m_threshold) = y0_and_threshold(c_big, exps.n1, exps.n2, exps.c_hat);
        Self {
            b1,
            b2,
            c_big,
            s_star,
            lambda_star,
            y0,
            m_threshold,
            poincare_c: poincare_constant(grid),
            d_upper: nehari_upper_bound(grid, params, exps, seed),
            classification: None,
        }
    }

    pub fn with_classification(
        mut self,
        state0: &State,
        params: &MaterialParams,
        exps: &Exponents,
        grid: &Grid1D,
    ) -> Self {
        self.classification = Some(classify_initial(state0, &self, params, exps, grid));
        self
    }
}

/// `min J(λ* u)` over single modes 1..4 in `v` only, `p` only, `v = p`,
/// `v = −p`, plus random mode combinations.
pub fn nehari_upper_bound(
    grid: &Grid1D,
    params: &MaterialParams,
    exps: &Exponents,
    seed: u64,
) -> f64 {
    let zero = vec![0.0; grid.nx()];
    let mut probes: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for k in 1..=4 {
        let m = grid.sine_mode(k);
        let neg: Vec<f64> = m.iter().map(|x| -x).collect();
        probes.push((m.clone(), zero.clone()));
        probes.push((zero.clone(), m.clone()));
        probes.push((m.clone(), m.clone()));
        probes.push((m, neg));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for _ in 0..8 {
        let cv: Vec<f64> = (1..=4)
            .map(|k| rng.gen_range(-1.0..1.0) / k as f64)
            .collect();
        let cp: Vec<f64> = (1..=4)
            .map(|k| rng.gen_range(-1.0..1.0) / k as f64)
            .collect();
        probes.push((grid.mode_sum(&cv), grid.mode_sum(&cp)));
    }
    probes
        .iter()
        .filter_map(|(v, p)| nehari_point(v, p, params, exps, grid).ok())
        .map(|n| n.j_max)
        .fold(f64::INFINITY, f64::min)
}

/// Predicts the fate of the initial state from `ℰ(0)`, the side of the
/// Nehari set, and the thresholds `Λ(s*)` and `𝓜`.
pub fn classify_initial(
    state0: &State,
    report: &WellReport,
    params: &MaterialParams,
    exps: &Exponents,
    grid: &Grid1D,
) -> Classification {
    let f = Functionals::of(state0, params, exps, grid);
    let e0 = f.total_energy();
    let side = f.side();
    if e0 < 0.0 && exps.blowup_regime {
        Classification::BlowupPredictedNegative
    } else if side == Side::W1 && e0 < report.lambda_star {
        Classification::GlobalPredicted
    } else if side == Side::W2 && e0 >= 0.0 && e0 < report.m_threshold && exps.blowup_regime {
        Classification::BlowupPredicted
    } else {
        Classification::Indeterminate
    }
}
