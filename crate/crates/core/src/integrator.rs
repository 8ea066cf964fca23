//! Time stepping.
//!
//! Unknowns live on nodes `1..nx` (node 0 is clamped). Writing `X = (v, p)`,
//! `U = (v_t, p_t)`, `R = diag(ρ, μ)` and `W` for the trapezoid weights, the
//! semi-discrete system is `R W U' = −S X + W (f(X) − g(U))` with the
//! symmetric stiffness `S` satisfying `Xᵀ S X = Q`.
//!
//! [`Scheme::SemiImplicit`] composes
//! `D(dt/2) K(dt/2) L(dt) K(dt/2) D(dt/2)` where `D` is a pointwise damping
//! substep, `K` an explicit source kick and `L` the implicit midpoint rule for
//! the linear part. [`Scheme::ImplicitMidpoint`] applies the midpoint rule to
//! the full system and solves it with Newton's method.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banded::{Block, BlockTridiag};
use crate::diagnostics::{damping_rate, EnergyRecord, Functionals};
use crate::grid::{abs_pow, Grid1D, State};
use crate::model::{Exponents, MaterialParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ImplicitMidpoint,
    #[default]
    SemiImplicit,
}

/// Which quantity crossed the blow-up cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trigger {
    GradientNorm,
    QuadraticForm,
    NonFinite,
}

impl std::fmt::Display for Trigger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Trigger::GradientNorm => "gradient-norm",
            Trigger::QuadraticForm => "quadratic-form",
            Trigger::NonFinite => "non-finite",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("blow-up detected at t = {t} ({trigger})")]
    BlowupDetected { t: f64, trigger: Trigger },
    #[error("nonlinear solve did not converge after {iterations} iterations at t = {t}")]
    NoConvergence { t: f64, iterations: usize },
    #[error("invalid step configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub blowup_cutoff: f64,
    /// Include the damping terms (switching off gives the undamped system).
    pub damping: bool,
    /// Include the source terms.
    pub sources: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: Scheme::SemiImplicit,
            newton_tol: 1e-12,
            newton_max_iter: 60,
            blowup_cutoff: 1e6,
            damping: true,
            sources: true,
        }
    }
}

impl StepConfig {
    /// `0.4 · dx / c_wave`; a guideline for accuracy, not a stability limit.
    pub fn suggested_dt(grid: &Grid1D, params: &MaterialParams) -> f64 {
        0.4 * grid.dx() / params.wave_speed()
    }

    pub fn validate(&self) -> Result<(), StepError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(StepError::InvalidConfig(format!(
                "dt = {} must be positive",
                self.dt
            )));
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return Err(StepError::InvalidConfig(format!(
                "newton_tol = {} must be positive",
                self.newton_tol
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(StepError::InvalidConfig(
                "newton_max_iter must be at least 1".into(),
            ));
        }
        if !(self.blowup_cutoff > 0.0) {
            return Err(StepError::InvalidConfig(format!(
                "blowup_cutoff = {} must be positive",
                self.blowup_cutoff
            )));
        }
        Ok(())
    }
}

/// Root of `x + dt |x|^{m−1} x = r`.
pub fn damping_solve(r: f64, dt: f64, m: f64) -> Result<f64, StepError> {
    const MAX_ITER: usize = 200;
    const TOL: f64 = 1e-15;
    if r == 0.0 || !r.is_finite() {
        return Ok(r);
    }
    if m == 1.0 {
        return Ok(r / (1.0 + dt));
    }
    // Solve for |x| on [0, |r|] and restore the sign at the end.
    let a = r.abs();
    let phi = |x: f64| x + dt * abs_pow(x, m) - a;
    let scale = a.max(1.0);
    let (mut lo, mut hi) = (0.0, a);
    let mut x = a / (1.0 + dt);
    for _ in 0..MAX_ITER {
        let f = phi(x);
        if f.abs() <= TOL * scale {
            return Ok(r.signum() * x);
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = 1.0 + dt * m * abs_pow(x, m - 1.0);
        let mut next = x - f / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x || hi - lo <= f64::EPSILON * a {
            return Ok(r.signum() * next);
        }
        x = next;
    }
    Err(StepError::NoConvergence {
        t: f64::NAN,
        iterations: MAX_ITER,
    })
}

fn source(u: f64, n: f64) -> f64 {
    abs_pow(u, n - 1.0) * u
}

fn source_deriv(u: f64, n: f64) -> f64 {
    n * abs_pow(u, n - 1.0)
}

fn damping(u: f64, m: f64) -> f64 {
    abs_pow(u, m - 1.0) * u
}

fn damping_deriv(u: f64, m: f64) -> f64 {
    m * abs_pow(u, m - 1.0)
}

/// Reusable stepper holding the factorized linear operator for a fixed `dt`.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: MaterialParams,
    exps: Exponents,
    grid: Grid1D,
    cfg: StepConfig,
    weights: Vec<f64>,
    linear: BlockTridiag,
}

impl Stepper {
    pub fn new(
        params: &MaterialParams,
        exps: &Exponents,
        grid: &Grid1D,
        cfg: &StepConfig,
    ) -> Result<Self, StepError> {
        cfg.validate()?;
        let weights: Vec<f64> = (1..grid.nx()).map(|j| grid.weight(j)).collect();
        let mut s = Self {
            params: *params,
            exps: *exps,
            grid: *grid,
            cfg: *cfg,
            weights,
            linear: BlockTridiag::factor(&[[[1.0, 0.0], [0.0, 1.0]]], &[]).expect("identity"),
        };
        let (diag, upper) = s.implicit_matrix(&vec![[0.0; 2]; s.weights.len()]);
        s.linear = BlockTridiag::factor(&diag, &upper)
            .ok_or_else(|| StepError::InvalidConfig("singular linear operator".into()))?;
        Ok(s)
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    /// Coupling matrix `[[α, −γβ], [−γβ, β]]`.
    fn coupling(&self) -> Block {
        let gb = self.params.gamma() * self.params.beta();
        [[self.params.alpha(), -gb], [-gb, self.params.beta()]]
    }

    /// `R W + dt²/4 S + diag(extra)`, with `extra` added to the diagonal of each node block.
    fn implicit_matrix(&self, extra: &[[f64; 2]]) -> (Vec<Block>, Vec<Block>) {
        let n = self.weights.len();
        let h = self.grid.dx();
        let c = self.coupling();
        let q = 0.25 * self.cfg.dt * self.cfg.dt;
        let mass = [self.params.rho(), self.params.mu()];
        let diag = (0..n)
            .map(|i| {
                let k = if i + 1 == n { 1.0 / h } else { 2.0 / h };
                let mut b = [[0.0; 2]; 2];
                for r in 0..2 {
                    for col in 0..2 {
                        b[r][col] = q * k * c[r][col];
                    }
                    b[r][r] += mass[r] * self.weights[i] + extra[i][r];
                }
                b
            })
            .collect();
        let off = -q / h;
        let upper = (0..n.saturating_sub(1))
            .map(|_| {
                [
                    [off * c[0][0], off * c[0][1]],
                    [off * c[1][0], off * c[1][1]],
                ]
            })
            .collect();
        (diag, upper)
    }

    /// `S X` on the unknown nodes.
    fn apply_stiffness(&self, x: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let n = x.len();
        let h = self.grid.dx();
        let c = self.coupling();
        (0..n)
            .map(|i| {
                // K x at node i: (2x_i − x_{i−1} − x_{i+1})/h, last row (x_i − x_{i−1})/h
                let prev = if i == 0 { [0.0; 2] } else { x[i - 1] };
                let kx: [f64; 2] = if i + 1 == n {
                    [(x[i][0] - prev[0]) / h, (x[i][1] - prev[1]) / h]
                } else {
                    let next = x[i + 1];
                    [
                        (2.0 * x[i][0] - prev[0] - next[0]) / h,
                        (2.0 * x[i][1] - prev[1] - next[1]) / h,
                    ]
                };
                [
                    c[0][0] * kx[0] + c[0][1] * kx[1],
                    c[1][0] * kx[0] + c[1][1] * kx[1],
                ]
            })
            .collect()
    }

    fn pack(a: &[f64], b: &[f64]) -> Vec<[f64; 2]> {
        a[1..].iter().zip(&b[1..]).map(|(x, y)| [*x, *y]).collect()
    }

    fn unpack(src: &[[f64; 2]], a: &mut [f64], b: &mut [f64]) {
        a[0] = 0.0;
        b[0] = 0.0;
        for (i, u) in src.iter().enumerate() {
            a[i + 1] = u[0];
            b[i + 1] = u[1];
        }
    }

    fn damp(&self, s: &mut State, h: f64) -> Result<(), StepError> {
        let cv = h / (2.0 * self.params.rho());
        let cp = h / (2.0 * self.params.mu());
        for j in 1..self.grid.nx() {
            let y = damping_solve(s.vt[j], cv, self.exps.m1).map_err(|e| with_time(e, s.t))?;
            s.vt[j] = 2.0 * y - s.vt[j];
            let y = damping_solve(s.pt[j], cp, self.exps.m2).map_err(|e| with_time(e, s.t))?;
            s.pt[j] = 2.0 * y - s.pt[j];
        }
        Ok(())
    }

    fn kick(&self, s: &mut State, h: f64) {
        let cv = h / self.params.rho();
        let cp = h / self.params.mu();
        for j in 1..self.grid.nx() {
            s.vt[j] += cv * source(s.v[j], self.exps.n1);
            s.pt[j] += cp * source(s.p[j], self.exps.n2);
        }
    }

    /// Implicit midpoint step of the linear conservative part over `dt`
    /// (`backward` runs it over `−dt`).
    fn linear_flow(&self, s: &mut State, backward: bool) {
        let dt = if backward { -self.cfg.dt } else { self.cfg.dt };
        let x = Self::pack(&s.v, &s.p);
        let u = Self::pack(&s.vt, &s.pt);
        let sx = self.apply_stiffness(&x);
        let su = self.apply_stiffness(&u);
        let q = 0.25 * dt * dt;
        let mass = [self.params.rho(), self.params.mu()];
        let rhs: Vec<[f64; 2]> = (0..u.len())
            .map(|i| {
                let w = self.weights[i];
                [
                    mass[0] * w * u[i][0] - q * su[i][0] - dt * sx[i][0],
                    mass[1] * w * u[i][1] - q * su[i][1] - dt * sx[i][1],
                ]
            })
            .collect();
        let u_new = self.linear.solve(&rhs);
        let x_new: Vec<[f64; 2]> = x
            .iter()
            .zip(u.iter().zip(&u_new))
            .map(|(x, (a, b))| {
                [
                    x[0] + 0.5 * dt * (a[0] + b[0]),
                    x[1] + 0.5 * dt * (a[1] + b[1]),
                ]
            })
            .collect();
        Self::unpack(&u_new, &mut s.vt, &mut s.pt);
        Self::unpack(&x_new, &mut s.v, &mut s.p);
    }

    /// One step of the conservative linear substep alone; used to check
    /// reversibility.
    pub fn conservative_step(&self, state: &State, backward: bool) -> State {
        let mut s = state.clone();
        self.linear_flow(&mut s, backward);
        s.t = state.t + if backward { -self.cfg.dt } else { self.cfg.dt };
        s
    }

    fn semi_implicit(&self, s: &mut State) -> Result<(), StepError> {
        let h = 0.5 * self.cfg.dt;
        if self.cfg.damping {
            self.damp(s, h)?;
        }
        if self.cfg.sources {
            self.kick(s, h);
        }
        self.linear_flow(s, false);
        if self.cfg.sources {
            self.kick(s, h);
        }
        if self.cfg.damping {
            self.damp(s, h)?;
        }
        Ok(())
    }

    fn implicit_midpoint(&self, s: &mut State) -> Result<(), StepError> {
        let dt = self.cfg.dt;
        let x = Self::pack(&s.v, &s.p);
        let u = Self::pack(&s.vt, &s.pt);
        let n = u.len();
        let mass = [self.params.rho(), self.params.mu()];
        let (m, nn) = ([self.exps.m1, self.exps.m2], [self.exps.n1, self.exps.n2]);
        let mut u_new = u.clone();
        for iter in 0..self.cfg.newton_max_iter {
            let ubar: Vec<[f64; 2]> = u
                .iter()
                .zip(&u_new)
                .map(|(a, b)| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
                .collect();
            let xbar: Vec<[f64; 2]> = x
                .iter()
                .zip(&ubar)
                .map(|(x, b)| [x[0] + 0.5 * dt * b[0], x[1] + 0.5 * dt * b[1]])
                .collect();
            let sx = self.apply_stiffness(&xbar);
            let mut extra = vec![[0.0; 2]; n];
            let mut resid = vec![[0.0; 2]; n];
            for i in 0..n {
                let w = self.weights[i];
                for c in 0..2 {
                    let mut r = mass[c] * w * (u_new[i][c] - u[i][c]) + dt * sx[i][c];
                    if self.cfg.damping {
                        r += dt * w * damping(ubar[i][c], m[c]);
                        extra[i][c] += 0.5 * dt * w * damping_deriv(ubar[i][c], m[c]);
                    }
                    if self.cfg.sources {
                        r -= dt * w * source(xbar[i][c], nn[c]);
                        extra[i][c] -= 0.25 * dt * dt * w * source_deriv(xbar[i][c], nn[c]);
                    }
                    resid[i][c] = -r;
                }
            }
            let delta = if self.cfg.damping || self.cfg.sources {
                let (diag, upper) = self.implicit_matrix(&extra);
                match BlockTridiag::factor(&diag, &upper) {
                    Some(f) => f.solve(&resid),
                    None => {
                        return Err(StepError::NoConvergence {
                            t: s.t,
                            iterations: iter + 1,
                        })
                    }
                }
            } else {
                self.linear.solve(&resid)
            };
            let mut dmax: f64 = 0.0;
            let mut umax: f64 = 0.0;
            for (a, d) in u_new.iter_mut().zip(&delta) {
                for c in 0..2 {
                    a[c] += d[c];
                    dmax = dmax.max(d[c].abs());
                    umax = umax.max(a[c].abs());
                }
            }
            if !dmax.is_finite() {
                break;
            }
            if dmax <= self.cfg.newton_tol * (1.0 + umax) {
                let x_new: Vec<[f64; 2]> = x
                    .iter()
                    .zip(u.iter().zip(&u_new))
                    .map(|(x, (a, b))| {
                        [
                            x[0] + 0.5 * dt * (a[0] + b[0]),
                            x[1] + 0.5 * dt * (a[1] + b[1]),
                        ]
                    })
                    .collect();
                Self::unpack(&u_new, &mut s.vt, &mut s.pt);
                Self::unpack(&x_new, &mut s.v, &mut s.p);
                return Ok(());
            }
        }
        Err(StepError::NoConvergence {
            t: s.t,
            iterations: self.cfg.newton_max_iter,
        })
    }

    /// Advances one step without the blow-up check.
    pub fn advance(&self, state: &State) -> Result<State, StepError> {
        let mut s = state.clone();
        match self.cfg.scheme {
            Scheme::SemiImplicit => self.semi_implicit(&mut s)?,
            Scheme::ImplicitMidpoint => self.implicit_midpoint(&mut s)?,
        }
        s.t = state.t + self.cfg.dt;
        Ok(s)
    }

    /// Returns the trigger if `state` is past the blow-up cutoff.
    pub fn check(&self, state: &State) -> Option<Trigger> {
        if !state.is_finite() {
            return Some(Trigger::NonFinite);
        }
        let g = self.grid.grad_norm_sq(&state.v);
        let q = self.grid.quadratic_form(&state.v, &state.p, &self.params);
        if !(g.is_finite() && q.is_finite()) {
            Some(Trigger::NonFinite)
        } else if g > self.cfg.blowup_cutoff {
            Some(Trigger::GradientNorm)
        } else if q > self.cfg.blowup_cutoff {
            Some(Trigger::QuadraticForm)
        } else {
            None
        }
    }

    /// One checked step.
    pub fn step(&self, state: &State) -> Result<State, StepError> {
        let s = self.advance(state)?;
        match self.check(&s) {
            Some(trigger) => Err(StepError::BlowupDetected { t: s.t, trigger }),
            None => Ok(s),
        }
    }

    /// Energy balanced by the dissipation: `ℰ` with sources on, `E` without.
    fn balanced_energy(&self, f: &Functionals) -> f64 {
        if self.cfg.sources {
            f.total_energy()
        } else {
            f.quadratic_energy()
        }
    }

    fn dissipation(&self, s: &State) -> f64 {
        if self.cfg.damping {
            damping_rate(s, &self.exps, &self.grid)
        } else {
            0.0
        }
    }

    /// Runs to `t_end`, recording every `record_every` steps and at the final step.
    pub fn simulate(
        &self,
        state0: &State,
        t_end: f64,
        record_every: usize,
    ) -> Result<Trajectory, StepError> {
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(StepError::InvalidConfig(format!(
                "t_end = {t_end} must be non-negative"
            )));
        }
        let record_every = record_every.max(1);
        let dt = self.cfg.dt;
        let n_steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
        let t0 = state0.t;

        let mut state = state0.clone();
        state.clamp();
        let f0 = Functionals::of(&state, &self.params, &self.exps, &self.grid);
        let reference = self.balanced_energy(&f0);
        let mut traj = Trajectory::default();
        let mut cum = 0.0;
        let mut rate = self.dissipation(&state);
        traj.push(
            &state,
            &f0,
            cum,
            reference,
            reference,
            &self.params,
            &self.grid,
        );

        for k in 1..=n_steps {
            let mut next = self.advance(&state)?;
            next.t = t0 + k as f64 * dt;
            let trigger = self.check(&next);
            let next_rate = self.dissipation(&next);
            cum += 0.5 * dt * (rate + next_rate);
            rate = next_rate;
            state = next;
            if trigger.is_some() || k % record_every == 0 || k == n_steps {
                let f = Functionals::of(&state, &self.params, &self.exps, &self.grid);
                traj.push(
                    &state,
                    &f,
                    cum,
                    self.balanced_energy(&f),
                    reference,
                    &self.params,
                    &self.grid,
                );
            }
            if let Some(trigger) = trigger {
                traj.outcome = Outcome::Blowup {
                    t_detect: state.t,
                    trigger,
                };
                break;
            }
        }
        traj.final_state = Some(state);
        Ok(traj)
    }
}

fn with_time(e: StepError, t: f64) -> StepError {
    match e {
        StepError::NoConvergence { iterations, .. } => StepError::NoConvergence { t, iterations },
        other => other,
    }
}

/// One checked step with a freshly built [`Stepper`].
pub fn step(
    state: &State,
    params: &MaterialParams,
    exps: &Exponents,
    grid: &Grid1D,
    cfg: &StepConfig,
) -> Result<State, StepError> {
    Stepper::new(params, exps, grid, cfg)?.step(state)
}

pub fn simulate(
    state0: &State,
    params: &MaterialParams,
    exps: &Exponents,
    grid: &Grid1D,
    cfg: &StepConfig,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory, StepError> {
    Stepper::new(params, exps, grid, cfg)?.simulate(state0, t_end, record_every)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Outcome {
    #[default]
    Completed,
    Blowup {
        t_detect: f64,
        trigger: Trigger,
    },
}

impl Outcome {
    pub fn is_blowup(&self) -> bool {
        matches!(self, Outcome::Blowup { .. })
    }

    pub fn t_detect(&self) -> Option<f64> {
        match self {
            Outcome::Blowup { t_detect, .. } => Some(*t_detect),
            Outcome::Completed => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Blowup { .. } => "blowup",
        }
    }
}

/// `N = ½(ρ‖v‖² + μ‖p‖²)` and `N′ = ρ∫v v_t + μ∫p p_t` at one record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub t: f64,
    pub n: f64,
    pub n_prime: f64,
}

impl Moments {
    pub fn of(state: &State, params: &MaterialParams, grid: &Grid1D) -> Self {
        Self {
            t: state.t,
            n: 0.5
                * (params.rho() * grid.l2_norm_sq(&state.v)
                    + params.mu() * grid.l2_norm_sq(&state.p)),
            n_prime: params.rho() * grid.inner(&state.v, &state.vt)
                + params.mu() * grid.inner(&state.p, &state.pt),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub records: Vec<EnergyRecord>,
    pub moments: Vec<Moments>,
    pub final_state: Option<State>,
    pub outcome: Outcome,
}

impl Trajectory {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        state: &State,
        f: &Functionals,
        cum: f64,
        balanced: f64,
        reference: f64,
        params: &MaterialParams,
        grid: &Grid1D,
    ) {
        self.records
            .push(EnergyRecord::new(state.t, f, cum, balanced, reference));
        self.moments.push(Moments::of(state, params, grid));
    }

    pub fn last(&self) -> &EnergyRecord {
        self.records
            .last()
            .expect("a trajectory always holds the initial record")
    }
}
