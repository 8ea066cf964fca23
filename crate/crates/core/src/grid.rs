//! Uniform grid on `[0, L]`, discrete operators, norms and the stiffness form.
//!
//! Node 0 is clamped (`v = p = 0`). At `x = L` the coupled Neumann pair
//! `α v_x − γβ p_x = 0`, `β p_x − γβ v_x = 0` has determinant `β α₁ > 0`, so it
//! is equivalent to `v_x = p_x = 0`, which the second-difference operator
//! enforces through a mirror ghost node. Volume integrals use the trapezoid
//! rule, gradient integrals the cell midpoint rule; with this pairing
//! `⟨u, D₂w⟩ = −∫ u_x w_x` holds exactly for every `u` vanishing at node 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::MaterialParams;

/// `|x|^e`, using repeated multiplication for small integer exponents.
#[inline]
pub(crate) fn abs_pow(x: f64, e: f64) -> f64 {
    let a = x.abs();
    if e == 1.0 {
        a
    } else if e == 2.0 {
        a * a
    } else if e.fract() == 0.0 && (0.0..=16.0).contains(&e) {
        a.powi(e as i32)
    } else {
        a.powf(e)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("interval length must be finite and positive, got {0}")]
    BadLength(f64),
    #[error("need at least 3 nodes, got {0}")]
    TooFewNodes(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid1D {
    length: f64,
    nx: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(length: f64, nx: usize) -> Result<Self, GridError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(GridError::BadLength(length));
        }
        if nx < 3 {
            return Err(GridError::TooFewNodes(nx));
        }
        Ok(Self {
            length,
            nx,
            dx: length / (nx - 1) as f64,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    /// Trapezoid quadrature weight of node `j`.
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.nx - 1 {
            0.5 * self.dx
        } else {
            self.dx
        }
    }

    /// Forward differences, one per cell.
    pub fn grad(&self, field: &[f64]) -> Vec<f64> {
        debug_assert_eq!(field.len(), self.nx);
        field.windows(2).map(|w| (w[1] - w[0]) / self.dx).collect()
    }

    /// `‖u_x‖²₂` by the cell midpoint rule.
    pub fn grad_norm_sq(&self, field: &[f64]) -> f64 {
        field
            .windows(2)
            .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
            .sum::<f64>()
            / self.dx
    }

    /// `∫ a_x b_x` by the cell midpoint rule.
    pub fn grad_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.windows(2)
            .zip(b.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (y[1] - y[0]))
            .sum::<f64>()
            / self.dx
    }

    /// `∫ a b` by the trapezoid rule.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.nx);
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(j, (x, y))| self.weight(j) * x * y)
            .sum()
    }

    pub fn l2_norm_sq(&self, field: &[f64]) -> f64 {
        self.inner(field, field)
    }

    /// `‖u‖_q^q` by the trapezoid rule.
    pub fn lp_norm_pow(&self, field: &[f64], q: f64) -> f64 {
        debug_assert!(q >= 1.0);
        field
            .iter()
            .enumerate()
            .map(|(j, u)| self.weight(j) * abs_pow(*u, q))
            .sum()
    }

    /// `Q = α₁‖v_x‖² + β‖γ v_x − p_x‖²`.
    pub fn quadratic_form(&self, v: &[f64], p: &[f64], params: &MaterialParams) -> f64 {
        let g = params.gamma();
        let mut coupled = 0.0;
        let mut vv = 0.0;
        for (a, b) in v.windows(2).zip(p.windows(2)) {
            let dv = a[1] - a[0];
            let dp = b[1] - b[0];
            vv += dv * dv;
            let c = g * dv - dp;
            coupled += c * c;
        }
        (params.alpha1() * vv + params.beta() * coupled) / self.dx
    }

    /// Second difference with the Dirichlet row at node 0 zeroed and the
    /// mirror ghost `u[nx] = u[nx-2]` at `x = L`.
    pub fn second_difference(&self, field: &[f64]) -> Vec<f64> {
        let n = self.nx;
        let h2 = self.dx * self.dx;
        let mut out = vec![0.0; n];
        for j in 1..n - 1 {
            out[j] = (field[j + 1] - 2.0 * field[j] + field[j - 1]) / h2;
        }
        out[n - 1] = 2.0 * (field[n - 2] - field[n - 1]) / h2;
        out
    }

    /// Spatial right-hand sides `(α D₂v − γβ D₂p, β D₂p − γβ D₂v)`.
    pub fn coupled_laplacian(
        &self,
        v: &[f64],
        p: &[f64],
        params: &MaterialParams,
    ) -> (Vec<f64>, Vec<f64>) {
        let dv = self.second_difference(v);
        let dp = self.second_difference(p);
        let gb = params.gamma() * params.beta();
        let a: Vec<f64> = dv
            .iter()
            .zip(&dp)
            .map(|(x, y)| params.alpha() * x - gb * y)
            .collect();
        let b: Vec<f64> = dv
            .iter()
            .zip(&dp)
            .map(|(x, y)| params.beta() * y - gb * x)
            .collect();
        (a, b)
    }

    /// `sin((k − ½)πx/L)` sampled on the nodes, `k ≥ 1`. Satisfies both the
    /// clamp at 0 and the discrete Neumann closure at `L` for every `nx`.
    pub fn sine_mode(&self, k: usize) -> Vec<f64> {
        assert!(k >= 1, "modes are numbered from 1");
        let w = (k as f64 - 0.5) * std::f64::consts::PI / self.length;
        (0..self.nx).map(|j| (w * self.x(j)).sin()).collect()
    }

    /// Superposition `Σ_k c_k sin((k − ½)πx/L)`.
    pub fn mode_sum(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nx];
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                for (o, m) in out.iter_mut().zip(self.sine_mode(i + 1)) {
                    *o += c * m;
                }
            }
        }
        out
    }
}

/// Displacement `v`, electric displacement `p` and their velocities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub vt: Vec<f64>,
    pub pt: Vec<f64>,
}

impl State {
    pub fn zeros(grid: &Grid1D) -> Self {
        let n = grid.nx();
        Self {
            t: 0.0,
            v: vec![0.0; n],
            p: vec![0.0; n],
            vt: vec![0.0; n],
            pt: vec![0.0; n],
        }
    }

    /// Initial data from sine-mode coefficients for `(v₀, p₀, v₁, p₁)`.
    pub fn from_modes(grid: &Grid1D, v0: &[f64], p0: &[f64], v1: &[f64], p1: &[f64]) -> Self {
        let mut s = Self {
            t: 0.0,
            v: grid.mode_sum(v0),
            p: grid.mode_sum(p0),
            vt: grid.mode_sum(v1),
            pt: grid.mode_sum(p1),
        };
        s.clamp();
        s
    }

    /// Multiplies all four fields by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let f = |u: &Vec<f64>| u.iter().map(|x| c * x).collect();
        Self {
            t: self.t,
            v: f(&self.v),
            p: f(&self.p),
            vt: f(&self.vt),
            pt: f(&self.pt),
        }
    }

    /// Enforces the clamp at node 0 exactly.
    pub fn clamp(&mut self) {
        self.v[0] = 0.0;
        self.p[0] = 0.0;
        self.vt[0] = 0.0;
        self.pt[0] = 0.0;
    }

    pub fn is_clamped(&self) -> bool {
        self.v[0] == 0.0 && self.p[0] == 0.0 && self.vt[0] == 0.0 && self.pt[0] == 0.0
    }

    pub fn is_finite(&self) -> bool {
        [&self.v, &self.p, &self.vt, &self.pt]
            .iter()
            .all(|f| f.iter().all(|x| x.is_finite()))
    }

    pub fn is_zero_displacement(&self) -> bool {
        self.v.iter().chain(&self.p).all(|&x| x == 0.0)
    }
}
