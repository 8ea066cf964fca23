//! Fits of the exponential, polynomial and logarithmic decay envelopes to a
//! recorded energy series.
//!
//! Each envelope `ℰ(0) F(ω, t)` is linearized without its prefactor, so only
//! the shape constrains `ω`:
//! exponential `ln ℰ = a − ωt`; polynomial `ℰ^{−η} = A(1 + ωηt)`;
//! logarithmic `ℰ^{−η} = A(1 + ωηψ(t))` with `ψ(t) = ln((C+t)/C)`.
//! The reported rate is the fitted one, lowered if necessary so that the
//! envelope anchored at `ℰ(0)` dominates every sample.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecayError {
    #[error("energy series must be strictly positive (sample {index} = {value})")]
    NonPositiveSeries { index: usize, value: f64 },
    #[error("need at least 2 samples in the fit window, got {0}")]
    TooFewPoints(usize),
    #[error("invalid fit parameter: {0}")]
    BadParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayModel {
    Exponential,
    Polynomial,
    Logarithmic,
}

impl DecayModel {
    pub fn label(&self) -> &'static str {
        match self {
            DecayModel::Exponential => "exponential",
            DecayModel::Polynomial => "polynomial",
            DecayModel::Logarithmic => "logarithmic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Rate at which the envelope dominates the whole series.
    pub omega: f64,
    /// Unconstrained least-squares rate on the tail.
    pub omega_fit: f64,
    pub eta: f64,
    /// Root-mean-square misfit of `ln ℰ` on the tail.
    pub rmse: f64,
    /// Coefficient of determination of the linearized regression.
    pub r_squared: f64,
    pub tail_start: usize,
    /// Offset `C` of the logarithmic model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub envelope_ok: bool,
    pub accepted: bool,
}

struct Line {
    intercept: f64,
    slope: f64,
    r_squared: f64,
}

fn least_squares(x: &[f64], y: &[f64]) -> Line {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Line {
        intercept,
        slope,
        r_squared,
    }
}

fn validate(t: &[f64], e: &[f64], tail_start: Option<usize>) -> Result<usize, DecayError> {
    if t.len() != e.len() {
        return Err(DecayError::BadParameter(format!(
            "{} times but {} energies",
            t.len(),
            e.len()
        )));
    }
    if let Some((index, &value)) = e
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        return Err(DecayError::NonPositiveSeries { index, value });
    }
    let start = tail_start.unwrap_or(e.len() / 2);
    let window = e.len().saturating_sub(start);
    if window < 2 {
        return Err(DecayError::TooFewPoints(window));
    }
    Ok(start)
}

fn rmse(pred_ln: impl Iterator<Item = f64>, e: &[f64]) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for (p, v) in pred_ln.zip(e) {
        s += (v.ln() - p).powi(2);
        n += 1;
    }
    (s / n as f64).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn finish(
    model: DecayModel,
    omega_fit: f64,
    omega_env: f64,
    eta: f64,
    line: &Line,
    rmse: f64,
    tail_start: usize,
    c: Option<f64>,
    envelope: impl Fn(f64) -> Vec<f64>,
    e: &[f64],
) -> DecayFit {
    let omega = omega_fit.min(omega_env);
    let env = envelope(omega);
    let envelope_ok = env
        .iter()
        .zip(e)
        .all(|(bound, v)| *v <= bound * (1.0 + 1e-9));
    DecayFit {
        model,
        omega,
        omega_fit,
        eta,
        rmse,
        r_squared: line.r_squared,
        tail_start,
        c,
        envelope_ok,
        accepted: omega > 0.0 && omega.is_finite() && envelope_ok,
    }
}

/// `ℰ(0) e^{1 − ωt}` sampled at `t`.
pub fn exponential_envelope(e0: f64, omega: f64, t: &[f64]) -> Vec<f64> {
    t.iter()
        .map(|&s| e0 * (1.0 - omega * (s - t[0])).exp())
        .collect()
}

/// `ℰ(0) ((1 + η)/(1 + ωηs))^{1/η}` sampled at `s` (time or `ψ(t)`).
pub fn rational_envelope(e0: f64, omega: f64, eta: f64, s: &[f64]) -> Vec<f64> {
    s.iter()
        .map(|&x| e0 * ((1.0 + eta) / (1.0 + omega * eta * (x - s[0]))).powf(1.0 / eta))
        .collect()
}

/// `ψ(t) = ln((C + t)/C)`
pub fn log_clock(t: f64, c: f64) -> f64 {
    ((c + t) / c).ln()
}

pub fn fit_exponential(
    t: &[f64],
    e: &[f64],
    tail_start: Option<usize>,
) -> Result<DecayFit, DecayError> {
    let start = validate(t, e, tail_start)?;
    let (tt, et) = (&t[start..], &e[start..]);
    let ln: Vec<f64> = et.iter().map(|v| v.ln()).collect();
    let line = least_squares(tt, &ln);
    let omega_fit = -line.slope;
    let (t0, e0) = (t[0], e[0]);
    let omega_env = t
        .iter()
        .zip(e)
        .filter(|(s, _)| **s > t0)
        .map(|(s, v)| (1.0 - (v / e0).ln()) / (s - t0))
        .fold(f64::INFINITY, f64::min);
    let err = rmse(tt.iter().map(|s| line.intercept + line.slope * s), et);
    Ok(finish(
        DecayModel::Exponential,
        omega_fit,
        omega_env,
        0.0,
        &line,
        err,
        start,
        None,
        |w| exponential_envelope(e0, w, t),
        e,
    ))
}

fn fit_rational(
    model: DecayModel,
    clock: &[f64],
    e: &[f64],
    eta: f64,
    start: usize,
    c: Option<f64>,
) -> DecayFit {
    let (xs, et) = (&clock[start..], &e[start..]);
    let y: Vec<f64> = et.iter().map(|v| v.powf(-eta)).collect();
    let line = least_squares(xs, &y);
    let omega_fit = if line.intercept > 0.0 {
        line.slope / (eta * line.intercept)
    } else {
        f64::NAN
    };
    let (x0, e0) = (clock[0], e[0]);
    let omega_env = clock
        .iter()
        .zip(e)
        .filter(|(x, _)| **x > x0)
        .map(|(x, v)| ((1.0 + eta) * (e0 / v).powf(eta) - 1.0) / (eta * (x - x0)))
        .fold(f64::INFINITY, f64::min);
    let err = rmse(
        xs.iter().map(|x| {
            let m = line.intercept + line.slope * x;
            if m > 0.0 {
                -m.ln() / eta
            } else {
                f64::INFINITY
            }
        }),
        et,
    );
    let omega_fit = if omega_fit.is_nan() { 0.0 } else { omega_fit };
    finish(
        model,
        omega_fit,
        omega_env,
        eta,
        &line,
        err,
        start,
        c,
        |w| rational_envelope(e0, w, eta, clock),
        e,
    )
}

pub fn fit_polynomial(
    t: &[f64],
    e: &[f64],
    eta: f64,
    tail_start: Option<usize>,
) -> Result<DecayFit, DecayError> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(DecayError::BadParameter(format!(
            "eta = {eta} must be positive"
        )));
    }
    let start = validate(t, e, tail_start)?;
    Ok(fit_rational(DecayModel::Polynomial, t, e, eta, start, None))
}

pub fn fit_logarithmic(
    t: &[f64],
    e: &[f64],
    eta: f64,
    c: f64,
    tail_start: Option<usize>,
) -> Result<DecayFit, DecayError> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(DecayError::BadParameter(format!(
            "eta = {eta} must be positive"
        )));
    }
    if !(c >= 1.0 && c.is_finite()) {
        return Err(DecayError::BadParameter(format!(
            "C = {c} must be at least 1"
        )));
    }
    let start = validate(t, e, tail_start)?;
    let t0 = t.first().copied().unwrap_or(0.0);
    let clock: Vec<f64> = t.iter().map(|s| log_clock(s - t0, c)).collect();
    Ok(fit_rational(
        DecayModel::Logarithmic,
        &clock,
        e,
        eta,
        start,
        Some(c),
    ))
}

/// Fits every model applicable for `eta` and returns them sorted by tail rmse.
pub fn select_model(
    t: &[f64],
    e: &[f64],
    eta: f64,
    c: f64,
    tail_start: Option<usize>,
) -> Result<Vec<DecayFit>, DecayError> {
    let mut fits = vec![fit_exponential(t, e, tail_start)?];
    if eta > 0.0 {
        fits.push(fit_polynomial(t, e, eta, tail_start)?);
        fits.push(fit_logarithmic(t, e, eta, c, tail_start)?);
    }
    fits.sort_by(|a, b| a.rmse.total_cmp(&b.rmse));
    Ok(fits)
}

/// Least-squares slope of `ln ℰ` against `ln t` on the tail (`t > 0` only).
pub fn tail_log_log_slope(
    t: &[f64],
    e: &[f64],
    tail_start: Option<usize>,
) -> Result<f64, DecayError> {
    let start = validate(t, e, tail_start)?;
    let (x, y): (Vec<f64>, Vec<f64>) = t[start..]
        .iter()
        .zip(&e[start..])
        .filter(|(s, _)| **s > 0.0)
        .map(|(s, v)| (s.ln(), v.ln()))
        .unzip();
    if x.len() < 2 {
        return Err(DecayError::TooFewPoints(x.len()));
    }
    Ok(least_squares(&x, &y).slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, t_end: f64) -> Vec<f64> {
        (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exponential_self_fit() {
        let t = grid(200, 20.0);
        let e = exponential_envelope(2.0, 0.7, &t);
        let f = fit_exponential(&t, &e, None).unwrap();
        assert!((f.omega - 0.7).abs() < 1e-6, "{}", f.omega);
        assert!(f.accepted && f.envelope_ok);
    }

    #[test]
    fn constant_series_is_rejected() {
        let t = grid(50, 5.0);
        let f = fit_exponential(&t, &vec![3.0; 50], None).unwrap();
        assert_eq!(f.omega_fit, 0.0);
        assert!(!f.accepted);
    }

    #[test]
    fn polynomial_examples() {
        let t = grid(300, 30.0);
        let e = rational_envelope(1.5, 0.5, 1.0, &t);
        let f = fit_polynomial(&t, &e, 1.0, None).unwrap();
        assert!((f.omega - 0.5).abs() < 1e-6);
        let e: Vec<f64> = t.iter().map(|s| 1.0 / (1.0 + s)).collect();
        let f = fit_polynomial(&t, &e, 1.0, Some(0)).unwrap();
        assert!((f.omega_fit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logarithmic_self_fit_beats_polynomial() {
        let t = grid(400, 100.0);
        let psi: Vec<f64> = t.iter().map(|s| log_clock(*s, 2.0)).collect();
        let e = rational_envelope(1.0, 0.3, 0.5, &psi);
        let f = fit_logarithmic(&t, &e, 0.5, 2.0, None).unwrap();
        assert!((f.omega - 0.3).abs() < 1e-6);
        let wrong = fit_polynomial(&t, &e, 0.5, None).unwrap();
        assert!(wrong.rmse > f.rmse);
    }

    #[test]
    fn log_clock_properties() {
        assert_eq!(log_clock(0.0, 3.0), 0.0);
        assert!(log_clock(2.0, 3.0) > log_clock(1.0, 3.0));
        for c in [1.0, 2.0, 10.0] {
            for t in [0.0, 0.5, 7.0, 1e4] {
                assert!((1.0 + t) / (c + t) <= 1.0);
            }
        }
    }

    #[test]
    fn rejects_non_positive() {
        let t = grid(4, 1.0);
        assert!(matches!(
            fit_exponential(&t, &[1.0, 0.5, 0.0, 0.1], None),
            Err(DecayError::NonPositiveSeries { index: 2, .. })
        ));
    }

    #[test]
    fn envelope_cap_lowers_rate() {
        // Fast tail, slow start: the fitted rate would undercut the early samples.
        let t = grid(100, 10.0);
        let e: Vec<f64> = t
            .iter()
            .map(|s| {
                if *s < 3.0 {
                    1.0
                } else {
                    (-2.0 * (s - 3.0)).exp()
                }
            })
            .collect();
        let f = fit_exponential(&t, &e, None).unwrap();
        assert!(f.omega < f.omega_fit);
        assert!(f.envelope_ok);
    }
}
