//! Physical constants and exponent hypotheses.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("alpha1 = alpha - gamma^2 * beta = {alpha1} must be positive")]
    NonPositiveAlpha1 { alpha1: f64 },
    #[error("parameter `{name}` = {value} must be finite and positive")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("parameter `{name}` = {value} is not finite")]
    NonFinite { name: &'static str, value: f64 },
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
}

/// Material constants of the beam. `alpha1 = alpha - gamma^2 beta` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaterialParams {
    rho: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    mu: f64,
    alpha1: f64,
}

impl MaterialParams {
    pub fn new(rho: f64, alpha: f64, beta: f64, gamma: f64, mu: f64) -> Result<Self, ModelError> {
        for (name, value) in [
            ("rho", rho),
            ("alpha", alpha),
            ("beta", beta),
            ("gamma", gamma),
            ("mu", mu),
        ] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
        }
        for (name, value) in [("rho", rho), ("alpha", alpha), ("beta", beta), ("mu", mu)] {
            if value <= 0.0 {
                return Err(ModelError::NonPositiveParameter { name, value });
            }
        }
        let alpha1 = alpha - gamma * gamma * beta;
        if alpha1 <= 0.0 {
            return Err(ModelError::NonPositiveAlpha1 { alpha1 });
        }
        Ok(Self {
            rho,
            alpha,
            beta,
            gamma,
            mu,
            alpha1,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    /// `max{(2γ² + 1)/α₁, 2/β}`: bounds `‖∇v‖² + ‖∇p‖²` by the stiffness form.
    pub fn gradient_bound_factor(&self) -> f64 {
        ((2.0 * self.gamma * self.gamma + 1.0) / self.alpha1).max(2.0 / self.beta)
    }

    /// Largest characteristic wave speed, `sqrt(max(α/ρ, β/μ))`.
    pub fn wave_speed(&self) -> f64 {
        (self.alpha / self.rho).max(self.beta / self.mu).sqrt()
    }
}

/// Which family of results the exponents are meant to be used with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentMode {
    #[default]
    General,
    GlobalDecay,
    BlowUp,
}

/// Damping powers `m1, m2` and source powers `n1, n2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub m1: f64,
    pub m2: f64,
    pub n1: f64,
    pub n2: f64,
    /// `min{n1 + 1, n2 + 1}`
    pub c_hat: f64,
    pub assumption3_ok: bool,
    pub blowup_regime: bool,
}

fn assumption3_value(m: f64, n: f64) -> f64 {
    n * (m + 1.0) / m
}

impl Exponents {
    pub fn validate(
        m1: f64,
        m2: f64,
        n1: f64,
        n2: f64,
        mode: ExponentMode,
    ) -> Result<Self, ModelError> {
        for (name, value) in [("m1", m1), ("m2", m2), ("n1", n1), ("n2", n2)] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
        }
        for (i, m, n) in [(1, m1, n1), (2, m2, n2)] {
            if m < 1.0 {
                return Err(ModelError::AssumptionViolated(format!(
                    "m{i} = {m} must satisfy m{i} >= 1"
                )));
            }
            if !(n > 1.0 && n < 6.0) {
                return Err(ModelError::AssumptionViolated(format!(
                    "n{i} = {n} must satisfy 1 < n{i} < 6"
                )));
            }
            let a3 = assumption3_value(m, n);
            if a3 >= 6.0 {
                return Err(ModelError::AssumptionViolated(format!(
                    "n{i}(m{i}+1)/m{i} = {a3} not < 6"
                )));
            }
        }
        let blowup_regime = n1 > m1 && n2 > m2 && n1 < 5.0 && n2 < 5.0 && m1 < 5.0 && m2 < 5.0;
        match mode {
            ExponentMode::General => {}
            ExponentMode::GlobalDecay => {
                for (i, n) in [(1, n1), (2, n2)] {
                    if n > 5.0 {
                        return Err(ModelError::AssumptionViolated(format!(
                            "n{i} = {n} must satisfy n{i} <= 5"
                        )));
                    }
                }
            }
            ExponentMode::BlowUp => {
                for (i, m, n) in [(1, m1, n1), (2, m2, n2)] {
                    if n <= m {
                        return Err(ModelError::AssumptionViolated(format!(
                            "n{i} = {n} must exceed m{i} = {m} for blow-up"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            m1,
            m2,
            n1,
            n2,
            c_hat: (n1 + 1.0).min(n2 + 1.0),
            assumption3_ok: true,
            blowup_regime,
        })
    }

    /// Linear damping in both equations.
    pub fn linear_damping(&self) -> bool {
        self.m1 == 1.0 && self.m2 == 1.0
    }

    /// `max{(m1 - 1)/2, (m2 - 1)/2}`
    pub fn eta(&self) -> f64 {
        ((self.m1 - 1.0) / 2.0).max((self.m2 - 1.0) / 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha1_examples() {
        let p = MaterialParams::new(1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(p.alpha1(), 1.0);
        let p = MaterialParams::new(1.0, 4.0, 2.0, 0.5, 3.0).unwrap();
        assert_eq!(p.alpha1(), 3.5);
        assert!(matches!(
            MaterialParams::new(1.0, 1.0, 1.0, 1.0, 1.0),
            Err(ModelError::NonPositiveAlpha1 { .. })
        ));
    }

    #[test]
    fn negative_gamma_accepted() {
        let p = MaterialParams::new(1.0, 2.0, 1.0, -1.0, 1.0).unwrap();
        assert_eq!(p.alpha1(), 1.0);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(matches!(
            MaterialParams::new(0.0, 2.0, 1.0, 1.0, 1.0),
            Err(ModelError::NonPositiveParameter { name: "rho", .. })
        ));
        assert!(matches!(
            MaterialParams::new(1.0, 2.0, 1.0, 1.0, -3.0),
            Err(ModelError::NonPositiveParameter { name: "mu", .. })
        ));
        assert!(MaterialParams::new(1.0, f64::NAN, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn assumption3_boundary_is_rejected() {
        let err = Exponents::validate(1.0, 1.0, 3.0, 3.0, ExponentMode::General).unwrap_err();
        match err {
            ModelError::AssumptionViolated(msg) => assert!(msg.contains("= 6 not < 6"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blowup_mode_examples() {
        let e = Exponents::validate(2.0, 2.0, 3.0, 3.0, ExponentMode::BlowUp).unwrap();
        assert!(e.blowup_regime && e.assumption3_ok);
        assert_eq!(assumption3_value(2.0, 3.0), 4.5);
        assert!(Exponents::validate(3.0, 3.0, 3.0, 3.0, ExponentMode::BlowUp).is_err());
    }

    #[test]
    fn c_hat_example() {
        let e = Exponents::validate(1.0, 1.0, 2.0, 2.0, ExponentMode::General).unwrap();
        assert_eq!(e.c_hat, 3.0);
        let e = Exponents::validate(1.0, 2.0, 2.0, 3.5, ExponentMode::General).unwrap();
        assert_eq!(e.c_hat, 3.0);
    }

    #[test]
    fn global_decay_requires_n_at_most_5() {
        // n = 5.5 with m = 20: 5.5 * 21 / 20 = 5.775 < 6
        assert!(Exponents::validate(20.0, 20.0, 5.5, 5.5, ExponentMode::General).is_ok());
        assert!(Exponents::validate(20.0, 20.0, 5.5, 5.5, ExponentMode::GlobalDecay).is_err());
    }

    #[test]
    fn eta_from_damping() {
        let e = Exponents::validate(3.0, 1.0, 2.0, 2.0, ExponentMode::General).unwrap();
        assert_eq!(e.eta(), 1.0);
    }
}
