//! Regime parameters.
//!
//! Every operator in the crate is written for the general scaling with an
//! amplitude `epsilon`, a shallowness `mu` and a transverse ratio `gamma`.
//! The standard long-wave regime and the degenerate (Bond number near 1/3)
//! regime are presets of that scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which form of the evolution equations a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Standard,
    Degenerate,
    General,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Variant::Standard),
            "degenerate" => Ok(Variant::Degenerate),
            "general" => Ok(Variant::General),
            other => Err(Error::InvalidParams(format!("unknown variant '{other}'"))),
        }
    }
}

/// Scaling parameters.
///
/// `epsilon` is the amplitude in front of the surface elevation, `mu` the
/// shallowness, `gamma` the transverse wavelength ratio, `alpha` the Bond
/// number and `theta` the offset in `alpha = 1/3 + eps*theta` for the
/// degenerate preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub epsilon: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub mu: f64,
    pub theta: f64,
}

impl ScaleParams {
    /// Standard long-wave scaling: `mu = eps`, `gamma = sqrt(eps)`.
    pub fn standard(eps: f64, alpha: f64) -> Result<Self> {
        let p = ScaleParams {
            epsilon: eps,
            alpha,
            gamma: eps.sqrt(),
            mu: eps,
            theta: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Degenerate scaling: amplitude `eps^2`, `mu = eps`, `gamma = eps`,
    /// `alpha = 1/3 + eps*theta`.
    pub fn degenerate(eps: f64, theta: f64) -> Result<Self> {
        if theta < 0.0 || !theta.is_finite() {
            return Err(Error::InvalidParams(format!("theta = {theta} must be >= 0")));
        }
        let p = ScaleParams {
            epsilon: eps * eps,
            alpha: 1.0 / 3.0 + eps * theta,
            gamma: eps,
            mu: eps,
            theta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Free choice of all three scales.
    pub fn general(epsilon: f64, mu: f64, gamma: f64, alpha: f64) -> Result<Self> {
        let p = ScaleParams {
            epsilon,
            alpha,
            gamma,
            mu,
            theta: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !unit(self.epsilon) {
            return Err(Error::InvalidParams(format!("epsilon = {} not in (0, 1]", self.epsilon)));
        }
        if !unit(self.mu) {
            return Err(Error::InvalidParams(format!("mu = {} not in (0, 1]", self.mu)));
        }
        if !unit(self.gamma) {
            return Err(Error::InvalidParams(format!("gamma = {} not in (0, 1]", self.gamma)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParams(format!("alpha = {} must be > 0", self.alpha)));
        }
        Ok(())
    }

    /// Horizontal factor of the strip gradient, `sqrt(mu)`.
    pub fn a(&self) -> f64 {
        self.mu.sqrt()
    }

    /// Transverse factor of the strip gradient, `sqrt(mu)*gamma`.
    pub fn c(&self) -> f64 {
        self.mu.sqrt() * self.gamma
    }

    /// Slope weight `epsilon^2 mu` in `rho = sqrt(1 + w |grad zeta|^2)`.
    pub fn slope_weight(&self) -> f64 {
        self.epsilon * self.epsilon * self.mu
    }

    /// The small parameter of the preset the values came from: `eps` for
    /// the standard scaling and `mu` otherwise.
    pub fn base_eps(&self) -> f64 {
        if self.is_standard() {
            self.epsilon
        } else {
            self.mu
        }
    }

    pub fn is_standard(&self) -> bool {
        rel_eq(self.mu, self.epsilon) && rel_eq(self.gamma * self.gamma, self.epsilon)
    }

    pub fn is_degenerate(&self) -> bool {
        rel_eq(self.epsilon, self.mu * self.mu) && rel_eq(self.gamma, self.mu)
    }
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-14 * a.abs().max(b.abs())
}
