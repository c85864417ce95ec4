use serde::{Deserialize, Serialize};

use crate::geometry::Phase;
use crate::{Error, Result};

/// Lamé pair of the matrix plus the viscosity of the inclusions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub lambda: f64,
    pub mu: f64,
    pub mu_tilde: f64,
}

impl MaterialParams {
    pub fn new(lambda: f64, mu: f64, mu_tilde: f64) -> Result<Self> {
        let p = Self { lambda, mu, mu_tilde };
        p.validate()?;
        Ok(p)
    }

    /// Admissibility in 2D: μ > 0, 2λ + 2μ > 0, μ̃ > 0.
    pub fn validate(&self) -> Result<()> {
        let Self { lambda, mu, mu_tilde } = *self;
        if ![lambda, mu, mu_tilde].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidMaterial("parameters must be finite".into()));
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidMaterial(format!("mu must be positive, got {mu}")));
        }
        if !(2.0 * lambda + 2.0 * mu > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "2 lambda + 2 mu must be positive, got {}",
                2.0 * lambda + 2.0 * mu
            )));
        }
        if !(mu_tilde > 0.0) {
            return Err(Error::InvalidMaterial(format!("mu_tilde must be positive, got {mu_tilde}")));
        }
        Ok(())
    }

    /// `(λ, μ)` of the bilinear form on a phase; the fluid carries no λ term.
    pub fn lame(&self, phase: Phase) -> (f64, f64) {
        match phase {
            Phase::Elastic => (self.lambda, self.mu),
            Phase::Fluid => (0.0, self.mu_tilde),
        }
    }

    /// The ellipticity constant min{2λ+2μ, 2μ, μ̃}/2 of the homogenized tensor.
    pub fn ellipticity_bound(&self) -> f64 {
        (2.0 * self.lambda + 2.0 * self.mu).min(2.0 * self.mu).min(self.mu_tilde) / 2.0
    }
}
