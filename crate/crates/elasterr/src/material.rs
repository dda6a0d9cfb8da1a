//! Material parameters and the mesh-dependent weights of the error
//! estimators.
//!
//! Only 1/lambda is stored: it stays finite over the whole admissible range
//! nu in (0, 1/2], so the incompressible limit needs no special cases
//! downstream.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("shear modulus must be positive and finite (got {0})")]
    InvalidMu(f64),
    #[error("Poisson ratio must lie in (0, 0.5] (got {0})")]
    InvalidNu(f64),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MaterialParams {
    mu: f64,
    nu: f64,
    inv_lambda: f64,
}

impl MaterialParams {
    pub fn new(mu: f64, nu: f64) -> Result<MaterialParams, MaterialError> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(MaterialError::InvalidMu(mu));
        }
        if !(nu > 0.0 && nu <= 0.5) {
            return Err(MaterialError::InvalidNu(nu));
        }
        let inv_lambda = (1.0 - 2.0 * nu) / (2.0 * mu * nu);
        Ok(MaterialParams { mu, nu, inv_lambda })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// 1/lambda; exactly 0 at nu = 1/2.
    pub fn inv_lambda(&self) -> f64 {
        self.inv_lambda
    }

    /// lambda = 2*mu*nu/(1 - 2*nu); +inf at nu = 1/2.
    pub fn lambda(&self) -> f64 {
        1.0 / self.inv_lambda
    }

    /// Element weight rho_K = h_K (2 mu)^(-1/2) / 2.
    pub fn rho_k(&self, h_k: f64) -> f64 {
        h_k / (2.0 * (2.0 * self.mu).sqrt())
    }

    /// Edge weight rho_E = h_E (2 mu)^(-1) / 2.
    pub fn rho_e(&self, h_e: f64) -> f64 {
        h_e / (2.0 * 2.0 * self.mu)
    }

    /// Divergence weight rho_d = 1/(1/lambda + 1/(2 mu)); equals 2 mu in the
    /// incompressible limit. Global, not per element.
    pub fn rho_d(&self) -> f64 {
        1.0 / (self.inv_lambda + 1.0 / (2.0 * self.mu))
    }
}
