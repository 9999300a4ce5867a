//! Complex structure of the macroscopic limit.
//!
//! For scaled coordinates `(ξ, μ)` the critical point `Ω(ξ, μ)` of the action
//! [`eval_f`] in the upper half plane maps the liquid region `𝒟`
//! homeomorphically onto `ℍ₊`. Everything else here (limit height, normal,
//! density, Jacobian, frozen boundary, PDE checks) is expressed through `Ω`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod action;
mod boundary;
mod omega;
mod surface;

pub use action::{eval_f, f_prime, f_second};
pub use boundary::{boundary_curve, boundary_curve_on, boundary_point, row_extent, BoundaryPoint};
pub use omega::{in_domain, inverse_omega, omega, omega_on_branch, NEWTON_TOL};
pub use surface::{
    burgers_residual, density, jacobian, jacobian_fd, kpz_f, limit_height, limit_height_extended,
    pde_residual, surface_normal, FdConfig,
};

/// A point `Ω` of the upper half plane.
pub type ComplexPoint = Complex64;

/// Macroscopic time `τ` and separating height `μ0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    pub tau: f64,
    pub mu0: f64,
}

impl ShapeParams {
    pub fn new(tau: f64, mu0: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite() && mu0 > 0.0 && mu0.is_finite()) {
            return Err(Error::invalid(format!("need tau > 0 and mu0 > 0, got tau={tau}, mu0={mu0}")));
        }
        Ok(Self { tau, mu0 })
    }

    /// `μ = μ0` belongs to the lower branch.
    pub fn branch(&self, mu: f64) -> Branch {
        if mu <= self.mu0 {
            Branch::Lower
        } else {
            Branch::Upper
        }
    }

    /// Branch that `inverse_omega` sends `Ω` to.
    pub fn branch_of_omega(&self, w: Complex64) -> Branch {
        if (w - 1.0).norm_sqr() <= self.mu0 / self.tau {
            Branch::Lower
        } else {
            Branch::Upper
        }
    }
}

/// Scaled lattice coordinates `(ξ, μ) = (x/L, m/L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapePoint {
    pub xi: f64,
    pub mu: f64,
}

impl ShapePoint {
    pub const fn new(xi: f64, mu: f64) -> Self {
        Self { xi, mu }
    }

    pub fn from_lattice(x: i64, m: usize, scale: f64) -> Self {
        Self { xi: x as f64 / scale, mu: m as f64 / scale }
    }
}

/// Slow part (`μ <= μ0`, drift `σ = 1`) or fast part (`σ = 2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Upper,
}

impl Branch {
    pub fn sigma(self) -> f64 {
        match self {
            Branch::Lower => 1.0,
            Branch::Upper => 2.0,
        }
    }
}
