//! Quantities read off `Ω`: limit height, normal, density, Jacobian, and the
//! finite-difference residuals of the Burgers equation and the height PDE.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::action::eval_f;
use super::boundary::row_ends;
use super::omega::omega;
use super::{Branch, ShapeParams, ShapePoint};
use crate::error::{Error, Result};

fn omega_or_err(p: ShapePoint, sp: ShapeParams) -> Result<Complex64> {
    omega(p, sp).ok_or_else(|| Error::Domain(format!("({}, {}) is outside the liquid region", p.xi, p.mu)))
}

/// `h̄(ξ, μ) = Im F(Ω) / π` on `𝒟`.
pub fn limit_height(p: ShapePoint, sp: ShapeParams) -> Result<f64> {
    let w = omega_or_err(p, sp)?;
    Ok(eval_f(w, p, sp)?.im / PI)
}

/// Limit height continued by the frozen values: `0` right of `𝒟`, `μ` for
/// `ξ <= -μ`, and on a packed facet between `-μ` and the left edge `-ξ`.
/// Points in a frozen gap between two liquid pieces are refused.
pub fn limit_height_extended(p: ShapePoint, sp: ShapeParams) -> Result<f64> {
    if let Some(w) = omega(p, sp) {
        return Ok(eval_f(w, p, sp)?.im / PI);
    }
    let ((lo, w_lo), (hi, _)) = row_ends(p.mu, sp)?;
    if p.xi <= lo {
        // the left arc is packed where its Ω is negative
        Ok(if w_lo < 0.0 { p.mu.min(-p.xi) } else { p.mu })
    } else if p.xi >= hi {
        Ok(0.0)
    } else {
        Err(Error::Domain(format!("({}, {}) is in a frozen region inside the row", p.xi, p.mu)))
    }
}

/// `(θ1/π, -θ3/π, 1)` for the triangle `{0, σ, Ω}`.
pub fn surface_normal(p: ShapePoint, sp: ShapeParams) -> Result<[f64; 3]> {
    let w = omega_or_err(p, sp)?;
    let sigma = sp.branch(p.mu).sigma();
    let theta1 = w.arg();
    let theta3 = (-w / (sigma - w)).arg().abs();
    Ok([theta1 / PI, -theta3 / PI, 1.0])
}

/// Particle density `arg Ω / π`.
pub fn density(p: ShapePoint, sp: ShapeParams) -> Result<f64> {
    Ok(omega_or_err(p, sp)?.arg() / PI)
}

/// Finite-difference settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub step: f64,
    /// Combine steps `h` and `h/2` to cancel the leading error term.
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { step: 1e-6, richardson: true }
    }
}

/// Derivative of `f` at `0` along a line, staying inside `[lo, hi]` offsets.
/// Central when possible, otherwise second-order one-sided.
fn derivative<F>(f: F, h: f64, lo: f64, hi: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if -h >= lo && h <= hi {
        Ok((f(h)? - f(-h)?) / (2.0 * h))
    } else if 2.0 * h <= hi {
        Ok((-3.0 * f(0.0)? + 4.0 * f(h)? - f(2.0 * h)?) / (2.0 * h))
    } else if -2.0 * h >= lo {
        Ok((3.0 * f(0.0)? - 4.0 * f(-h)? + f(-2.0 * h)?) / (2.0 * h))
    } else {
        Err(Error::Numerical(format!("no room for a difference stencil of step {h}")))
    }
}

fn derivative_refined<F>(f: F, cfg: FdConfig, lo: f64, hi: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let coarse = derivative(&f, cfg.step, lo, hi)?;
    if !cfg.richardson {
        return Ok(coarse);
    }
    let fine = derivative(&f, 0.5 * cfg.step, lo, hi)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `(∂ξ Ω, ∂μ Ω)` by finite differences, keeping `μ` on the branch of `p`.
fn omega_gradient_fd(p: ShapePoint, sp: ShapeParams, cfg: FdConfig) -> Result<(Complex64, Complex64)> {
    let branch = sp.branch(p.mu);
    let at = |dxi: f64, dmu: f64| omega_or_err(ShapePoint::new(p.xi + dxi, p.mu + dmu), sp);
    let d_xi = derivative_refined(|d| at(d, 0.0), cfg, f64::NEG_INFINITY, f64::INFINITY)?;
    let (lo, hi) = match branch {
        // μ = μ0 itself is lower; the upper side must stay strictly above
        Branch::Lower => (f64::NEG_INFINITY, sp.mu0 - p.mu),
        Branch::Upper => (sp.mu0 - p.mu + f64::EPSILON * sp.mu0.max(1.0), f64::INFINITY),
    };
    let d_mu = derivative_refined(|d| at(0.0, d), cfg, lo, hi)?;
    Ok((d_xi, d_mu))
}

/// `|det ∂(Re Ω, Im Ω)/∂(ξ, μ)|` by finite differences on either branch.
pub fn jacobian_fd(p: ShapePoint, sp: ShapeParams, cfg: FdConfig) -> Result<f64> {
    omega_or_err(p, sp)?;
    let (a, b) = omega_gradient_fd(p, sp, cfg)?;
    Ok((a.re * b.im - a.im * b.re).abs())
}

/// Jacobian of `(ξ, μ) ↦ Ω`: `1/(4τ² Im Ω)` on the lower branch, finite
/// differences on the upper branch.
pub fn jacobian(p: ShapePoint, sp: ShapeParams) -> Result<f64> {
    let w = omega_or_err(p, sp)?;
    match sp.branch(p.mu) {
        Branch::Lower => Ok(1.0 / (4.0 * sp.tau * sp.tau * w.im)),
        Branch::Upper => jacobian_fd(p, sp, FdConfig::default()),
    }
}

/// Refuses stencils that touch or cross `μ = μ0`.
fn check_one_sided(p: ShapePoint, sp: ShapeParams, reach: f64) -> Result<()> {
    if (p.mu - sp.mu0).abs() <= reach {
        return Err(Error::BranchCrossing { mu0: sp.mu0 });
    }
    Ok(())
}

/// `σ/(σ-Ω)·∂ξΩ - ∂μΩ` by central differences of step `fd_step`.
pub fn burgers_residual(p: ShapePoint, sp: ShapeParams, fd_step: f64) -> Result<Complex64> {
    if !(fd_step > 0.0) {
        return Err(Error::invalid(format!("fd_step must be positive, got {fd_step}")));
    }
    check_one_sided(p, sp, fd_step)?;
    let w = omega_or_err(p, sp)?;
    let sigma = sp.branch(p.mu).sigma();
    let cfg = FdConfig { step: fd_step, richardson: false };
    let (d_xi, d_mu) = omega_gradient_fd(p, sp, cfg)?;
    Ok(sigma / (sigma - w) * d_xi - d_mu)
}

/// `-sin(πx) sin(π(y-x)) / (π sin(πy))`.
pub fn kpz_f(x: f64, y: f64) -> Result<f64> {
    if y.fract() == 0.0 {
        return Err(Error::Pole(y));
    }
    Ok(-(PI * x).sin() * (PI * (y - x)).sin() / (PI * (PI * y).sin()))
}

/// `∂τ h̄ - σ·kpz_f(∂ξ h̄, ∂μ h̄)` with all partials by central differences.
pub fn pde_residual(p: ShapePoint, sp: ShapeParams, fd_step: f64) -> Result<f64> {
    if !(fd_step > 0.0 && fd_step < sp.tau) {
        return Err(Error::invalid(format!("fd_step must lie in (0, tau), got {fd_step}")));
    }
    check_one_sided(p, sp, fd_step)?;
    let h = |xi: f64, mu: f64, tau: f64| limit_height(ShapePoint::new(xi, mu), ShapeParams { tau, ..sp });
    let c = |a: f64, b: f64| (a - b) / (2.0 * fd_step);
    let (xi, mu, tau) = (p.xi, p.mu, sp.tau);
    let d_tau = c(h(xi, mu, tau + fd_step)?, h(xi, mu, tau - fd_step)?);
    let d_xi = c(h(xi + fd_step, mu, tau)?, h(xi - fd_step, mu, tau)?);
    let d_mu = c(h(xi, mu + fd_step, tau)?, h(xi, mu - fd_step, tau)?);
    Ok(d_tau - sp.branch(p.mu).sigma() * kpz_f(d_xi, d_mu)?)
}
