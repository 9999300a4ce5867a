//! Frozen boundary `∂𝒟`: points where `Ω` is a real double critical point.

use num_complex::Complex64;
use serde::Serialize;

use super::omega::inverse_formula;
use super::{Branch, ShapeParams, ShapePoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub omega_real: f64,
    pub point: ShapePoint,
    pub branch: Branch,
}

/// Solves `F'(Ω) = F''(Ω) = 0` for `(ξ, μ)` at a real `Ω`.
///
/// The branch is the one owning `Ω` (`|Ω-1|² <= μ0/τ` is the slow part). The
/// 2×2 system is linear in `(ξ, μ)`; its solution coincides with the inverse
/// map extended to the real axis, which is what is evaluated here.
pub fn boundary_point(omega_real: f64, sp: ShapeParams) -> Result<BoundaryPoint> {
    if !omega_real.is_finite() {
        return Err(Error::Singularity("non-finite Ω".into()));
    }
    let w = Complex64::new(omega_real, 0.0);
    let branch = sp.branch_of_omega(w);
    if branch == Branch::Upper && omega_real == 1.0 {
        return Err(Error::Singularity("boundary system is singular at Ω = 1".into()));
    }
    Ok(BoundaryPoint { omega_real, point: inverse_formula(w, sp), branch })
}

/// `n` evenly spaced samples of `Ω` on `[lo, hi]`; singular samples are skipped.
pub fn boundary_curve_on(sp: ShapeParams, lo: f64, hi: f64, n: usize) -> Result<Vec<BoundaryPoint>> {
    if n < 2 {
        return Err(Error::invalid("boundary curve needs at least 2 samples"));
    }
    if !(lo < hi) {
        return Err(Error::invalid(format!("empty Ω range [{lo}, {hi}]")));
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .filter_map(|w| boundary_point(w, sp).ok())
        .collect())
}

/// Boundary polyline over a default `Ω` window wide enough to show the slow
/// part, the fast part and the cusp.
pub fn boundary_curve(sp: ShapeParams, n: usize) -> Result<Vec<BoundaryPoint>> {
    let r = (sp.mu0 / sp.tau).sqrt();
    boundary_curve_on(sp, (1.0 - 3.0 * r).min(-1.0), (1.0 + 3.0 * r).max(4.0), n)
}

/// Leftmost and rightmost `ξ` of `𝒟` on the row `μ`.
///
/// Walks the outer boundary arcs (`Ω → -∞` on the left, `Ω → +∞` on the
/// right), along which `μ` is monotone.
pub fn row_extent(mu: f64, sp: ShapeParams) -> Result<(f64, f64)> {
    let ((l, _), (r, _)) = row_ends(mu, sp)?;
    Ok((l, r))
}

/// Row extent together with the real `Ω` generating each end.
pub(super) fn row_ends(mu: f64, sp: ShapeParams) -> Result<((f64, f64), (f64, f64))> {
    if !(mu > 0.0) {
        return Err(Error::invalid(format!("row must have mu > 0, got {mu}")));
    }
    let r = (sp.mu0 / sp.tau).sqrt();
    if mu <= sp.mu0 {
        let s = (sp.tau * mu).sqrt();
        let d = (mu / sp.tau).sqrt();
        return Ok(((sp.tau - 2.0 * s, 1.0 - d), (sp.tau + 2.0 * s, 1.0 + d)));
    }
    let mu_at = |w: f64| inverse_formula(Complex64::new(w, 0.0), sp);
    // μ(w) increases away from the lower arc on both outer pieces
    let solve = |mut near: f64, dir: f64| {
        let mut far = near + dir;
        while mu_at(far).mu < mu {
            far = near + 2.0 * (far - near);
        }
        for _ in 0..200 {
            let mid = 0.5 * (near + far);
            if mu_at(mid).mu < mu {
                near = mid;
            } else {
                far = mid;
            }
        }
        let w = 0.5 * (near + far);
        (mu_at(w).xi, w)
    };
    let left = solve(1.0 - r, -1.0);
    let right = solve((1.0 + r).max(2.0), 1.0);
    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::{f_prime, f_second};
    use approx::assert_abs_diff_eq;

    fn sp(tau: f64, mu0: f64) -> ShapeParams {
        ShapeParams::new(tau, mu0).unwrap()
    }

    /// Independent route: Cramer's rule on the linear system.
    fn solve_linear(w: f64, s: ShapeParams, branch: Branch) -> (f64, f64) {
        let (a11, a12, b1, a21, a22, b2) = match branch {
            Branch::Lower => (-1.0 / w, 1.0 / (w - 1.0) - 1.0 / w, -s.tau, 1.0 / (w * w), 1.0 / (w * w) - 1.0 / (w - 1.0).powi(2), 0.0),
            Branch::Upper => (
                -1.0 / w,
                1.0 / (w - 2.0) - 1.0 / w,
                -s.tau - s.mu0 / (w - 1.0) + s.mu0 / (w - 2.0),
                1.0 / (w * w),
                1.0 / (w * w) - 1.0 / (w - 2.0).powi(2),
                s.mu0 / (w - 1.0).powi(2) - s.mu0 / (w - 2.0).powi(2),
            ),
        };
        let det = a11 * a22 - a12 * a21;
        ((b1 * a22 - a12 * b2) / det, (a11 * b2 - b1 * a21) / det)
    }

    #[test]
    fn special_points() {
        let s = sp(1.0, 1.5);
        let p = boundary_point(0.0, s).unwrap().point;
        assert_abs_diff_eq!(p.xi, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.mu, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.xi + p.mu, 0.0, epsilon = 1e-15);
        let p = boundary_point(1.0, s).unwrap().point;
        assert_abs_diff_eq!(p.xi, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.mu, 0.0, epsilon = 1e-15);
        for mu0 in [0.5, 1.0, 2.0] {
            let crit = sp(mu0, mu0);
            let b = boundary_point(2.0, crit).unwrap();
            assert_abs_diff_eq!(b.point.xi, 3.0 * mu0, epsilon = 1e-14);
            assert_abs_diff_eq!(b.point.mu, mu0, epsilon = 1e-14);
        }
    }

    #[test]
    fn points_are_double_critical() {
        for s in [sp(1.0, 1.5), sp(2.0, 1.0), sp(1.0, 0.6)] {
            let curve = boundary_curve(s, 401).unwrap();
            assert!(curve.len() > 300);
            for b in curve {
                let w = b.omega_real;
                if [0.0, 1.0, 2.0].iter().any(|c| (w - c).abs() < 1e-6) {
                    continue;
                }
                let z = Complex64::new(w, 0.0);
                let scale = 1.0 + b.point.xi.abs() + b.point.mu.abs();
                assert!(f_prime(z, b.point, s).norm() <= 1e-12 * scale, "F' at {w}: {}", f_prime(z, b.point, s));
                assert!(f_second(z, b.point, s).norm() <= 1e-12 * scale, "F'' at {w}");
                let (xi, mu) = solve_linear(w, s, b.branch);
                assert_abs_diff_eq!(xi, b.point.xi, epsilon = 1e-9 * scale);
                assert_abs_diff_eq!(mu, b.point.mu, epsilon = 1e-9 * scale);
                match b.branch {
                    Branch::Lower => assert!(b.point.mu <= s.mu0 + 1e-12),
                    Branch::Upper => assert!(b.point.mu >= s.mu0 - 1e-12),
                }
            }
        }
    }

    #[test]
    fn row_extent_brackets_the_domain() {
        let s = sp(1.0, 1.5);
        for mu in [0.3, 1.0, 1.5, 1.8, 2.5] {
            let (l, r) = row_extent(mu, s).unwrap();
            assert!(crate::shape::in_domain(ShapePoint::new(l + 1e-6, mu), s));
            assert!(!crate::shape::in_domain(ShapePoint::new(l - 1e-6, mu), s));
            assert!(crate::shape::in_domain(ShapePoint::new(r - 1e-6, mu), s));
            assert!(!crate::shape::in_domain(ShapePoint::new(r + 1e-6, mu), s));
        }
    }

    #[test]
    fn rejects_bad_sample_counts() {
        assert!(boundary_curve(sp(1.0, 1.0), 1).is_err());
    }
}
