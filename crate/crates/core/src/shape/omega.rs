use num_complex::Complex64;

use super::action::{f_prime_on, f_second_on};
use super::{Branch, ShapeParams, ShapePoint};
use crate::error::{Error, Result};

/// Target for `|F'(Ω)|` after Newton polishing.
pub const NEWTON_TOL: f64 = 1e-13;

/// Upper-half-plane root of `a z² + b z + c` with real coefficients, if any.
fn quadratic_upper_root(a: f64, b: f64, c: f64) -> Option<Complex64> {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        return None;
    }
    Some(Complex64::new(-b / (2.0 * a), (-disc).sqrt() / (2.0 * a.abs())))
}

/// One real root of the monic cubic `z³ + b z² + c z + d`, by Newton steps
/// safeguarded with bisection on a Cauchy bracket.
fn cubic_real_root(b: f64, c: f64, d: f64) -> f64 {
    let f = |x: f64| ((x + b) * x + c) * x + d;
    let df = |x: f64| (3.0 * x + 2.0 * b) * x + c;
    let r = 1.0 + b.abs().max(c.abs()).max(d.abs());
    let (mut lo, mut hi) = (-r, r);
    // f(lo) < 0 < f(hi) for a monic cubic
    let mut x = -b / 3.0;
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Upper-half-plane root of `c3 z³ + c2 z² + c1 z + c0` (real, `c3 != 0`).
fn cubic_upper_root(c3: f64, c2: f64, c1: f64, c0: f64) -> Option<Complex64> {
    let (b, c, d) = (c2 / c3, c1 / c3, c0 / c3);
    let r = cubic_real_root(b, c, d);
    // z³ + b z² + c z + d = (z - r)(z² + p z + q)
    let p = b + r;
    let q = if r.abs() > 1.0 { -d / r } else { c + r * p };
    quadratic_upper_root(1.0, p, q)
}

/// Newton iteration on `F'`, keeping the best iterate in `ℍ₊`.
fn polish(mut z: Complex64, p: ShapePoint, sp: ShapeParams, branch: Branch) -> Complex64 {
    let f_prime = |z| f_prime_on(z, p, sp, branch);
    let mut best = (f_prime(z).norm(), z);
    for _ in 0..60 {
        if best.0 <= NEWTON_TOL {
            break;
        }
        let step = f_prime(z) / f_second_on(z, p, sp, branch);
        if !(step.re.is_finite() && step.im.is_finite()) {
            break;
        }
        z -= step;
        if z.im <= 0.0 {
            break;
        }
        let res = f_prime(z).norm();
        if res < best.0 {
            best = (res, z);
        } else if step.norm() <= 1e-15 * z.norm() {
            break;
        }
    }
    best.1
}

/// Critical point of the given branch's `F'` in `ℍ₊`, ignoring which side of
/// `μ0` the point is on. Used to compare both formulations on `μ = μ0`.
pub fn omega_on_branch(p: ShapePoint, sp: ShapeParams, branch: Branch) -> Option<Complex64> {
    let (xi, mu, tau, mu0) = (p.xi, p.mu, sp.tau, sp.mu0);
    let raw = match branch {
        // τz² − (τ+ξ)z + (ξ+μ)
        Branch::Lower => quadratic_upper_root(tau, -(tau + xi), xi + mu)?,
        // τz(z−1)(z−2) + μ0 z(z−2) + (μ−μ0) z(z−1) − (ξ+μ)(z−1)(z−2), expanded
        Branch::Upper => cubic_upper_root(tau, -3.0 * tau - xi, 2.0 * tau - mu0 + 2.0 * mu + 3.0 * xi, -2.0 * (xi + mu))?,
    };
    Some(polish(raw, p, sp, branch))
}

/// `Ω(ξ, μ)`, or `None` when `(ξ, μ)` lies outside the liquid region.
pub fn omega(p: ShapePoint, sp: ShapeParams) -> Option<Complex64> {
    if !(p.xi.is_finite() && p.mu.is_finite()) {
        return None;
    }
    omega_on_branch(p, sp, sp.branch(p.mu))
}

pub fn in_domain(p: ShapePoint, sp: ShapeParams) -> bool {
    omega(p, sp).is_some()
}

/// Explicit inverse of `Ω` on `ℍ₊`.
pub fn inverse_omega(w: Complex64, sp: ShapeParams) -> Result<ShapePoint> {
    if !(w.im > 0.0) {
        return Err(Error::Domain(format!("Im Ω must be positive, got {w}")));
    }
    Ok(inverse_formula(w, sp))
}

/// The inverse formulas, also valid on the real axis where they trace the
/// frozen boundary.
pub(super) fn inverse_formula(w: Complex64, sp: ShapeParams) -> ShapePoint {
    let d0 = w.norm_sqr();
    let d1 = (w - 1.0).norm_sqr();
    let d2 = (w - 2.0).norm_sqr();
    match sp.branch_of_omega(w) {
        Branch::Lower => ShapePoint::new(sp.tau * (d0 - d1), sp.tau * d1),
        Branch::Upper => {
            let mu = sp.mu0 + 0.5 * d2 * (sp.tau - sp.mu0 / d1);
            let xi = 0.5 * d0 * (sp.tau + sp.mu0 / d1) - mu;
            ShapePoint::new(xi, mu)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::f_prime;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sp(tau: f64, mu0: f64) -> ShapeParams {
        ShapeParams::new(tau, mu0).unwrap()
    }

    #[test]
    fn known_points() {
        let w = omega(ShapePoint::new(-1.0, 2.0), sp(1.0, 2.0)).unwrap();
        assert_abs_diff_eq!((w - Complex64::i()).norm(), 0.0, epsilon = 1e-12);
        let w = omega(ShapePoint::new(2.5, 1.25), sp(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!((w - Complex64::new(2.0, 1.0)).norm(), 0.0, epsilon = 1e-12);
        assert!(omega(ShapePoint::new(10.0, 0.1), sp(1.0, 1.0)).is_none());
        assert!(!in_domain(ShapePoint::new(10.0, 0.1), sp(1.0, 1.0)));
        assert!(in_domain(ShapePoint::new(-1.0, 2.0), sp(1.0, 2.0)));
    }

    #[test]
    fn horizontal_axis_is_outside() {
        let s = sp(1.0, 1.5);
        for xi in [-0.5, 0.0, 0.5, 1.5] {
            assert!(!in_domain(ShapePoint::new(xi, 1e-12), s));
        }
    }

    #[test]
    fn inverse_known_points() {
        let p = inverse_omega(Complex64::i(), sp(1.0, 2.0)).unwrap();
        assert_abs_diff_eq!(p.xi, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.mu, 2.0, epsilon = 1e-15);
        let p = inverse_omega(Complex64::new(2.0, 1.0), sp(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(p.xi, 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.mu, 1.25, epsilon = 1e-15);
        assert!(matches!(inverse_omega(Complex64::new(1.0, 0.0), sp(1.0, 1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn roundtrip_grid() {
        for s in [sp(1.0, 1.5), sp(1.0, 2.0), sp(2.0, 0.7)] {
            let mut worst: f64 = 0.0;
            for i in 0..30 {
                for j in 0..30 {
                    let w = Complex64::new(-1.0 + 5.0 * (i as f64 + 0.5) / 30.0, 0.05 + 2.95 * j as f64 / 29.0);
                    let p = inverse_omega(w, s).unwrap();
                    let back = omega(p, s).expect("image of ℍ₊ lies in the domain");
                    worst = worst.max((back - w).norm());
                    assert!(f_prime(back, p, s).norm() <= 1e-12);
                }
            }
            assert!(worst <= 1e-10, "roundtrip error {worst:e}");
        }
    }

    #[test]
    fn branches_agree_on_separating_line() {
        let s = sp(1.0, 1.5);
        for xi in [-1.2, -0.5, 0.0, 0.7, 1.5, 2.5] {
            let p = ShapePoint::new(xi, s.mu0);
            let lo = omega_on_branch(p, s, Branch::Lower);
            let hi = omega_on_branch(p, s, Branch::Upper);
            match (lo, hi) {
                (Some(a), Some(b)) => assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-10),
                (None, None) => {}
                other => panic!("branch mismatch at xi={xi}: {other:?}"),
            }
        }
    }

    #[test]
    fn cubic_real_root_of_known_polynomial() {
        // (z-1)(z-2)(z+3) = z³ - 7z + 6
        let r = cubic_real_root(0.0, -7.0, 6.0);
        assert!([1.0, 2.0, -3.0].iter().any(|t| (r - t).abs() < 1e-12));
        let w = cubic_upper_root(1.0, -2.0, 2.0, 0.0).unwrap(); // z(z² - 2z + 2)
        assert_abs_diff_eq!((w - Complex64::new(1.0, 1.0)).norm(), 0.0, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn inverse_after_omega_is_identity(re in -2.0f64..5.0, im in 0.02f64..4.0, tau in 0.3f64..3.0, mu0 in 0.2f64..3.0) {
            let s = sp(tau, mu0);
            let w = Complex64::new(re, im);
            let p = inverse_omega(w, s).unwrap();
            let back = omega(p, s).unwrap();
            prop_assert!((back - w).norm() <= 1e-9 * (1.0 + w.norm()));
            let q = inverse_omega(back, s).unwrap();
            prop_assert!((q.xi - p.xi).abs() + (q.mu - p.mu).abs() <= 1e-9 * (1.0 + p.xi.abs() + p.mu.abs()));
        }
    }
}
