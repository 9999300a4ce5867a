use num_complex::Complex64;

use super::{Branch, ShapeParams, ShapePoint};
use crate::error::{Error, Result};

/// The action `F(z | ξ, μ)` with principal logarithms.
///
/// Lower branch (`μ <= μ0`): `τz + μ log(z-1) - (ξ+μ) log z`.
/// Upper branch: `τz + μ0 log(z-1) + (μ-μ0) log(z-2) - (ξ+μ) log z`.
pub fn eval_f(z: Complex64, p: ShapePoint, sp: ShapeParams) -> Result<Complex64> {
    check_regular(z, p, sp)?;
    let s = p.xi + p.mu;
    Ok(match sp.branch(p.mu) {
        Branch::Lower => sp.tau * z + p.mu * (z - 1.0).ln() - s * z.ln(),
        Branch::Upper => {
            sp.tau * z + sp.mu0 * (z - 1.0).ln() + (p.mu - sp.mu0) * (z - 2.0).ln() - s * z.ln()
        }
    })
}

/// `F'(z)`, a rational function.
pub fn f_prime(z: Complex64, p: ShapePoint, sp: ShapeParams) -> Complex64 {
    f_prime_on(z, p, sp, sp.branch(p.mu))
}

pub(crate) fn f_prime_on(z: Complex64, p: ShapePoint, sp: ShapeParams, branch: Branch) -> Complex64 {
    let s = p.xi + p.mu;
    match branch {
        Branch::Lower => sp.tau + p.mu / (z - 1.0) - s / z,
        Branch::Upper => sp.tau + sp.mu0 / (z - 1.0) + (p.mu - sp.mu0) / (z - 2.0) - s / z,
    }
}

/// `F''(z)`.
pub fn f_second(z: Complex64, p: ShapePoint, sp: ShapeParams) -> Complex64 {
    f_second_on(z, p, sp, sp.branch(p.mu))
}

pub(crate) fn f_second_on(z: Complex64, p: ShapePoint, sp: ShapeParams, branch: Branch) -> Complex64 {
    let s = p.xi + p.mu;
    let sq = |w: Complex64| w * w;
    match branch {
        Branch::Lower => -p.mu / sq(z - 1.0) + s / sq(z),
        Branch::Upper => -sp.mu0 / sq(z - 1.0) - (p.mu - sp.mu0) / sq(z - 2.0) + s / sq(z),
    }
}

fn check_regular(z: Complex64, p: ShapePoint, sp: ShapeParams) -> Result<()> {
    let mut points = vec![0.0, 1.0];
    if sp.branch(p.mu) == Branch::Upper {
        points.push(2.0);
    }
    for b in points {
        if z.im == 0.0 && z.re == b {
            return Err(Error::Singularity(format!("F is singular at z = {b}")));
        }
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Singularity("non-finite argument".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn value_at_i() {
        let f = eval_f(Complex64::i(), ShapePoint::new(-1.0, 2.0), ShapeParams::new(1.0, 2.0).unwrap()).unwrap();
        assert_abs_diff_eq!(f.re, 2f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(f.im, 1.0 + PI, epsilon = 1e-14);
    }

    #[test]
    fn imaginary_part_on_upper_branch() {
        let f = eval_f(Complex64::new(2.0, 1.0), ShapePoint::new(2.5, 1.25), ShapeParams::new(1.0, 1.0).unwrap())
            .unwrap();
        let expected = 1.0 + PI / 4.0 + PI / 8.0 - 3.75 * 0.5f64.atan();
        assert_abs_diff_eq!(f.im, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(f.im, 0.43942, epsilon = 1e-5);
    }

    #[test]
    fn schwarz_reflection() {
        let sp = ShapeParams::new(1.3, 0.8).unwrap();
        for (z, p) in [
            (Complex64::new(0.3, 0.7), ShapePoint::new(0.1, 0.5)),
            (Complex64::new(2.4, 1.1), ShapePoint::new(1.0, 1.7)),
            (Complex64::new(-1.0, 0.2), ShapePoint::new(-0.5, 0.9)),
        ] {
            let a = eval_f(z.conj(), p, sp).unwrap();
            let b = eval_f(z, p, sp).unwrap().conj();
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn branch_points_are_rejected() {
        let sp = ShapeParams::new(1.0, 1.0).unwrap();
        let upper = ShapePoint::new(0.0, 2.0);
        for b in [0.0, 1.0, 2.0] {
            assert!(matches!(eval_f(Complex64::new(b, 0.0), upper, sp), Err(Error::Singularity(_))));
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let sp = ShapeParams::new(1.0, 1.5).unwrap();
        let z = Complex64::new(0.7, 0.9);
        let h = 1e-5;
        for p in [ShapePoint::new(0.2, 1.0), ShapePoint::new(0.4, 2.2)] {
            let fd = (eval_f(z + h, p, sp).unwrap() - eval_f(z - h, p, sp).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!((fd - f_prime(z, p, sp)).norm(), 0.0, epsilon = 1e-8);
            let fd2 = (f_prime(z + h, p, sp) - f_prime(z - h, p, sp)) / (2.0 * h);
            assert_abs_diff_eq!((fd2 - f_second(z, p, sp)).norm(), 0.0, epsilon = 1e-8);
        }
    }
}
