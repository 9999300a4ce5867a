use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `mantissa · 10^exp10` with `|mantissa| ∈ [1, 10)` or zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledComplex {
    pub mantissa: Complex64,
    pub exp10: i64,
}

impl ScaledComplex {
    pub const ZERO: Self = Self { mantissa: Complex64::new(0.0, 0.0), exp10: 0 };

    pub fn new(value: Complex64) -> Self {
        Self::normalized(value, 0)
    }

    /// `exp(log)`, without forming the possibly overflowing value.
    pub fn from_log(log: Complex64) -> Self {
        let l10 = log.re / std::f64::consts::LN_10;
        if !l10.is_finite() {
            return if l10 == f64::NEG_INFINITY { Self::ZERO } else { Self::normalized(Complex64::new(f64::NAN, f64::NAN), 0) };
        }
        let e = l10.floor();
        let mag = 10f64.powf(l10 - e);
        Self::normalized(Complex64::from_polar(mag, log.im), e as i64)
    }

    /// `value · 2^exp2`, as produced by binary multiprecision formats.
    pub fn from_binary(value: f64, exp2: i64) -> Self {
        if value == 0.0 {
            return Self::ZERO;
        }
        let l10 = value.abs().log10() + exp2 as f64 * std::f64::consts::LOG10_2;
        let e = l10.floor();
        Self::normalized(Complex64::new(value.signum() * 10f64.powf(l10 - e), 0.0), e as i64)
    }

    fn normalized(mut m: Complex64, mut e: i64) -> Self {
        let n = m.norm();
        if n == 0.0 {
            return Self::ZERO;
        }
        if !n.is_finite() {
            return Self { mantissa: m, exp10: e };
        }
        let shift = n.log10().floor() as i64;
        m /= 10f64.powi(shift as i32);
        e += shift;
        // guard against log10 rounding at exact powers of ten
        let n = m.norm();
        if n >= 10.0 {
            m /= 10.0;
            e += 1;
        } else if n < 1.0 {
            m *= 10.0;
            e -= 1;
        }
        Self { mantissa: m, exp10: e }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.re == 0.0 && self.mantissa.im == 0.0
    }

    /// Plain complex value; may overflow to infinity or underflow to zero.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        let e = self.exp10.clamp(-400, 400) as i32;
        // split the exponent so intermediate powers stay finite
        let (e1, e2) = (e / 2, e - e / 2);
        self.mantissa * 10f64.powi(e1) * 10f64.powi(e2)
    }

    pub fn re(&self) -> f64 {
        self.to_complex().re
    }

    pub fn im(&self) -> f64 {
        self.to_complex().im
    }

    /// `log10 |value|`, `-∞` for zero.
    pub fn log10_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.norm().log10() + self.exp10 as f64
        }
    }

    pub fn abs(&self) -> f64 {
        self.mantissa.norm() * 10f64.powf(self.exp10 as f64)
    }

    pub fn scale_log(self, log: f64) -> Self {
        self * Self::from_log(Complex64::new(log, 0.0))
    }
}

impl From<Complex64> for ScaledComplex {
    fn from(v: Complex64) -> Self {
        Self::new(v)
    }
}

impl From<f64> for ScaledComplex {
    fn from(v: f64) -> Self {
        Self::new(Complex64::new(v, 0.0))
    }
}

impl Mul for ScaledComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::normalized(self.mantissa * rhs.mantissa, self.exp10 + rhs.exp10)
    }
}

impl Add for ScaledComplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exp10 >= rhs.exp10 { (self, rhs) } else { (rhs, self) };
        let gap = big.exp10 - small.exp10;
        if gap > 40 {
            return big;
        }
        Self::normalized(big.mantissa + small.mantissa * 10f64.powi(-(gap as i32)), big.exp10)
    }
}

impl Neg for ScaledComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self { mantissa: -self.mantissa, exp10: self.exp10 }
    }
}

impl Sub for ScaledComplex {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl fmt::Display for ScaledComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}i)e{}", self.mantissa.re, self.mantissa.im, self.exp10)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn normalization() {
        let s = ScaledComplex::new(Complex64::new(1234.5, 0.0));
        assert_eq!(s.exp10, 3);
        assert_relative_eq!(s.mantissa.re, 1.2345, max_relative = 1e-15);
        let s = ScaledComplex::new(Complex64::new(0.001, 0.0));
        assert_eq!(s.exp10, -3);
        assert!(ScaledComplex::new(Complex64::new(0.0, 0.0)).is_zero());
        for v in [1.0, 10.0, 100.0, 1e-5] {
            let s = ScaledComplex::from(v);
            assert!(s.mantissa.norm() >= 1.0 && s.mantissa.norm() < 10.0);
        }
    }

    #[test]
    fn beyond_f64_range() {
        let big = ScaledComplex::from_log(Complex64::new(1000.0, 0.0));
        let small = ScaledComplex::from_log(Complex64::new(-1000.0, 0.0));
        let one = big * small;
        assert_relative_eq!(one.to_complex().re, 1.0, max_relative = 1e-12);
        assert_eq!(big.exp10, (1000.0 / std::f64::consts::LN_10).floor() as i64);
        let b = ScaledComplex::from_binary(1.5, 3000);
        assert_relative_eq!(b.log10_abs(), 1.5f64.log10() + 3000.0 * 2f64.log10(), max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn arithmetic_matches_f64(a in -1e6f64..1e6, b in -1e6f64..1e6, c in -1e3f64..1e3) {
            let (x, y) = (Complex64::new(a, c), Complex64::new(b, -c));
            let (sx, sy) = (ScaledComplex::new(x), ScaledComplex::new(y));
            let tol = 1e-12 * (x.norm() + y.norm() + 1.0);
            prop_assert!(((sx + sy).to_complex() - (x + y)).norm() <= tol);
            prop_assert!(((sx - sy).to_complex() - (x - y)).norm() <= tol);
            prop_assert!(((sx * sy).to_complex() - x * y).norm() <= 1e-12 * (x * y).norm() + 1e-300);
            let m = sx.mantissa.norm();
            prop_assert!(sx.is_zero() || (1.0..10.0).contains(&m));
        }
    }
}
