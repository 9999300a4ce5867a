//! Power-series arithmetic shared by the multiprecision kernel and its
//! magnitude shadow.
//!
//! The shadow runs the same recurrences on absolute values in `f64`; its
//! output bounds every partial sum and fixes the working precision.

use rug::ops::NegAssign;
use rug::Float;

pub(crate) trait Scalar: Clone {
    fn zero(&self) -> Self;
    fn like_f64(&self, v: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn mul_int(&self, k: i64) -> Self;
    fn div_int(&self, k: i64) -> Self;
    fn mul_pow2(&self, e: i64) -> Self;
    fn exp_of(&self, v: f64) -> Self;

    fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
}

/// Absolute-value shadow, stored as `log2 |x|` so it cannot overflow.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub(crate) struct Shadow(pub f64);

impl Shadow {
    pub(crate) fn log2(&self) -> f64 {
        self.0
    }
}

impl Scalar for Shadow {
    fn zero(&self) -> Self {
        Shadow(f64::NEG_INFINITY)
    }
    fn like_f64(&self, v: f64) -> Self {
        Shadow(v.abs().log2())
    }
    fn add(&self, o: &Self) -> Self {
        let (hi, lo) = if self.0 >= o.0 { (self.0, o.0) } else { (o.0, self.0) };
        if lo == f64::NEG_INFINITY {
            return Shadow(hi);
        }
        Shadow(hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2)
    }
    fn neg(&self) -> Self {
        *self
    }
    fn mul(&self, o: &Self) -> Self {
        Shadow(self.0 + o.0)
    }
    fn mul_int(&self, k: i64) -> Self {
        Shadow(self.0 + (k.unsigned_abs() as f64).log2())
    }
    fn div_int(&self, k: i64) -> Self {
        Shadow(self.0 - (k.unsigned_abs() as f64).log2())
    }
    fn mul_pow2(&self, e: i64) -> Self {
        Shadow(self.0 + e as f64)
    }
    fn exp_of(&self, v: f64) -> Self {
        Shadow(v / std::f64::consts::LN_2)
    }
}

impl Scalar for Float {
    fn zero(&self) -> Self {
        Float::new(self.prec())
    }
    fn like_f64(&self, v: f64) -> Self {
        Float::with_val(self.prec(), v)
    }
    fn add(&self, o: &Self) -> Self {
        Float::with_val(self.prec(), self + o)
    }
    fn neg(&self) -> Self {
        let mut r = self.clone();
        r.neg_assign();
        r
    }
    fn mul(&self, o: &Self) -> Self {
        Float::with_val(self.prec(), self * o)
    }
    fn mul_int(&self, k: i64) -> Self {
        Float::with_val(self.prec(), self * k)
    }
    fn div_int(&self, k: i64) -> Self {
        Float::with_val(self.prec(), self / k)
    }
    fn mul_pow2(&self, e: i64) -> Self {
        let mut r = self.clone();
        if e >= 0 {
            r <<= e as u32;
        } else {
            r >>= (-e) as u32;
        }
        r
    }
    fn exp_of(&self, v: f64) -> Self {
        Float::with_val(self.prec(), v).exp()
    }
}

/// `s^k / k!` for `k = 0..=n`.
pub(crate) fn exp_series<S: Scalar>(proto: &S, s: f64, n: usize) -> Vec<S> {
    let sf = proto.like_f64(s);
    let mut out = Vec::with_capacity(n + 1);
    out.push(proto.like_f64(1.0));
    for k in 1..=n {
        let next = out[k - 1].mul(&sf).div_int(k as i64);
        out.push(next);
    }
    out
}

/// Coefficients of `(c0 + u)^p` up to `u^n`, for `c0 ∈ {±1, ±2}` and integer `p`.
pub(crate) fn binom_series<S: Scalar>(proto: &S, c0: i64, p: i64, n: usize) -> Vec<S> {
    debug_assert!(matches!(c0, -2 | -1 | 1 | 2));
    let log2_c0 = if c0.abs() == 2 { 1 } else { 0 };
    let negative = c0 < 0 && p.rem_euclid(2) == 1;
    let mut first = proto.like_f64(1.0).mul_pow2(log2_c0 * p);
    if negative {
        first = first.neg();
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(first);
    for k in 0..n as i64 {
        let next = out[k as usize].mul_int(p - k).div_int((k + 1) * c0);
        out.push(next);
    }
    out
}

/// Product of two series truncated at `u^n`.
pub(crate) fn mul_trunc<S: Scalar>(a: &[S], b: &[S], n: usize) -> Vec<S> {
    let zero = a[0].zero();
    (0..=n)
        .map(|k| {
            let mut acc = zero.clone();
            for i in 0..=k.min(a.len() - 1) {
                if k - i < b.len() {
                    acc = acc.add(&a[i].mul(&b[k - i]));
                }
            }
            acc
        })
        .collect()
}

/// Generalized binomial coefficients `C(p, k)` for `k = 0..n`.
pub(crate) fn binomials<S: Scalar>(proto: &S, p: i64, n: usize) -> Vec<S> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(proto.like_f64(1.0));
    for k in 1..n as i64 {
        let next = out[k as usize - 1].mul_int(p - k + 1).div_int(k);
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(v: f64) -> Float {
        Float::with_val(128, v)
    }

    #[test]
    fn binomial_expansions() {
        // (u - 1)^3 = -1 + 3u - 3u² + u³
        let c: Vec<f64> = binom_series(&f(0.0), -1, 3, 5).iter().map(|x| x.to_f64()).collect();
        assert_eq!(c, vec![-1.0, 3.0, -3.0, 1.0, 0.0, 0.0]);
        // (2 + u)^-1 = 1/2 - u/4 + u²/8
        let c: Vec<f64> = binom_series(&f(0.0), 2, -1, 2).iter().map(|x| x.to_f64()).collect();
        assert_eq!(c, vec![0.5, -0.25, 0.125]);
        // (u - 2)^-2 = 1/4 + u/4 + 3u²/16
        let c: Vec<f64> = binom_series(&f(0.0), -2, -2, 2).iter().map(|x| x.to_f64()).collect();
        assert_eq!(c, vec![0.25, 0.25, 0.1875]);
        let c: Vec<f64> = binomials(&f(0.0), -3, 4).iter().map(|x| x.to_f64()).collect();
        assert_eq!(c, vec![1.0, -3.0, 6.0, -10.0]);
    }

    #[test]
    fn exp_and_product() {
        let e: Vec<f64> = exp_series(&f(0.0), 2.0, 3).iter().map(|x| x.to_f64()).collect();
        assert_eq!(e, vec![1.0, 2.0, 2.0, 4.0 / 3.0]);
        let a = exp_series(&f(0.0), 1.0, 6);
        let b = exp_series(&f(0.0), -1.0, 6);
        let p = mul_trunc(&a, &b, 6);
        assert_eq!(p[0].to_f64(), 1.0);
        assert!(p[1..].iter().all(|x| x.to_f64().abs() < 1e-30));
    }

    #[test]
    fn shadow_dominates() {
        let s = binom_series(&Shadow(0.0), -2, -3, 6);
        let v = binom_series(&f(0.0), -2, -3, 6);
        for (a, b) in s.iter().zip(&v) {
            assert!(a.log2() >= b.to_f64().abs().log2() - 1e-12);
        }
        let e = exp_series(&Shadow(0.0), -3.0, 4);
        let sum = e.iter().fold(Shadow(0.0).zero(), |acc, x| acc.add(x));
        let direct: f64 = (0..5).map(|k| 3f64.powi(k) / (1..=k).product::<i32>() as f64).sum();
        assert!((sum.log2() - direct.log2()).abs() < 1e-12);
    }
}
