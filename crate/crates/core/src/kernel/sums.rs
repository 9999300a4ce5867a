//! Sums of kernel values: mean heights, the `K² = K` diagonal identity, the
//! covariance kernel `R`, and its Green's-function limits.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::KernelEval;
use crate::error::{Error, Result};
use crate::shape::{omega, row_extent, ShapeParams, ShapePoint};

/// Largest tolerated summand at the edge of a truncation window.
pub const TRUNCATION_THRESHOLD: f64 = 1e-12;

/// Largest tolerated imaginary part of a diagonal kernel value.
const IMAG_THRESHOLD: f64 = 1e-9;

/// Inclusive range of `x` summed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::invalid(format!("empty window [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    fn pair(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }
}

/// Summation window for level `m`. No particle sits left of `-m`; on the
/// right the window reaches `⌈2t⌉ + ⌈10√t⌉ + 10` or, if farther, the right
/// edge of the limit shape on that row plus the same margin.
pub fn default_window(m: usize, m0: usize, t: f64) -> Window {
    let margin = (10.0 * t.sqrt()).ceil() as i64 + 10;
    let mut hi = (2.0 * t).ceil() as i64 + margin;
    if t > 0.0 && m > 0 {
        let sp = ShapeParams { tau: 1.0, mu0: (m0 as f64).max(1e-9) / t };
        if let Ok((_, edge)) = row_extent(m as f64 / t, sp) {
            hi = hi.max((edge * t).ceil() as i64 + margin);
        }
    }
    Window { lo: -(m as i64) - 10, hi }
}

fn truncation(last: f64) -> Result<()> {
    if last.abs() > TRUNCATION_THRESHOLD || last.is_nan() {
        return Err(Error::Truncation { last_term: last.abs(), threshold: TRUNCATION_THRESHOLD });
    }
    Ok(())
}

/// `E h(x, m) = Σ_{x' >= x} K(x', m; x', m)` over the window.
pub fn mean_height_kernel<K: KernelEval + ?Sized>(k: &K, x: i64, m: usize, window: Option<Window>) -> Result<f64> {
    let w = window.unwrap_or_else(|| default_window(m, k.m0(), k.time()));
    let start = x.max(w.lo).min(w.hi);
    let diag = k.diagonal(m, (start, w.hi))?;
    let mut sum = 0.0;
    for v in &diag {
        let c = v.to_complex();
        if c.im.abs() > IMAG_THRESHOLD {
            return Err(Error::PrecisionLoss(format!("diagonal kernel value {c} is not real")));
        }
        sum += c.re;
    }
    truncation(diag[diag.len() - 1].re())?;
    Ok(if x > w.hi { 0.0 } else { sum })
}

/// `|Σ_{x2} K(x1,m1; x2,m2) K(x2,m2; x1,m1) - δ_{m1 m2} K(x1,m1; x1,m1)|`.
pub fn complement_residual<K: KernelEval + ?Sized>(
    k: &K,
    x1: i64,
    m1: usize,
    m2: usize,
    window: Option<Window>,
) -> Result<f64> {
    let w = window.unwrap_or_else(|| default_window(m2, k.m0(), k.time()));
    let prods = k.products(m1, (x1, x1), m2, w.pair())?;
    let term = |x2: i64| prods.get(x1, x2).unwrap();
    let sum: Complex64 = (w.lo..=w.hi).map(term).sum();
    truncation(term(w.hi).norm().max(term(w.lo).norm()))?;
    let diag = if m1 == m2 { k.entry(x1, m1, x1, m1)?.to_complex() } else { Complex64::new(0.0, 0.0) };
    Ok((sum - diag).norm())
}

/// Both summation orders of the covariance kernel:
/// `(Σ_{x1>=y1} Σ_{x2<y2}, Σ_{x1<y1} Σ_{x2>=y2})` of `K(x1,m1; x2,m2) K(x2,m2; x1,m1)`.
pub fn r_direct_both<K: KernelEval + ?Sized>(
    k: &K,
    (y1, m1): (i64, usize),
    (y2, m2): (i64, usize),
    window: Option<Window>,
) -> Result<(f64, f64)> {
    let w1 = window.unwrap_or_else(|| default_window(m1, k.m0(), k.time()));
    let w2 = window.unwrap_or_else(|| default_window(m2, k.m0(), k.time()));
    let prods = k.products(m1, w1.pair(), m2, w2.pair())?;
    let mut right_left = 0.0;
    let mut left_right = 0.0;
    let mut edge: f64 = 0.0;
    for x1 in w1.lo..=w1.hi {
        for x2 in w2.lo..=w2.hi {
            let p = prods.get(x1, x2).unwrap();
            if x1 == w1.hi || x2 == w2.hi {
                edge = edge.max(p.norm());
            }
            if x1 >= y1 && x2 < y2 {
                right_left += p.re;
            } else if x1 < y1 && x2 >= y2 {
                left_right += p.re;
            }
        }
    }
    truncation(edge)?;
    Ok((right_left, left_right))
}

/// The covariance kernel `R(y1,m1; y2,m2) = Cov(h(y1,m1), h(y2,m2))`.
pub fn r_direct<K: KernelEval + ?Sized>(
    k: &K,
    p1: (i64, usize),
    p2: (i64, usize),
    window: Option<Window>,
) -> Result<f64> {
    let (a, b) = r_direct_both(k, p1, p2, window)?;
    Ok(if p1.0 >= p2.0 { a } else { b })
}

fn log_ratio(w1: Complex64, w2: Complex64) -> Result<f64> {
    if w1.im <= 0.0 || w2.im <= 0.0 {
        return Err(Error::Domain(format!("need Im Ω > 0, got {w1} and {w2}")));
    }
    let num = (w1 - w2).norm();
    if num == 0.0 {
        return Err(Error::Divergence);
    }
    Ok((num / (w1 - w2.conj()).norm()).ln())
}

/// Dirichlet Green's function of `ℍ₊`: `-(1/2π) log |(Ω1-Ω2)/(Ω1-conj Ω2)|`.
pub fn gff_green(w1: Complex64, w2: Complex64) -> Result<f64> {
    Ok(-log_ratio(w1, w2)? / (2.0 * PI))
}

/// Large-`L` limit of `R` at two points of the liquid region:
/// `-(1/2π²) log |(Ω1-Ω2)/(Ω1-conj Ω2)|`.
pub fn green_limit(p1: ShapePoint, p2: ShapePoint, sp: ShapeParams) -> Result<f64> {
    let w = |p: ShapePoint| {
        omega(p, sp).ok_or_else(|| Error::Domain(format!("({}, {}) is outside the liquid region", p.xi, p.mu)))
    };
    Ok(-log_ratio(w(p1)?, w(p2)?)? / (2.0 * PI * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{ContourKernel, KernelParams, ResidueKernel};
    use crate::shape::limit_height;
    use approx::assert_abs_diff_eq;

    fn contour(t: f64, m0: usize) -> ContourKernel {
        ContourKernel::new(KernelParams { t, m0, ..KernelParams::default() }).unwrap()
    }

    #[test]
    fn mean_height_at_time_zero() {
        let cases: [(&dyn KernelEval, &[usize]); 2] =
            [(&contour(0.0, 2), &[1, 2, 3]), (&ResidueKernel::new(0.0, 2).unwrap(), &[1, 3, 6, 20])];
        for (k, levels) in cases {
            for &m in levels {
                let w = Some(Window::new(-(m as i64) - 3, 0).unwrap());
                assert_abs_diff_eq!(mean_height_kernel(k, -(m as i64), m, w).unwrap(), m as f64, epsilon = 1e-10);
                assert_abs_diff_eq!(mean_height_kernel(k, 0, m, w).unwrap(), 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn mean_height_tracks_limit_shape() {
        let l = 20.0;
        let k = ResidueKernel::new(l, 30).unwrap();
        let h = mean_height_kernel(&k, -20, 40, None).unwrap();
        let lim = limit_height(ShapePoint::new(-1.0, 2.0), ShapeParams::new(1.0, 1.5).unwrap()).unwrap();
        assert!((h / l - lim).abs() <= 0.05, "{} vs {}", h / l, lim);
    }

    #[test]
    fn window_reaches_the_row_edge() {
        assert_eq!(default_window(3, 1, 0.0), Window { lo: -13, hi: 10 });
        let w = default_window(40, 30, 20.0);
        assert!(w.hi >= 94 + 10, "{w:?}");
        assert_eq!(default_window(2, 30, 20.0).hi, 40 + 45 + 10);
    }

    #[test]
    fn small_window_is_reported() {
        let k = ResidueKernel::new(10.0, 2).unwrap();
        let err = mean_height_kernel(&k, 0, 3, Some(Window::new(-13, 5).unwrap())).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn complement_identity() {
        let k = ResidueKernel::new(5.0, 3).unwrap();
        assert!(complement_residual(&k, 1, 2, 4, None).unwrap() <= 1e-6);
        assert!(complement_residual(&k, 0, 3, 3, None).unwrap() <= 1e-6);
        // far-right entries are out of reach of the fixed circles
        let c = contour(5.0, 3);
        assert!(matches!(complement_residual(&c, 1, 2, 4, None), Err(Error::PrecisionLoss(_))));
        let k0 = ResidueKernel::new(0.0, 3).unwrap();
        for (x1, m1, m2) in [(-1, 1, 1), (-2, 2, 3), (0, 4, 2), (-3, 3, 3)] {
            assert!(complement_residual(&k0, x1, m1, m2, None).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn covariance_kernel_identities() {
        let k0 = ResidueKernel::new(0.0, 2).unwrap();
        assert_abs_diff_eq!(r_direct(&k0, (-1, 2), (0, 3), None).unwrap(), 0.0, epsilon = 1e-12);
        let k = ResidueKernel::new(6.0, 2).unwrap();
        let (a, b) = r_direct_both(&k, (1, 2), (3, 4), None).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        let (a, b) = r_direct_both(&k, (4, 3), (0, 1), None).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        // symmetric in its two arguments
        let r12 = r_direct(&k, (1, 2), (3, 4), None).unwrap();
        let r21 = r_direct(&k, (3, 4), (1, 2), None).unwrap();
        assert_abs_diff_eq!(r12, r21, epsilon = 1e-9);
        assert!(r_direct(&k, (2, 3), (2, 3), None).unwrap() > 0.0);
    }

    #[test]
    fn variance_of_first_level_is_poisson_tail() {
        // h(y, 1) is the indicator that the single particle sits at or right of y
        let t = 2.5;
        let k = ResidueKernel::new(t, 1).unwrap();
        for y in [0i64, 2, 4] {
            let p: f64 = (y + 1..60).map(|n| (-t + n as f64 * t.ln() - (1..=n).map(|i| (i as f64).ln()).sum::<f64>()).exp()).sum();
            assert_abs_diff_eq!(r_direct(&k, (y, 1), (y, 1), None).unwrap(), p * (1.0 - p), epsilon = 1e-10);
        }
    }

    #[test]
    fn green_functions() {
        let (i, w2) = (Complex64::i(), Complex64::new(2.0, 1.0));
        assert_abs_diff_eq!(gff_green(i, 2.0 * i).unwrap(), 3f64.ln() / (2.0 * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(gff_green(i, 2.0 * i).unwrap(), 0.174850, epsilon = 1e-6);
        assert_abs_diff_eq!(gff_green(i, w2).unwrap(), gff_green(w2, i).unwrap(), epsilon = 1e-15);
        assert!(gff_green(i, Complex64::new(0.5, 1e-9)).unwrap() < 1e-8);
        assert!(matches!(gff_green(i, i), Err(Error::Divergence)));
        // points mapping to i and 2+i under different parameters share τ = μ0 = 1 via reflection
        let sp = ShapeParams::new(1.0, 1.0).unwrap();
        let p1 = crate::shape::inverse_omega(i, sp).unwrap();
        let p2 = crate::shape::inverse_omega(w2, sp).unwrap();
        let g = green_limit(p1, p2, sp).unwrap();
        assert_abs_diff_eq!(g, 2f64.ln() / (4.0 * PI * PI), epsilon = 1e-10);
        assert_abs_diff_eq!(g, 0.0175576, epsilon = 1e-7);
        assert_abs_diff_eq!(g * PI, gff_green(i, w2).unwrap(), epsilon = 1e-10);
        assert_abs_diff_eq!(g, green_limit(p2, p1, sp).unwrap(), epsilon = 1e-15);
        assert!(matches!(green_limit(p1, p1, sp), Err(Error::Divergence)));
    }
}
