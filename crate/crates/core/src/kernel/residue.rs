//! Exact kernel evaluation by residues, in adaptive multiprecision.
//!
//! Expanding `1/(w(w-z))` in `w/z` reduces the double integral to
//!
//! `K = -χ S(n1-n2) - Σ_{j=0}^{n1} g_j B(n2-n1+j)`,  `n_i = x_i + m_i`,
//!
//! with `g_j = [w^j] e^{tw} p_{m1}(w)`, `B(q)` the sum of residues of
//! `z^{q-1} e^{-tz} / p_{m2}(z)` at `z = 1, 2`, and
//! `S(d) = [w^d] p_{m1}(w)/p_{m2}(w)`. The terms cancel heavily for large `t`;
//! the working precision is read off a magnitude shadow of the same sums.

use rug::Float;

use super::series::{binom_series, binomials, exp_series, mul_trunc, Scalar, Shadow};
use super::{split_level, KernelBlock, KernelEval, ScaledComplex};
use crate::error::{Error, Result};

/// Bits kept beyond the size of the largest partial sum.
const GUARD_BITS: f64 = 96.0;
const MAX_PREC: f64 = 65536.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueKernel {
    pub t: f64,
    pub m0: usize,
}

/// Which `(n1, n2)` pairs a block needs.
#[derive(Clone, Copy)]
struct Shape {
    m1: usize,
    m2: usize,
    n1: (i64, i64),
    n2: (i64, i64),
    /// Only `n1 - m1 == n2 - m2` (equal `x`), one value per `n1`.
    diagonal: bool,
}

impl Shape {
    fn width(&self) -> usize {
        (self.n2.1 - self.n2.0 + 1) as usize
    }
    fn len(&self) -> usize {
        let rows = (self.n1.1 - self.n1.0 + 1) as usize;
        if self.diagonal {
            rows
        } else {
            rows * self.width()
        }
    }
    fn index(&self, n1: i64, n2: i64) -> Option<usize> {
        if n1 < self.n1.0 || n1 > self.n1.1 || n2 < self.n2.0 || n2 > self.n2.1 {
            return None;
        }
        if self.diagonal {
            (n2 - self.m2 as i64 == n1 - self.m1 as i64).then_some((n1 - self.n1.0) as usize)
        } else {
            Some((n1 - self.n1.0) as usize * self.width() + (n2 - self.n2.0) as usize)
        }
    }
}

fn evaluate<S: Scalar>(proto: &S, t: f64, m0: usize, sh: Shape) -> Vec<S> {
    let zero = proto.zero();
    let mut out = vec![zero.clone(); sh.len()];
    let (a1, b1) = split_level(sh.m1, m0);
    let (a2, b2) = split_level(sh.m2, m0);
    let (a1, b1, a2, b2) = (a1 as i64, b1 as i64, a2 as i64, b2 as i64);

    // single integral, present for m1 < m2 and n1 >= n2
    if sh.m1 < sh.m2 && sh.n1.1 >= sh.n2.0 {
        let dmax = (sh.n1.1 - sh.n2.0) as usize;
        let s = mul_trunc(
            &binom_series(proto, -1, -(a2 - a1), dmax),
            &binom_series(proto, -2, -(b2 - b1), dmax),
            dmax,
        );
        for n1 in sh.n1.0..=sh.n1.1 {
            for n2 in sh.n2.0..=n1.min(sh.n2.1) {
                if let Some(i) = sh.index(n1, n2) {
                    out[i] = s[(n1 - n2) as usize].neg();
                }
            }
        }
    }

    if sh.n1.1 < 0 {
        return out;
    }
    let jmax = sh.n1.1 as usize;
    let poly = mul_trunc(&binom_series(proto, -1, a1, a1 as usize), &binom_series(proto, -2, b1, b1 as usize), sh.m1);
    let g = mul_trunc(&exp_series(proto, t, jmax), &poly, jmax);

    let e1 = (a2 > 0).then(|| {
        let n = (a2 - 1) as usize;
        let c = proto.exp_of(-t);
        mul_trunc(&exp_series(proto, -t, n), &binom_series(proto, -1, -b2, n), n).iter().map(|x| x.mul(&c)).collect::<Vec<_>>()
    });
    let e2 = (b2 > 0).then(|| {
        let n = (b2 - 1) as usize;
        let c = proto.exp_of(-2.0 * t);
        mul_trunc(&exp_series(proto, -t, n), &binom_series(proto, 1, -a2, n), n).iter().map(|x| x.mul(&c)).collect::<Vec<_>>()
    });
    let residues = |q: i64| {
        let mut acc = zero.clone();
        if let Some(e1) = &e1 {
            let c = binomials(proto, q - 1, a2 as usize);
            for (k, ck) in c.iter().enumerate() {
                acc = acc.add(&ck.mul(&e1[a2 as usize - 1 - k]));
            }
        }
        if let Some(e2) = &e2 {
            let c = binomials(proto, q - 1, b2 as usize);
            for (k, ck) in c.iter().enumerate() {
                acc = acc.add(&ck.mul_pow2(q - 1 - k as i64).mul(&e2[b2 as usize - 1 - k]));
            }
        }
        acc
    };

    let deltas: Vec<i64> = if sh.diagonal {
        vec![sh.m2 as i64 - sh.m1 as i64]
    } else {
        ((sh.n2.0 - sh.n1.1)..=(sh.n2.1 - sh.n1.0.max(0))).collect()
    };
    let qlo = deltas[0];
    let qhi = deltas[deltas.len() - 1] + jmax as i64;
    let b: Vec<S> = (qlo..=qhi).map(residues).collect();

    for &delta in &deltas {
        let mut acc = zero.clone();
        for j in 0..=jmax as i64 {
            acc = acc.add(&g[j as usize].mul(&b[(delta + j - qlo) as usize]));
            if let Some(i) = sh.index(j, j + delta) {
                out[i] = out[i].sub(&acc);
            }
        }
    }
    out
}

impl ResidueKernel {
    pub fn new(t: f64, m0: usize) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("time must be finite and >= 0, got {t}")));
        }
        Ok(Self { t, m0 })
    }

    /// Working precision for a block, from the log2 size of its largest
    /// partial sum.
    fn precision(&self, sh: Shape) -> Result<u32> {
        let shadow = evaluate(&Shadow(0.0), self.t, self.m0, sh);
        let top = shadow.iter().map(Shadow::log2).fold(0.0f64, f64::max);
        let bits = (top + GUARD_BITS).ceil().max(64.0);
        if !bits.is_finite() || bits > MAX_PREC {
            return Err(Error::PrecisionLoss(format!("would need {bits} bits of working precision")));
        }
        Ok(bits as u32)
    }

    fn run(&self, sh: Shape) -> Result<Vec<Float>> {
        let prec = self.precision(sh)?;
        Ok(evaluate(&Float::new(prec), self.t, self.m0, sh))
    }

    fn block_shape(m1: usize, x1: (i64, i64), m2: usize, x2: (i64, i64)) -> Result<Shape> {
        Self::check_levels(m1, m2)?;
        if x1.1 < x1.0 || x2.1 < x2.0 {
            return Err(Error::invalid("empty block range"));
        }
        Ok(Shape {
            m1,
            m2,
            n1: (x1.0 + m1 as i64, x1.1 + m1 as i64),
            n2: (x2.0 + m2 as i64, x2.1 + m2 as i64),
            diagonal: false,
        })
    }

    fn check_levels(m1: usize, m2: usize) -> Result<()> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::invalid("levels start at 1"));
        }
        Ok(())
    }
}

fn to_scaled(v: &Float) -> ScaledComplex {
    if v.is_zero() {
        return ScaledComplex::ZERO;
    }
    let (m, e) = v.to_f64_exp();
    ScaledComplex::from_binary(m, e as i64)
}

fn to_f64(v: &Float) -> f64 {
    v.to_f64()
}

impl KernelEval for ResidueKernel {
    fn m0(&self) -> usize {
        self.m0
    }

    fn time(&self) -> f64 {
        self.t
    }

    fn entry(&self, x1: i64, m1: usize, x2: i64, m2: usize) -> Result<ScaledComplex> {
        Self::check_levels(m1, m2)?;
        let n1 = x1 + m1 as i64;
        let n2 = x2 + m2 as i64;
        let sh = Shape { m1, m2, n1: (n1, n1), n2: (n2, n2), diagonal: false };
        Ok(to_scaled(&self.run(sh)?[0]))
    }

    fn block(&self, m1: usize, x1: (i64, i64), m2: usize, x2: (i64, i64)) -> Result<KernelBlock> {
        let sh = Self::block_shape(m1, x1, m2, x2)?;
        let values = self.run(sh)?.iter().map(to_f64).collect();
        Ok(KernelBlock::real(x1, x2, values))
    }

    /// Raises the precision of each factor until its rounding error, scaled
    /// by the partner factor, is below the guard.
    fn products(&self, m1: usize, x1: (i64, i64), m2: usize, x2: (i64, i64)) -> Result<KernelBlock> {
        let sh12 = Self::block_shape(m1, x1, m2, x2)?;
        let sh21 = Self::block_shape(m2, x2, m1, x1)?;
        let s12: Vec<f64> = evaluate(&Shadow(0.0), self.t, self.m0, sh12).iter().map(Shadow::log2).collect();
        let s21: Vec<f64> = evaluate(&Shadow(0.0), self.t, self.m0, sh21).iter().map(Shadow::log2).collect();
        let (w1, w2) = ((x1.1 - x1.0 + 1) as usize, (x2.1 - x2.0 + 1) as usize);
        let top = |v: &[f64]| v.iter().copied().fold(0.0f64, f64::max);
        let mut p12 = top(&s12) + GUARD_BITS;
        let mut p21 = top(&s21) + GUARD_BITS;
        let log2 = |v: &Float| v.get_exp().map_or(f64::NEG_INFINITY, f64::from);
        for _ in 0..6 {
            if p12.max(p21) > MAX_PREC || !p12.is_finite() || !p21.is_finite() {
                return Err(Error::PrecisionLoss(format!("would need {} bits of working precision", p12.max(p21))));
            }
            let k12 = evaluate(&Float::new(p12.max(64.0) as u32), self.t, self.m0, sh12);
            let k21 = evaluate(&Float::new(p21.max(64.0) as u32), self.t, self.m0, sh21);
            let (mut need12, mut need21) = (0.0f64, 0.0f64);
            for i in 0..w1 {
                for j in 0..w2 {
                    let (a, b) = (i * w2 + j, j * w1 + i);
                    need12 = need12.max(s12[a] + log2(&k21[b]));
                    need21 = need21.max(s21[b] + log2(&k12[a]));
                }
            }
            let (need12, need21) = ((need12 + GUARD_BITS).ceil(), (need21 + GUARD_BITS).ceil());
            if need12 <= p12 && need21 <= p21 {
                let mut values = Vec::with_capacity(w1 * w2);
                for i in 0..w1 {
                    for j in 0..w2 {
                        let prod = Float::with_val(p12.max(p21) as u32, &k12[i * w2 + j] * &k21[j * w1 + i]);
                        values.push(prod.to_f64());
                    }
                }
                return Ok(KernelBlock::real(x1, x2, values));
            }
            p12 = p12.max(need12);
            p21 = p21.max(need21);
        }
        Err(Error::PrecisionLoss("working precision did not settle".into()))
    }

    fn diagonal(&self, m: usize, xs: (i64, i64)) -> Result<Vec<ScaledComplex>> {
        Self::check_levels(m, m)?;
        if xs.1 < xs.0 {
            return Err(Error::invalid("empty diagonal range"));
        }
        let n = (xs.0 + m as i64, xs.1 + m as i64);
        let sh = Shape { m1: m, m2: m, n1: n, n2: n, diagonal: true };
        Ok(self.run(sh)?.iter().map(to_scaled).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn poisson(lambda: f64, k: i64) -> f64 {
        if k < 0 {
            return 0.0;
        }
        (-lambda + k as f64 * lambda.ln() - (1..=k).map(|i| (i as f64).ln()).sum::<f64>()).exp()
    }

    #[test]
    fn packed_at_time_zero() {
        let k = ResidueKernel::new(0.0, 2).unwrap();
        for m in 1..=5usize {
            for x in -(m as i64) - 3..4 {
                let want = if x >= -(m as i64) && x < 0 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(k.entry(x, m, x, m).unwrap().re(), want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn first_level_is_poisson() {
        // a lone particle started at -1 jumps at rate 1 (slow) or 2 (fast)
        let t = 3.0;
        for (m0, rate) in [(1, 1.0), (0, 2.0)] {
            let k = ResidueKernel::new(t, m0).unwrap();
            for x in -1..8 {
                assert_abs_diff_eq!(k.entry(x, 1, x, 1).unwrap().re(), poisson(rate * t, x + 1), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn block_and_diagonal_match_entries() {
        let k = ResidueKernel::new(4.0, 2).unwrap();
        let blk = k.block(2, (-3, 5), 4, (-5, 6)).unwrap();
        for x1 in -3..=5 {
            for x2 in -5..=6 {
                let e = k.entry(x1, 2, x2, 4).unwrap().re();
                assert_abs_diff_eq!(blk.get(x1, x2).unwrap().re, e, epsilon = 1e-13 * e.abs().max(1.0));
            }
        }
        let d = k.diagonal(3, (-4, 9)).unwrap();
        for (i, x) in (-4..=9).enumerate() {
            assert_abs_diff_eq!(d[i].re(), k.entry(x, 3, x, 3).unwrap().re(), epsilon = 1e-14);
        }
    }

    #[test]
    fn products_match_factor_blocks() {
        let k = ResidueKernel::new(4.0, 2).unwrap();
        let p = k.products(2, (-3, 4), 3, (-4, 6)).unwrap();
        let (a, b) = (k.block(2, (-3, 4), 3, (-4, 6)).unwrap(), k.block(3, (-4, 6), 2, (-3, 4)).unwrap());
        for x1 in -3..=4 {
            for x2 in -4..=6 {
                let want = a.get(x1, x2).unwrap().re * b.get(x2, x1).unwrap().re;
                assert_abs_diff_eq!(p.get(x1, x2).unwrap().re, want, epsilon = 1e-14 * want.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn density_is_a_probability_at_moderate_time() {
        let k = ResidueKernel::new(30.0, 20).unwrap();
        let w = crate::kernel::default_window(35, 20, 30.0);
        let d = k.diagonal(35, (w.lo, w.hi)).unwrap();
        assert!(d.iter().all(|v| v.re() > -1e-9 && v.re() < 1.0 + 1e-9));
        // every level holds exactly m particles
        let total: f64 = d.iter().map(|v| v.re()).sum();
        assert_abs_diff_eq!(total, 35.0, epsilon = 1e-9);
    }
}
