//! The determinantal correlation kernel `K(x1, m1; x2, m2)` at time `t`, the
//! identities it satisfies, and the covariance sums built from it.
//!
//! Two independent routes evaluate `K`: [`ContourKernel`] integrates the
//! double contour integral by the trapezoidal rule, [`ResidueKernel`] sums the
//! residues exactly in multiprecision. The first is fast for small `t`; the
//! second stays exact at any desk-scale `t`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod contour;
mod residue;
mod scaled;
mod series;
mod sums;

pub use contour::{ContourKernel, MAX_NODES};
pub use residue::ResidueKernel;
pub use scaled::ScaledComplex;
pub use sums::{
    complement_residual, default_window, gff_green, green_limit, mean_height_kernel, r_direct, r_direct_both,
    Window, TRUNCATION_THRESHOLD,
};

/// Time, separating level and contour-quadrature settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelParams {
    pub t: f64,
    pub m0: usize,
    pub quad_nodes: usize,
    pub gamma0_radius: f64,
    pub gamma12_center: f64,
    pub gamma12_radius: f64,
    pub tol: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { t: 0.0, m0: 1, quad_nodes: 512, gamma0_radius: 0.3, gamma12_center: 1.5, gamma12_radius: 1.1, tol: 1e-10 }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::invalid(format!("time must be finite and >= 0, got {}", self.t)));
        }
        if self.quad_nodes < 8 || !self.quad_nodes.is_power_of_two() || self.quad_nodes > contour::MAX_NODES {
            return Err(Error::invalid(format!("quad_nodes must be a power of two in [8, {}]", contour::MAX_NODES)));
        }
        let (r0, c, r) = (self.gamma0_radius, self.gamma12_center, self.gamma12_radius);
        if !(r0 > 0.0 && r0 < 1.0) {
            return Err(Error::invalid(format!("gamma0 must enclose 0 only, radius {r0}")));
        }
        if !((c - 1.0).abs() < r && (c - 2.0).abs() < r && c > r) {
            return Err(Error::invalid(format!("gamma12 (center {c}, radius {r}) must enclose 1 and 2 but not 0")));
        }
        if !(r0 + r < c) {
            return Err(Error::invalid("gamma0 and gamma12 must be disjoint"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        Ok(())
    }
}

/// `(a, b)` with `p_m(z) = (z-1)^a (z-2)^b`.
pub(crate) fn split_level(m: usize, m0: usize) -> (usize, usize) {
    (m.min(m0), m.saturating_sub(m0))
}

/// `log p_m(z)` with principal logarithms.
pub fn log_p_poly(z: Complex64, m: usize, m0: usize) -> Complex64 {
    let (a, b) = split_level(m, m0);
    let mut l = Complex64::new(0.0, 0.0);
    if a > 0 {
        l += a as f64 * (z - 1.0).ln();
    }
    if b > 0 {
        l += b as f64 * (z - 2.0).ln();
    }
    l
}

/// `p_m(z) = (z-1)^m` for `m <= m0`, else `(z-1)^{m0} (z-2)^{m-m0}`.
pub fn p_poly(z: Complex64, m: usize, m0: usize) -> Complex64 {
    let (a, b) = split_level(m, m0);
    if a + b <= 64 {
        (z - 1.0).powu(a as u32) * (z - 2.0).powu(b as u32)
    } else {
        log_p_poly(z, m, m0).exp()
    }
}

/// A rectangular table of kernel values for fixed levels.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBlock {
    pub x1: (i64, i64),
    pub x2: (i64, i64),
    values: Vec<Complex64>,
}

impl KernelBlock {
    pub fn new(x1: (i64, i64), x2: (i64, i64), values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len() as i64, (x1.1 - x1.0 + 1) * (x2.1 - x2.0 + 1));
        Self { x1, x2, values }
    }

    pub(crate) fn real(x1: (i64, i64), x2: (i64, i64), values: Vec<f64>) -> Self {
        Self::new(x1, x2, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn get(&self, x1: i64, x2: i64) -> Option<Complex64> {
        if x1 < self.x1.0 || x1 > self.x1.1 || x2 < self.x2.0 || x2 > self.x2.1 {
            return None;
        }
        let w = (self.x2.1 - self.x2.0 + 1) as usize;
        Some(self.values[(x1 - self.x1.0) as usize * w + (x2 - self.x2.0) as usize])
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

/// A way of evaluating `K` at time [`KernelEval::time`].
pub trait KernelEval: Sync {
    fn time(&self) -> f64;

    fn m0(&self) -> usize;

    fn entry(&self, x1: i64, m1: usize, x2: i64, m2: usize) -> Result<ScaledComplex>;

    /// `K(x1, m1; x2, m2)` over the inclusive ranges `x1` and `x2`.
    fn block(&self, m1: usize, x1: (i64, i64), m2: usize, x2: (i64, i64)) -> Result<KernelBlock> {
        let mut values = Vec::new();
        for a in x1.0..=x1.1 {
            for b in x2.0..=x2.1 {
                values.push(self.entry(a, m1, b, m2)?.to_complex());
            }
        }
        Ok(KernelBlock::new(x1, x2, values))
    }

    /// `K(x1, m1; x2, m2) · K(x2, m2; x1, m1)` over the inclusive ranges.
    /// The product is gauge invariant even when the factors are not small.
    fn products(&self, m1: usize, x1: (i64, i64), m2: usize, x2: (i64, i64)) -> Result<KernelBlock> {
        let k12 = self.block(m1, x1, m2, x2)?;
        let k21 = self.block(m2, x2, m1, x1)?;
        let mut values = Vec::new();
        for a in x1.0..=x1.1 {
            for b in x2.0..=x2.1 {
                values.push(k12.get(a, b).unwrap() * k21.get(b, a).unwrap());
            }
        }
        Ok(KernelBlock::new(x1, x2, values))
    }

    /// `K(x, m; x, m)` for `x` in the inclusive range.
    fn diagonal(&self, m: usize, xs: (i64, i64)) -> Result<Vec<ScaledComplex>> {
        (xs.0..=xs.1).map(|x| self.entry(x, m, x, m)).collect()
    }
}
