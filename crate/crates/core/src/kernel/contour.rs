//! Kernel evaluation by trapezoidal quadrature on circles.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{log_p_poly, KernelEval, KernelParams, ScaledComplex};
use crate::error::{Error, Result};

/// Hard cap on nodes per circle.
pub const MAX_NODES: usize = 8192;

/// Roundoff above this fraction of `max(1, |K|)` is reported as precision loss.
const LOSS_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct ContourKernel {
    pub params: KernelParams,
}

/// One quadrature estimate in the scale `e^{shift}`.
struct Estimate {
    value: Complex64,
    abs_sum: f64,
    shift: f64,
}

impl Estimate {
    fn scaled(&self) -> ScaledComplex {
        ScaledComplex::new(self.value).scale_log(self.shift)
    }
}

fn circle(center: f64, radius: f64, n: usize) -> impl Iterator<Item = (Complex64, Complex64)> {
    // node and the weight factor dz / (2πi dθ) · (2π/n)
    (0..n).map(move |k| {
        let e = Complex64::from_polar(1.0, TAU * (k as f64 + 0.5) / n as f64);
        (center + radius * e, radius * e / n as f64)
    })
}

impl ContourKernel {
    pub fn new(params: KernelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    fn single(&self, n1: i64, m1: usize, n2: i64, m2: usize, nodes: usize) -> Estimate {
        let p = &self.params;
        let logs: Vec<(Complex64, Complex64)> = circle(0.0, p.gamma0_radius, nodes)
            .map(|(w, dw)| (log_p_poly(w, m1, p.m0) - log_p_poly(w, m2, p.m0) - (n1 - n2 + 1) as f64 * w.ln(), dw))
            .collect();
        let shift = logs.iter().map(|(l, _)| l.re).fold(f64::NEG_INFINITY, f64::max);
        let mut value = Complex64::new(0.0, 0.0);
        let mut abs_sum = 0.0;
        for (l, dw) in logs {
            let term = (l - shift).exp() * dw;
            value += term;
            abs_sum += term.norm();
        }
        Estimate { value: -value, abs_sum, shift }
    }

    fn double(&self, n1: i64, m1: usize, n2: i64, m2: usize, nodes: usize) -> Estimate {
        let p = &self.params;
        let t = p.t;
        let ws: Vec<(Complex64, Complex64)> = circle(0.0, p.gamma0_radius, nodes)
            .map(|(w, dw)| (w, t * w + log_p_poly(w, m1, p.m0) - (n1 + 1) as f64 * w.ln() + dw.ln()))
            .collect();
        let zs: Vec<(Complex64, Complex64)> = circle(p.gamma12_center, p.gamma12_radius, nodes)
            .map(|(z, dz)| (z, -t * z - log_p_poly(z, m2, p.m0) + n2 as f64 * z.ln() + dz.ln()))
            .collect();
        let sw = ws.iter().map(|(_, l)| l.re).fold(f64::NEG_INFINITY, f64::max);
        let sz = zs.iter().map(|(_, l)| l.re).fold(f64::NEG_INFINITY, f64::max);
        let a: Vec<(Complex64, Complex64)> = ws.iter().map(|&(w, l)| (w, (l - sw).exp())).collect();
        let b: Vec<(Complex64, Complex64)> = zs.iter().map(|&(z, l)| (z, (l - sz).exp())).collect();
        let mut value = Complex64::new(0.0, 0.0);
        let mut abs_sum = 0.0;
        for &(w, aw) in &a {
            let mut inner = Complex64::new(0.0, 0.0);
            let mut inner_abs = 0.0;
            for &(z, bz) in &b {
                let term = bz / (w - z);
                inner += term;
                inner_abs += term.norm();
            }
            value += aw * inner;
            abs_sum += aw.norm() * inner_abs;
        }
        Estimate { value, abs_sum, shift: sw + sz }
    }

    fn at_nodes(&self, n1: i64, m1: usize, n2: i64, m2: usize, nodes: usize) -> (ScaledComplex, f64) {
        let d = self.double(n1, m1, n2, m2, nodes);
        let mut value = d.scaled();
        let mut roundoff = f64::EPSILON * d.abs_sum * d.shift.exp();
        if m1 < m2 {
            let s = self.single(n1, m1, n2, m2, nodes);
            value = value + s.scaled();
            roundoff += f64::EPSILON * s.abs_sum * s.shift.exp();
        }
        (value, roundoff)
    }
}

impl KernelEval for ContourKernel {
    fn m0(&self) -> usize {
        self.params.m0
    }

    fn time(&self) -> f64 {
        self.params.t
    }

    fn entry(&self, x1: i64, m1: usize, x2: i64, m2: usize) -> Result<ScaledComplex> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::invalid("levels start at 1"));
        }
        let (n1, n2) = (x1 + m1 as i64, x2 + m2 as i64);
        let mut nodes = self.params.quad_nodes;
        let (mut prev, _) = self.at_nodes(n1, m1, n2, m2, nodes);
        loop {
            if nodes * 2 > MAX_NODES {
                let last = self.at_nodes(n1, m1, n2, m2, nodes).0;
                return Err(Error::QuadratureFailure { nodes, previous: prev.re(), last: last.re() });
            }
            nodes *= 2;
            let (cur, roundoff) = self.at_nodes(n1, m1, n2, m2, nodes);
            let scale = cur.abs().max(1.0);
            if roundoff > LOSS_THRESHOLD * scale {
                return Err(Error::PrecisionLoss(format!(
                    "trapezoid sum at ({x1},{m1};{x2},{m2}) carries roundoff {roundoff:e}"
                )));
            }
            let change = (cur - prev).abs();
            if change <= self.params.tol * cur.abs() || change <= 64.0 * roundoff {
                return Ok(cur);
            }
            prev = cur;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn kernel(t: f64, m0: usize) -> ContourKernel {
        ContourKernel::new(KernelParams { t, m0, ..KernelParams::default() }).unwrap()
    }

    #[test]
    fn packed_at_time_zero() {
        let k = kernel(0.0, 2);
        assert_abs_diff_eq!(k.entry(-1, 1, -1, 1).unwrap().re(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(k.entry(0, 1, 0, 1).unwrap().re(), 0.0, epsilon = 1e-10);
        for m in 1..=4usize {
            for x in -(m as i64) - 2..3 {
                let want = if x >= -(m as i64) && x < 0 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(k.entry(x, m, x, m).unwrap().re(), want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn node_doubling_is_converged() {
        let p = KernelParams { t: 5.0, m0: 3, quad_nodes: 256, ..KernelParams::default() };
        let k = ContourKernel::new(p.clone()).unwrap();
        let a = k.at_nodes(6, 4, 6, 4, 256).0;
        let b = k.at_nodes(6, 4, 6, 4, 512).0;
        assert!((a - b).abs() < 1e-10 * b.abs());
        assert!(k.entry(2, 4, 2, 4).unwrap().im().abs() < 1e-12);
    }

    #[test]
    fn rejects_overlapping_contours() {
        let p = KernelParams { gamma0_radius: 0.5, gamma12_radius: 1.1, gamma12_center: 1.5, ..KernelParams::default() };
        assert!(ContourKernel::new(p).is_err());
    }
}
