use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `amplitude · (1 - u)³` with `u = |z - center|² / radius²`, zero for `u >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestBump {
    pub center: Complex64,
    pub radius: f64,
    pub amplitude: f64,
}

impl TestBump {
    pub fn new(center: Complex64, radius: f64, amplitude: f64) -> Result<Self> {
        let b = Self { center, radius, amplitude };
        b.validate()?;
        Ok(b)
    }

    /// The closed support disk must sit strictly inside `ℍ₊`.
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid(format!("bump radius must be positive, got {}", self.radius)));
        }
        if !(self.amplitude.is_finite() && self.center.re.is_finite()) {
            return Err(Error::invalid("bump center and amplitude must be finite"));
        }
        if !(self.center.im - self.radius > 0.0) {
            return Err(Error::invalid(format!(
                "bump support (center {}, radius {}) leaves the upper half plane",
                self.center, self.radius
            )));
        }
        Ok(())
    }

    fn u(&self, z: Complex64) -> f64 {
        (z - self.center).norm_sqr() / (self.radius * self.radius)
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        let u = self.u(z);
        if u >= 1.0 {
            return 0.0;
        }
        self.amplitude * (1.0 - u).powi(3)
    }

    /// `(∂φ/∂Re z, ∂φ/∂Im z)`.
    pub fn gradient(&self, z: Complex64) -> [f64; 2] {
        let u = self.u(z);
        if u >= 1.0 {
            return [0.0, 0.0];
        }
        let d = z - self.center;
        let c = -6.0 * self.amplitude * (1.0 - u).powi(2) / (self.radius * self.radius);
        [c * d.re, c * d.im]
    }

    pub fn laplacian(&self, z: Complex64) -> f64 {
        let u = self.u(z);
        if u >= 1.0 {
            return 0.0;
        }
        12.0 * self.amplitude / (self.radius * self.radius) * (1.0 - u) * (3.0 * u - 1.0)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.u(z) < 1.0
    }
}

/// `∬|∇φ|²` and `-∬φΔφ`, each by a tensor Gauss-Legendre rule in polar
/// coordinates on the support disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevNorm {
    pub gradient_form: f64,
    pub laplacian_form: f64,
}

impl SobolevNorm {
    pub fn value(&self) -> f64 {
        0.5 * (self.gradient_form + self.laplacian_form)
    }

    pub fn discrepancy(&self) -> f64 {
        (self.gradient_form - self.laplacian_form).abs() / self.value().abs().max(f64::MIN_POSITIVE)
    }
}

/// Largest relative disagreement between the two forms that is accepted.
pub const SOBOLEV_TOL: f64 = 1e-6;

pub fn sobolev_norm_sq(phi: &TestBump, resolution: usize) -> Result<SobolevNorm> {
    phi.validate()?;
    if resolution < 2 {
        return Err(Error::invalid("quadrature resolution must be at least 2"));
    }
    let (nodes, weights) = gauss_legendre(resolution);
    let n_theta = 4 * resolution;
    let (mut grad, mut lap) = (0.0, 0.0);
    for (s, ws) in nodes.iter().zip(&weights) {
        // map [-1, 1] onto the radius
        let r = 0.5 * phi.radius * (s + 1.0);
        let wr = 0.5 * phi.radius * ws * r;
        for k in 0..n_theta {
            let theta = std::f64::consts::TAU * (k as f64 + 0.5) / n_theta as f64;
            let z = phi.center + Complex64::from_polar(r, theta);
            let w = wr * std::f64::consts::TAU / n_theta as f64;
            let [gx, gy] = phi.gradient(z);
            grad += w * (gx * gx + gy * gy);
            lap -= w * phi.eval(z) * phi.laplacian(z);
        }
    }
    let out = SobolevNorm { gradient_form: grad, laplacian_form: lap };
    if out.discrepancy() > SOBOLEV_TOL {
        return Err(Error::QuadratureFailure { nodes: resolution, previous: grad, last: lap });
    }
    Ok(out)
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
