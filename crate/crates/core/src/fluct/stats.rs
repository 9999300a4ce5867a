use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn variance(xs: &[f64]) -> f64 {
    covariance(xs, xs)
}

/// Sample covariance with its jackknife standard error. The leave-one-out
/// estimates are updated from the full centered sums in one pass.
pub fn covariance_jackknife(xs: &[f64], ys: &[f64]) -> Result<(f64, Option<f64>)> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::invalid("sample lengths differ"));
    }
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let cov = covariance(xs, ys);
    if n < 3 {
        return Ok((cov, None));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let nf = n as f64;
    let s = cov * (nf - 1.0);
    let loo: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (s - nf / (nf - 1.0) * (x - mx) * (y - my)) / (nf - 2.0)).collect();
    let m = mean(&loo);
    let se = ((nf - 1.0) / nf * loo.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sqrt();
    Ok((cov, Some(se)))
}

/// Mean, unbiased variance and their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub mean_stderr: f64,
    pub variance: f64,
    pub variance_stderr: Option<f64>,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Result<Self> {
        let (variance, variance_stderr) = covariance_jackknife(xs, xs)?;
        Ok(Self { mean: mean(xs), mean_stderr: (variance / xs.len() as f64).sqrt(), variance, variance_stderr })
    }
}

/// Pass thresholds for [`gaussianity_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianityThresholds {
    pub skew: f64,
    pub excess_kurtosis: f64,
    pub char_sup: f64,
    pub min_samples: usize,
}

impl Default for GaussianityThresholds {
    fn default() -> Self {
        Self { skew: 0.15, excess_kurtosis: 0.25, char_sup: 0.05, min_samples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianityReport {
    pub samples: usize,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// `sup |E e^{ity} - e^{-t²/2}|` over `t ∈ [-3, 3]` for standardized `y`.
    pub char_sup: f64,
    pub thresholds: GaussianityThresholds,
    pub pass: bool,
}

const CHAR_GRID: usize = 601;

pub fn gaussianity_report(samples: &[f64], th: GaussianityThresholds) -> Result<GaussianityReport> {
    let n = samples.len();
    if n < th.min_samples.max(3) {
        return Err(Error::TooFewSamples { needed: th.min_samples.max(3), got: n });
    }
    let m = mean(samples);
    let nf = n as f64;
    let central = |k: i32| samples.iter().map(|x| (x - m).powi(k)).sum::<f64>() / nf;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    if !(m2 > 0.0) {
        return Err(Error::Numerical("samples have zero variance".into()));
    }
    let skewness = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    let s = variance(samples).sqrt();
    let y: Vec<f64> = samples.iter().map(|x| (x - m) / s).collect();
    let mut char_sup: f64 = 0.0;
    for k in 0..CHAR_GRID {
        let t = -3.0 + 6.0 * k as f64 / (CHAR_GRID - 1) as f64;
        let ecf = y.iter().map(|v| Complex64::from_polar(1.0, t * v)).sum::<Complex64>() / nf;
        char_sup = char_sup.max((ecf - (-0.5 * t * t).exp()).norm());
    }
    let pass = skewness.abs() <= th.skew && excess_kurtosis.abs() <= th.excess_kurtosis && char_sup <= th.char_sup;
    Ok(GaussianityReport { samples: n, skewness, excess_kurtosis, char_sup, thresholds: th, pass })
}
