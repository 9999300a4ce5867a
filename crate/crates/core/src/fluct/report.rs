use serde::{Deserialize, Serialize};

use super::ensemble::{EnsembleRecord, Probe};
use crate::error::{Error, Result};
use crate::kernel::{green_limit, r_direct, KernelEval, Window};
use crate::shape::ShapePoint;

/// Statistical tolerances used by the reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed `|sample - R|` in units of the jackknife standard error.
    pub covariance_stderr: f64,
    /// Allowed relative gap between the pairing variance and `‖φ‖²`.
    pub pairing_variance_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { covariance_stderr: 4.0, pairing_variance_rel: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub probes: [Probe; 2],
    pub sample_covariance: f64,
    pub stderr: Option<f64>,
    pub r_direct: f64,
    /// `None` when a probe lies outside the liquid region.
    pub green_limit: Option<f64>,
    pub z_score: Option<f64>,
    pub within_tolerance: bool,
    pub positive: bool,
    pub pass: bool,
}

/// Sample covariance of two registered probes against the finite-`L`
/// kernel value and the large-`L` limit.
pub fn covariance_report<K: KernelEval + ?Sized>(
    rec: &EnsembleRecord,
    a: Probe,
    b: Probe,
    kernel: &K,
    window: Option<Window>,
    tol: Tolerances,
) -> Result<CovarianceReport> {
    let entry = rec.covariance(a, b)?;
    if (kernel.time() - rec.horizon).abs() > 1e-12 * rec.horizon.max(1.0) || kernel.m0() != rec.params.m0()? {
        return Err(Error::invalid(format!(
            "kernel (t = {}, m0 = {}) does not match the ensemble (t = {}, m0 = {})",
            kernel.time(),
            kernel.m0(),
            rec.horizon,
            rec.params.m0()?
        )));
    }
    let r = r_direct(kernel, (a.x, a.m), (b.x, b.m), window)?;
    let scale = rec.params.scale as f64;
    let green = match rec.params.shape() {
        Ok(sp) => {
            let pa = ShapePoint::from_lattice(a.x, a.m, scale);
            let pb = ShapePoint::from_lattice(b.x, b.m, scale);
            match green_limit(pa, pb, sp) {
                Ok(g) => Some(g),
                Err(Error::Domain(_)) | Err(Error::Divergence) => None,
                Err(e) => return Err(e),
            }
        }
        Err(_) => None,
    };
    let z_score = entry.stderr.filter(|s| *s > 0.0).map(|s| (entry.covariance - r) / s);
    let within_tolerance = z_score.is_some_and(|z| z.abs() <= tol.covariance_stderr);
    let positive = entry.covariance > 0.0;
    Ok(CovarianceReport {
        probes: [a, b],
        sample_covariance: entry.covariance,
        stderr: entry.stderr,
        r_direct: r,
        green_limit: green,
        z_score,
        within_tolerance,
        positive,
        pass: within_tolerance && positive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingVarianceReport {
    pub bump: usize,
    pub variance: f64,
    pub stderr: Option<f64>,
    pub sobolev_norm_sq: f64,
    pub relative_gap: f64,
    pub pass: bool,
}

pub fn pairing_variance_report(rec: &EnsembleRecord, bump: usize, tol: Tolerances) -> Result<PairingVarianceReport> {
    let p = rec
        .summaries
        .pairings
        .get(bump)
        .ok_or_else(|| Error::invalid(format!("no pairing with index {bump}")))?;
    let relative_gap = (p.summary.variance - p.sobolev_norm_sq).abs() / p.sobolev_norm_sq;
    Ok(PairingVarianceReport {
        bump,
        variance: p.summary.variance,
        stderr: p.summary.variance_stderr,
        sobolev_norm_sq: p.sobolev_norm_sq,
        relative_gap,
        pass: relative_gap <= tol.pairing_variance_rel,
    })
}
