use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bump::{sobolev_norm_sq, TestBump};
use super::pairing::PairingPlan;
use super::stats::{covariance_jackknife, Summary};
use crate::dynamics::{run_until, ParticleConfig, RngStream};
use crate::error::{Error, Result};
use crate::shape::ShapeParams;

/// Model parameters of an ensemble. The horizon is `t = L·τ` and the slow
/// levels are `m <= L·μ0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleParams {
    pub scale: usize,
    pub tau: f64,
    pub mu0: f64,
    pub rate_slow: f64,
    pub rate_fast: f64,
}

impl EnsembleParams {
    pub fn new(scale: usize, tau: f64, mu0: f64) -> Self {
        Self { scale, tau, mu0, rate_slow: 1.0, rate_fast: 2.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale == 0 {
            return Err(Error::invalid("scale L must be at least 1"));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid(format!("tau must be finite and >= 0, got {}", self.tau)));
        }
        self.m0()?;
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.scale as f64 * self.tau
    }

    /// `L·μ0`, which must be a positive integer.
    pub fn m0(&self) -> Result<usize> {
        let v = self.scale as f64 * self.mu0;
        let r = v.round();
        if !(self.mu0 > 0.0) || (v - r).abs() > 1e-9 * v.max(1.0) || r < 1.0 {
            return Err(Error::invalid(format!("L·mu0 must be a positive integer, got {v}")));
        }
        Ok(r as usize)
    }

    pub fn shape(&self) -> Result<ShapeParams> {
        if (self.rate_slow, self.rate_fast) != (1.0, 2.0) {
            return Err(Error::invalid("the limit shape is only available for rates (1, 2)"));
        }
        ShapeParams::new(self.tau, self.mu0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub x: i64,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEntry {
    pub i: usize,
    pub j: usize,
    pub covariance: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingSummary {
    pub bump: TestBump,
    pub support_size: usize,
    pub sobolev_norm_sq: f64,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summaries {
    pub probes: Vec<Summary>,
    /// Upper triangle, diagonal included, in row-major order.
    pub probe_covariance: Vec<CovarianceEntry>,
    pub pairings: Vec<PairingSummary>,
}

/// Per-replica samples, indexed `[probe][replica]` and `[bump][replica]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSamples {
    pub heights: Vec<Vec<f64>>,
    pub pairings: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleRecord {
    pub params: EnsembleParams,
    pub master_seed: u64,
    pub replicas: usize,
    pub horizon: f64,
    pub levels: usize,
    pub probes: Vec<Probe>,
    pub bumps: Vec<TestBump>,
    pub summaries: Summaries,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawSamples>,
}

impl EnsembleRecord {
    pub fn probe_index(&self, p: Probe) -> Result<usize> {
        self.probes.iter().position(|q| *q == p).ok_or(Error::UnregisteredProbe { x: p.x, m: p.m })
    }

    pub fn covariance(&self, a: Probe, b: Probe) -> Result<&CovarianceEntry> {
        let (i, j) = (self.probe_index(a)?, self.probe_index(b)?);
        let (i, j) = (i.min(j), i.max(j));
        Ok(self.summaries.probe_covariance.iter().find(|e| (e.i, e.j) == (i, j)).expect("full upper triangle"))
    }

    pub fn without_raw(mut self) -> Self {
        self.raw = None;
        self
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Replicas not started by this instant are abandoned.
    pub deadline: Option<Instant>,
    /// Quadrature resolution for the Sobolev norms stored with the pairings.
    pub sobolev_resolution: Option<usize>,
}

struct Replica {
    heights: Vec<f64>,
    pairings: Vec<f64>,
}

pub fn run_ensemble(
    params: EnsembleParams,
    probes: &[Probe],
    bumps: &[TestBump],
    n: usize,
    seed: u64,
    opts: RunOptions,
) -> Result<EnsembleRecord> {
    params.validate()?;
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if let Some(p) = probes.iter().find(|p| p.m == 0) {
        return Err(Error::invalid(format!("probe ({}, 0): levels start at 1", p.x)));
    }
    let m0 = params.m0()?;
    let plans = if bumps.is_empty() {
        Vec::new()
    } else {
        let sp = params.shape()?;
        bumps.iter().map(|b| PairingPlan::new(*b, params.scale as f64, sp)).collect::<Result<Vec<_>>>()?
    };
    let levels = probes.iter().map(|p| p.m).chain(plans.iter().map(PairingPlan::max_level)).max().unwrap_or(1).max(1);
    let horizon = params.horizon();

    let one = |i: usize| -> Option<Result<Replica>> {
        if opts.deadline.is_some_and(|d| Instant::now() >= d) {
            return None;
        }
        Some((|| {
            let mut cfg = ParticleConfig::init_packed(levels, m0)?.with_rates(params.rate_slow, params.rate_fast)?;
            run_until(&mut cfg, horizon, &mut RngStream::new(seed, i as u64))?;
            let heights = probes.iter().map(|p| cfg.height(p.x, p.m) as f64).collect();
            let pairings = plans.iter().map(|pl| pl.linear_statistic(&cfg)).collect::<Result<_>>()?;
            Ok(Replica { heights, pairings })
        })())
    };
    let results: Vec<Option<Result<Replica>>> = match opts.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?
            .install(|| (0..n).into_par_iter().map(one).collect()),
        None => (0..n).into_par_iter().map(one).collect(),
    };

    let mut reps = Vec::with_capacity(n);
    for r in results.into_iter().flatten() {
        reps.push(r?);
    }
    if reps.len() < n {
        return Err(Error::PartialRun { completed: reps.len(), requested: n, reason: "deadline reached".into() });
    }

    let heights: Vec<Vec<f64>> = (0..probes.len()).map(|k| reps.iter().map(|r| r.heights[k]).collect()).collect();
    let pairings: Vec<Vec<f64>> = (0..plans.len()).map(|k| reps.iter().map(|r| r.pairings[k]).collect()).collect();
    let resolution = opts.sobolev_resolution.unwrap_or(32);
    let summaries = Summaries {
        probes: heights.iter().map(|h| Summary::of(h)).collect::<Result<_>>()?,
        probe_covariance: (0..probes.len())
            .flat_map(|i| (i..probes.len()).map(move |j| (i, j)))
            .map(|(i, j)| {
                let (covariance, stderr) = covariance_jackknife(&heights[i], &heights[j])?;
                Ok(CovarianceEntry { i, j, covariance, stderr })
            })
            .collect::<Result<_>>()?,
        pairings: plans
            .iter()
            .zip(&pairings)
            .map(|(pl, s)| {
                Ok(PairingSummary {
                    bump: pl.bump,
                    support_size: pl.support_size(),
                    sobolev_norm_sq: sobolev_norm_sq(&pl.bump, resolution)?.value(),
                    summary: Summary::of(s)?,
                })
            })
            .collect::<Result<_>>()?,
    };
    Ok(EnsembleRecord {
        params,
        master_seed: seed,
        replicas: n,
        horizon,
        levels,
        probes: probes.to_vec(),
        bumps: bumps.to_vec(),
        summaries,
        raw: Some(RawSamples { heights, pairings }),
    })
}
