use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use kpzlab_core::fluct::{
    covariance_report, gaussianity_report, pairing_variance_report, CovarianceReport, GaussianityReport,
    GaussianityThresholds, PairingVarianceReport, Tolerances,
};
use kpzlab_core::kernel::{mean_height_kernel, ResidueKernel};
use kpzlab_core::shape::limit_height_extended;
use kpzlab_core::{EnsembleParams, EnsembleRecord, Error, Probe, ShapePoint, TestBump};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Output;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Ensemble record written by `fluctuations`; repeatable.
    #[arg(long = "record", value_name = "FILE")]
    pub records: Vec<PathBuf>,

    /// Skip the kernel targets (mean heights and covariances).
    #[arg(long)]
    pub no_kernel: bool,

    /// Allowed |mean - kernel mean| in standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub mean_stderr: f64,

    /// Allowed |mean/L - limit height|.
    #[arg(long, default_value_t = 0.05)]
    pub limit_gap: f64,

    /// Allowed |covariance - R| in jackknife standard errors.
    #[arg(long, default_value_t = 4.0)]
    pub covariance_stderr: f64,

    /// Allowed relative gap between the pairing variance and the Sobolev norm.
    #[arg(long, default_value_t = 0.15)]
    pub pairing_variance_rel: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct ReportTolerances {
    mean_stderr: f64,
    limit_gap: f64,
    #[serde(flatten)]
    stats: Tolerances,
}

#[derive(Debug, Serialize)]
struct MeanHeightRow {
    probe: Probe,
    mean: f64,
    stderr: f64,
    kernel_mean: Option<f64>,
    z_score: Option<f64>,
    limit_height: Option<f64>,
    limit_gap: Option<f64>,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct PairingRow {
    bump: TestBump,
    #[serde(flatten)]
    variance: PairingVarianceReport,
    gaussianity: Option<GaussianityReport>,
}

#[derive(Debug, Serialize)]
struct RecordReport {
    source: String,
    params: EnsembleParams,
    master_seed: u64,
    replicas: usize,
    horizon: f64,
    notes: Vec<String>,
    mean_heights: Vec<MeanHeightRow>,
    covariances: Vec<CovarianceReport>,
    pairings: Vec<PairingRow>,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct Report {
    tolerances: ReportTolerances,
    records: Vec<RecordReport>,
    pass: bool,
}

fn load(path: &PathBuf) -> Result<EnsembleRecord, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, format!("not an ensemble record: {e}")))
}

fn mean_rows(rec: &EnsembleRecord, kernel: Option<&ResidueKernel>, tol: ReportTolerances) -> Result<Vec<MeanHeightRow>, Error> {
    let scale = rec.params.scale as f64;
    let sp = rec.params.shape().ok();
    rec.probes
        .par_iter()
        .zip(&rec.summaries.probes)
        .map(|(&probe, s)| {
            let kernel_mean = kernel.map(|k| mean_height_kernel(k, probe.x, probe.m, None)).transpose()?;
            let z_score = kernel_mean.filter(|_| s.mean_stderr > 0.0).map(|k| (s.mean - k) / s.mean_stderr);
            let limit_height =
                sp.and_then(|sp| limit_height_extended(ShapePoint::from_lattice(probe.x, probe.m, scale), sp).ok());
            let limit_gap = limit_height.map(|h| (s.mean / scale - h).abs());
            let kernel_ok = match (kernel_mean, z_score) {
                (_, Some(z)) => z.abs() <= tol.mean_stderr,
                (Some(k), None) => (s.mean - k).abs() <= 1e-8,
                (None, None) => true,
            };
            let pass = kernel_ok && limit_gap.is_none_or(|g| g <= tol.limit_gap);
            Ok(MeanHeightRow { probe, mean: s.mean, stderr: s.mean_stderr, kernel_mean, z_score, limit_height, limit_gap, pass })
        })
        .collect()
}

fn record_report(source: String, rec: &EnsembleRecord, no_kernel: bool, tol: ReportTolerances) -> Result<RecordReport, CliError> {
    let mut notes = Vec::new();
    let theory = rec.params.shape().is_ok();
    if !theory {
        notes.push(format!(
            "rates ({}, {}) differ from (1, 2): analytic targets skipped",
            rec.params.rate_slow, rec.params.rate_fast
        ));
    }
    let kernel = if theory && !no_kernel { Some(ResidueKernel::new(rec.horizon, rec.params.m0()?)?) } else { None };
    let mean_heights = mean_rows(rec, kernel.as_ref(), tol)?;

    let n = rec.probes.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let covariances = match &kernel {
        Some(k) => pairs
            .par_iter()
            .map(|&(i, j)| covariance_report(rec, rec.probes[i], rec.probes[j], k, None, tol.stats))
            .collect::<Result<Vec<_>, Error>>()?,
        None => Vec::new(),
    };

    let th = GaussianityThresholds::default();
    let mut pairings = Vec::new();
    for k in 0..rec.summaries.pairings.len() {
        let variance = pairing_variance_report(rec, k, tol.stats)?;
        let samples = rec.raw.as_ref().map(|r| &r.pairings[k]);
        let gaussianity = match samples {
            Some(s) if s.len() >= th.min_samples => Some(gaussianity_report(s, th)?),
            Some(s) => {
                notes.push(format!("pairing {k}: {} samples, Gaussianity needs {}", s.len(), th.min_samples));
                None
            }
            None => {
                notes.push(format!("pairing {k}: record has no raw samples, Gaussianity skipped"));
                None
            }
        };
        pairings.push(PairingRow { bump: rec.summaries.pairings[k].bump, variance, gaussianity });
    }
    let pass = mean_heights.iter().all(|r| r.pass)
        && covariances.iter().all(|c| c.pass)
        && pairings.iter().all(|p| p.variance.pass && p.gaussianity.as_ref().is_none_or(|g| g.pass));
    Ok(RecordReport {
        source,
        params: rec.params,
        master_seed: rec.master_seed,
        replicas: rec.replicas,
        horizon: rec.horizon,
        notes,
        mean_heights,
        covariances,
        pairings,
        pass,
    })
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.digits$}"))
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn render(report: &Report) -> String {
    let mut s = String::new();
    for r in &report.records {
        let p = &r.params;
        let _ = writeln!(s, "== {} [{}]", r.source, verdict(r.pass));
        let _ = writeln!(
            s,
            "L = {}, tau = {}, mu0 = {}, rates = ({}, {}), t = {}, replicas = {}, seed = {}",
            p.scale, p.tau, p.mu0, p.rate_slow, p.rate_fast, r.horizon, r.replicas, r.master_seed
        );
        for n in &r.notes {
            let _ = writeln!(s, "note: {n}");
        }
        if !r.mean_heights.is_empty() {
            let _ = writeln!(s, "\nmean height\n{:>8} {:>6} {:>10} {:>8} {:>10} {:>7} {:>10} {:>8}  verdict", "x", "m", "mean", "stderr", "kernel", "z", "L·limit", "gap");
            for m in &r.mean_heights {
                let _ = writeln!(
                    s,
                    "{:>8} {:>6} {:>10.4} {:>8.4} {:>10} {:>7} {:>10} {:>8}  {}",
                    m.probe.x,
                    m.probe.m,
                    m.mean,
                    m.stderr,
                    opt(m.kernel_mean, 4),
                    opt(m.z_score, 2),
                    opt(m.limit_height.map(|h| h * p.scale as f64), 4),
                    opt(m.limit_gap, 4),
                    verdict(m.pass)
                );
            }
        }
        if !r.covariances.is_empty() {
            let _ = writeln!(s, "\ncovariance\n{:>16} {:>16} {:>10} {:>8} {:>10} {:>10} {:>7}  verdict", "probe 1", "probe 2", "sample", "stderr", "R", "limit", "z");
            for c in &r.covariances {
                let [a, b] = c.probes;
                let _ = writeln!(
                    s,
                    "{:>16} {:>16} {:>10.5} {:>8} {:>10.5} {:>10} {:>7}  {}",
                    format!("({}, {})", a.x, a.m),
                    format!("({}, {})", b.x, b.m),
                    c.sample_covariance,
                    opt(c.stderr, 5),
                    c.r_direct,
                    opt(c.green_limit, 5),
                    opt(c.z_score, 2),
                    verdict(c.pass)
                );
            }
        }
        if !r.pairings.is_empty() {
            let _ = writeln!(s, "\npairing\n{:>4} {:>28} {:>10} {:>8} {:>10} {:>8} {:>22}  verdict", "k", "bump", "variance", "stderr", "norm²", "gap", "skew/kurt/cf");
            for (k, pr) in r.pairings.iter().enumerate() {
                let v = &pr.variance;
                let b = format!("({}, {}) r={} a={}", pr.bump.center.re, pr.bump.center.im, pr.bump.radius, pr.bump.amplitude);
                let g = pr.gaussianity.as_ref().map_or_else(
                    || "-".to_string(),
                    |g| format!("{:.3}/{:.3}/{:.3} {}", g.skewness, g.excess_kurtosis, g.char_sup, verdict(g.pass)),
                );
                let _ = writeln!(
                    s,
                    "{:>4} {:>28} {:>10.4} {:>8} {:>10.4} {:>8.4} {:>22}  {}",
                    k,
                    b,
                    v.variance,
                    opt(v.stderr, 4),
                    v.sobolev_norm_sq,
                    v.relative_gap,
                    g,
                    verdict(v.pass)
                );
            }
        }
        s.push('\n');
    }
    let _ = writeln!(s, "overall: {}", verdict(report.pass));
    s
}

pub fn run(_cfg: &RunConfig, a: &ReportArgs, out: &mut Output) -> Result<(), CliError> {
    if a.records.is_empty() {
        return Err(CliError::usage("report needs at least one --record"));
    }
    let tol = ReportTolerances {
        mean_stderr: a.mean_stderr,
        limit_gap: a.limit_gap,
        stats: Tolerances { covariance_stderr: a.covariance_stderr, pairing_variance_rel: a.pairing_variance_rel },
    };
    let mut records = Vec::new();
    for path in &a.records {
        let rec = load(path)?;
        records.push(record_report(path.display().to_string(), &rec, a.no_kernel, tol)?);
    }
    let pass = records.iter().all(|r| r.pass);
    let report = Report { tolerances: tol, records, pass };
    out.write_json("report.json", &report)?;
    out.write_text("report.txt", &render(&report))
}
