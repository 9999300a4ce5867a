use std::io::Write;

use clap::{Args, ValueEnum};
use kpzlab_core::kernel::{complement_residual, green_limit, r_direct, ContourKernel, KernelEval, ResidueKernel};
use kpzlab_core::{Error, ShapeParams, ShapePoint};
use rayon::prelude::*;

use super::{cell, num};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Output;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    /// Exact residue sums in multiprecision.
    Residue,
    /// Trapezoidal quadrature of the contour integrals.
    Contour,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value_t = Route::Residue)]
    pub route: Route,

    /// Kernel time; defaults to L·tau.
    #[arg(long)]
    pub t: Option<f64>,

    /// Last slow level; defaults to L·mu0.
    #[arg(long)]
    pub m0: Option<usize>,

    #[arg(long, default_value_t = 1)]
    pub m1: usize,

    /// Defaults to `m1`.
    #[arg(long)]
    pub m2: Option<usize>,

    /// Range `lo:hi` (or a single value) of `x1`; defaults to `-m1:m1`.
    #[arg(long, allow_hyphen_values = true)]
    pub x1: Option<String>,

    /// Range of `x2`; defaults to `-m2:m2`.
    #[arg(long, allow_hyphen_values = true)]
    pub x2: Option<String>,

    /// Tabulate `|Σ K·K - δ K|` for every `x1` instead of kernel entries.
    #[arg(long, conflicts_with = "covariance")]
    pub identity: bool,

    /// Tabulate `R` and its large-L limit over the configured probe pairs.
    #[arg(long)]
    pub covariance: bool,
}

fn parse_range(s: Option<&str>, m: usize) -> Result<(i64, i64), CliError> {
    let Some(s) = s else { return Ok((-(m as i64), m as i64)) };
    let bad = || CliError::usage(format!("malformed range `{s}`, expected `lo:hi`"));
    let (lo, hi) = match s.split_once(':') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if hi < lo {
        return Err(CliError::usage(format!("empty range `{s}`")));
    }
    Ok((lo, hi))
}

fn levels_ok(m: usize) -> Result<usize, CliError> {
    if m == 0 {
        return Err(CliError::usage("levels start at 1"));
    }
    Ok(m)
}

pub fn run(cfg: &RunConfig, a: &KernelArgs, out: &mut Output) -> Result<(), CliError> {
    let t = a.t.unwrap_or(cfg.scale as f64 * cfg.tau);
    let m0 = match a.m0 {
        Some(m) => levels_ok(m)?,
        None => cfg.m0()?,
    };
    let kernel: Box<dyn KernelEval> = match a.route {
        Route::Residue => Box::new(ResidueKernel::new(t, m0)?),
        Route::Contour => Box::new(ContourKernel::new(cfg.kernel_params(t, m0))?),
    };
    let k = kernel.as_ref();
    let m1 = levels_ok(a.m1)?;
    let m2 = levels_ok(a.m2.unwrap_or(m1))?;
    let x1 = parse_range(a.x1.as_deref(), m1)?;

    if a.covariance {
        return covariance(cfg, k, t, m0, out);
    }
    if a.identity {
        let rows: Vec<(i64, f64)> = (x1.0..=x1.1)
            .into_par_iter()
            .map(|x| Ok((x, complement_residual(k, x, m1, m2, None)?)))
            .collect::<Result<_, Error>>()?;
        return out.write_with("identity.csv", |w| {
            writeln!(w, "x1,m1,m2,residual")?;
            rows.iter().try_for_each(|(x, r)| writeln!(w, "{x},{m1},{m2},{}", num(*r)))
        });
    }
    let x2 = parse_range(a.x2.as_deref(), m2)?;
    let pairs: Vec<(i64, i64)> = (x1.0..=x1.1).flat_map(|p| (x2.0..=x2.1).map(move |q| (p, q))).collect();
    let values = pairs.par_iter().map(|&(p, q)| k.entry(p, m1, q, m2)).collect::<Result<Vec<_>, Error>>()?;
    out.write_with("kernel.csv", |w| {
        writeln!(w, "x1,m1,x2,m2,re_K,im_K,exp10")?;
        for (&(p, q), v) in pairs.iter().zip(&values) {
            writeln!(w, "{p},{m1},{q},{m2},{},{},{}", num(v.mantissa.re), num(v.mantissa.im), v.exp10)?;
        }
        Ok(())
    })
}

fn covariance(cfg: &RunConfig, k: &dyn KernelEval, t: f64, m0: usize, out: &mut Output) -> Result<(), CliError> {
    if cfg.probes.is_empty() {
        return Err(CliError::usage("--covariance needs at least one --probe"));
    }
    let n = cfg.probes.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    // the limit applies only when the kernel is the one of the configured ensemble
    let scale = cfg.scale as f64;
    let matches = (t - scale * cfg.tau).abs() <= 1e-12 * t.max(1.0)
        && Some(m0) == cfg.m0().ok()
        && cfg.rates == (1.0, 2.0);
    let sp = ShapeParams::new(cfg.tau, cfg.mu0)?;
    let rows = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (p, q) = (cfg.probes[i], cfg.probes[j]);
            let r = r_direct(k, (p.x, p.m), (q.x, q.m), None)?;
            let g = matches
                .then(|| green_limit(ShapePoint::from_lattice(p.x, p.m, scale), ShapePoint::from_lattice(q.x, q.m, scale), sp).ok())
                .flatten();
            Ok((p, q, r, g))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    out.write_with("covariance.csv", |w| {
        writeln!(w, "y1,m1,y2,m2,R,green_limit")?;
        for (p, q, r, g) in &rows {
            writeln!(w, "{},{},{},{},{},{}", p.x, p.m, q.x, q.m, num(*r), cell(*g))?;
        }
        Ok(())
    })
}
