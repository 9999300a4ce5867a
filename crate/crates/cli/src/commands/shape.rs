use std::io::Write;

use clap::Args;
use kpzlab_core::shape::{
    boundary_curve, density, jacobian, limit_height_extended, omega, row_extent, surface_normal,
};
use kpzlab_core::{Branch, ShapeParams, ShapePoint};
use rayon::prelude::*;

use super::{cell, num};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Output;

#[derive(Debug, Args)]
pub struct ShapeArgs {
    /// Grid points per axis.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,

    #[arg(long, allow_negative_numbers = true)]
    pub xi_min: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    pub xi_max: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    pub mu_min: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    pub mu_max: Option<f64>,

    /// Samples of the real Ω along the frozen boundary.
    #[arg(long, default_value_t = 400)]
    pub boundary_samples: usize,
}

/// Default box: `μ ∈ [0, 2·max(τ, μ0)]` and the `ξ` range of the liquid
/// region over those rows, padded by 5%.
fn default_box(sp: ShapeParams) -> (f64, f64, f64, f64) {
    let mu_max = 2.0 * sp.tau.max(sp.mu0);
    let mut hi: f64 = sp.tau;
    for i in 1..=64 {
        if let Ok((_, r)) = row_extent(mu_max * i as f64 / 64.0, sp) {
            hi = hi.max(r);
        }
    }
    let lo = -mu_max;
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad, 0.0, mu_max)
}

fn row(p: ShapePoint, sp: ShapeParams) -> String {
    let h = limit_height_extended(p, sp).ok();
    match omega(p, sp) {
        Some(w) => {
            let n = surface_normal(p, sp).ok();
            format!(
                "{},{},{},{},{},{},{},{},{}",
                num(p.xi),
                num(p.mu),
                num(w.re),
                num(w.im),
                cell(h),
                cell(density(p, sp).ok()),
                cell(n.map(|n| n[0])),
                cell(n.map(|n| n[1])),
                cell(jacobian(p, sp).ok()),
            )
        }
        None => format!("{},{},,,{},,,,", num(p.xi), num(p.mu), cell(h)),
    }
}

pub fn run(cfg: &RunConfig, a: &ShapeArgs, out: &mut Output) -> Result<(), CliError> {
    if a.grid < 2 {
        return Err(CliError::usage("grid needs at least 2 points per axis"));
    }
    let sp = ShapeParams::new(cfg.tau, cfg.mu0)?;
    let (x0, x1, m0, m1) = default_box(sp);
    let (x0, x1) = (a.xi_min.unwrap_or(x0), a.xi_max.unwrap_or(x1));
    let (m0, m1) = (a.mu_min.unwrap_or(m0), a.mu_max.unwrap_or(m1));
    if !(x0 < x1 && m0 < m1) {
        return Err(CliError::usage(format!("empty box [{x0}, {x1}] x [{m0}, {m1}]")));
    }
    let n = a.grid;
    // cell centres keep the grid off μ = 0
    let at = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
    let lines: Vec<String> = (0..n * n)
        .into_par_iter()
        .map(|k| row(ShapePoint::new(at(x0, x1, k % n), at(m0, m1, k / n)), sp))
        .collect();
    out.write_with("shape.csv", |w| {
        writeln!(w, "xi,mu,re_omega,im_omega,height,density,n1,n2,jacobian")?;
        lines.iter().try_for_each(|l| writeln!(w, "{l}"))
    })?;
    let curve = boundary_curve(sp, a.boundary_samples)?;
    out.write_with("boundary.csv", |w| {
        writeln!(w, "omega_real,xi,mu,branch")?;
        for b in &curve {
            let branch = match b.branch {
                Branch::Lower => "lower",
                Branch::Upper => "upper",
            };
            writeln!(w, "{},{},{},{branch}", num(b.omega_real), num(b.point.xi), num(b.point.mu))?;
        }
        Ok(())
    })
}
