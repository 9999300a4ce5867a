use std::io::Write;
use std::time::{Duration, Instant};

use clap::Args;
use kpzlab_core::fluct::{run_ensemble, RunOptions};

use super::num;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Output;

#[derive(Debug, Args)]
pub struct FluctuationsArgs {
    /// Stop starting new replicas after this many seconds; the run then fails.
    #[arg(long)]
    pub deadline_secs: Option<f64>,
}

pub fn run(cfg: &RunConfig, a: &FluctuationsArgs, out: &mut Output) -> Result<(), CliError> {
    if cfg.probes.is_empty() && cfg.bumps.is_empty() {
        return Err(CliError::usage("fluctuations needs at least one --probe or --bump"));
    }
    let deadline = match a.deadline_secs {
        Some(s) if s > 0.0 && s.is_finite() => Some(Instant::now() + Duration::from_secs_f64(s)),
        Some(s) => return Err(CliError::usage(format!("deadline must be positive, got {s}"))),
        None => None,
    };
    let opts = RunOptions { workers: None, deadline, sobolev_resolution: Some(cfg.quadrature.sobolev_resolution) };
    let rec = run_ensemble(cfg.ensemble_params(), &cfg.probes, &cfg.bumps, cfg.replicas, cfg.seed, opts)?;

    let config = toml::to_string(&cfg.to_file()).expect("serializable config");
    out.write_text("run_config.toml", &config)?;
    if cfg.emit.pairing_csv {
        let raw = rec.raw.as_ref().expect("fresh records carry samples");
        for (k, samples) in raw.pairings.iter().enumerate() {
            out.write_with(&format!("pairing_{k}.csv"), |w| {
                writeln!(w, "pairing")?;
                samples.iter().try_for_each(|v| writeln!(w, "{}", num(*v)))
            })?;
        }
    }
    let rec = if cfg.emit.keep_raw { rec } else { rec.without_raw() };
    out.write_json("record.json", &rec)
}
