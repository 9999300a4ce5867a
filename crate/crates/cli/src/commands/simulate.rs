use clap::Args;
use kpzlab_core::dynamics::run_until;
use kpzlab_core::{HeightField, ParticleConfig, RngStream};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Output;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation time; defaults to L·tau.
    #[arg(long, allow_negative_numbers = true)]
    pub horizon: Option<f64>,

    /// Number of simulated levels; defaults to 2L.
    #[arg(long)]
    pub levels: Option<usize>,

    /// Replica index selecting the random stream.
    #[arg(long, default_value_t = 0)]
    pub replica: u64,
}

pub fn run(cfg: &RunConfig, a: &SimulateArgs, out: &mut Output) -> Result<(), CliError> {
    let horizon = a.horizon.unwrap_or(cfg.scale as f64 * cfg.tau);
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(CliError::usage(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    let levels = a.levels.unwrap_or(2 * cfg.scale);
    let mut pc = ParticleConfig::init_packed(levels, cfg.m0()?)?.with_rates(cfg.rates.0, cfg.rates.1)?;
    run_until(&mut pc, horizon, &mut RngStream::new(cfg.seed, a.replica))?;
    out.write_json_compact("snapshot.json", &pc)?;
    let field = HeightField::covering(&pc);
    out.write_with("heights.csv", |w| field.write_csv(w))
}
