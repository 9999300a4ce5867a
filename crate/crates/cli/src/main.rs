//! `kpzlab`: command-line front end for the growth-model laboratory.

mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand};

use commands::{fluctuations, kernel, report, shape, simulate};
use config::{CommonArgs, RunConfig, THREADS_ENV};
use error::CliError;
use output::Output;

#[derive(Debug, Parser)]
#[command(name = "kpzlab", version, about = "Two-speed interlacing particle growth: simulation, limit shape, kernel and fluctuations")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one replica and write its configuration snapshot and height field.
    Simulate(simulate::SimulateArgs),
    /// Tabulate the limit shape on a grid and the frozen boundary.
    Shape(shape::ShapeArgs),
    /// Tabulate kernel entries, identity residuals or the covariance kernel.
    Kernel(kernel::KernelArgs),
    /// Run a Monte Carlo ensemble and write its record.
    Fluctuations(fluctuations::FluctuationsArgs),
    /// Compare stored ensemble records with the analytic targets.
    Report(report::ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Shape(_) => "shape",
            Command::Kernel(_) => "kernel",
            Command::Fluctuations(_) => "fluctuations",
            Command::Report(_) => "report",
        }
    }
}

fn dispatch(cli: Cli) -> Result<serde_json::Value, CliError> {
    let cfg = RunConfig::resolve(&cli.common, std::env::var(THREADS_ENV).ok().as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
    let mut out = Output::new(&cfg.out_dir)?;
    let name = cli.command.name();
    pool.install(|| match &cli.command {
        Command::Simulate(a) => simulate::run(&cfg, a, &mut out),
        Command::Shape(a) => shape::run(&cfg, a, &mut out),
        Command::Kernel(a) => kernel::run(&cfg, a, &mut out),
        Command::Fluctuations(a) => fluctuations::run(&cfg, a, &mut out),
        Command::Report(a) => report::run(&cfg, a, &mut out),
    })?;
    out.finish(name, pool.current_num_threads())
}

fn fail(e: &CliError) -> ! {
    eprintln!("{}", e.to_json());
    std::process::exit(e.exit_code());
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            fail(&CliError::usage(first.trim_start_matches("error: ")))
        }
    };
    match dispatch(cli) {
        Ok(summary) => println!("{summary}"),
        Err(e) => fail(&e),
    }
}
