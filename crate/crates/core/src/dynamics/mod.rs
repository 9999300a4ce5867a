//! Exact simulation of the two-speed interlacing particle system.

mod config;
mod height;
mod rng;
mod sim;

pub use config::{ConfigSnapshot, JumpOutcome, ParticleConfig};
pub use height::HeightField;
pub use rng::RngStream;
pub use sim::{run_events, run_until, step, RunStats, StepEvent};
