//! Shared fixtures for the kpzlab benchmarks.

use kpzlab_core::dynamics::run_until;
use kpzlab_core::{ParticleConfig, RngStream, ShapeParams, TestBump};
use num_complex::Complex64;

/// Parameters used throughout: `τ = 1`, `μ0 = 1.5`.
pub fn shape_params() -> ShapeParams {
    ShapeParams::new(1.0, 1.5).expect("valid parameters")
}

pub fn bump() -> TestBump {
    TestBump::new(Complex64::new(1.5, 0.5), 0.3, 1.0).expect("valid bump")
}

/// A configuration evolved to `t = L` from the packed start.
pub fn evolved(scale: usize, levels: usize, seed: u64) -> ParticleConfig {
    let m0 = scale * 3 / 2;
    let mut cfg = ParticleConfig::init_packed(levels, m0).expect("valid levels");
    run_until(&mut cfg, scale as f64, &mut RngStream::new(seed, 0)).expect("finite horizon");
    cfg
}
