//! Monte Carlo ensembles, the height pairing against test functions on `ℍ₊`,
//! and the statistics comparing both with the Gaussian free field.

mod bump;
mod ensemble;
mod pairing;
mod report;
mod stats;

pub use bump::{sobolev_norm_sq, SobolevNorm, TestBump, SOBOLEV_TOL};
pub use ensemble::{
    run_ensemble, CovarianceEntry, EnsembleParams, EnsembleRecord, PairingSummary, Probe, RawSamples, RunOptions,
    Summaries,
};
pub use pairing::{pairing, PairingPlan};
pub use report::{covariance_report, pairing_variance_report, CovarianceReport, PairingVarianceReport, Tolerances};
pub use stats::{
    covariance, covariance_jackknife, gaussianity_report, mean, variance, GaussianityReport, GaussianityThresholds,
    Summary,
};
