use std::fmt;
use std::path::Path;

use serde_json::json;

/// Failure of a subcommand, printed as JSON on stderr.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io { path: String, message: String },
    Compute(kpzlab_core::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Compute(_) => "compute",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Compute(_) => 4,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        match self {
            CliError::Io { path, .. } => body["path"] = json!(path),
            CliError::Compute(e) => body["variant"] = json!(variant(e)),
            CliError::Usage(_) => {}
        }
        json!({ "error": body })
    }
}

fn variant(e: &kpzlab_core::Error) -> &'static str {
    use kpzlab_core::Error::*;
    match e {
        InvalidParameter(_) => "invalid_parameter",
        Index { .. } => "index",
        Singularity(_) => "singularity",
        Domain(_) => "domain",
        BranchCrossing { .. } => "branch_crossing",
        Pole(_) => "pole",
        QuadratureFailure { .. } => "quadrature_failure",
        PrecisionLoss(_) => "precision_loss",
        Truncation { .. } => "truncation",
        Divergence => "divergence",
        IncompleteField { .. } => "incomplete_field",
        TooFewSamples { .. } => "too_few_samples",
        UnregisteredProbe { .. } => "unregistered_probe",
        PartialRun { .. } => "partial_run",
        Numerical(_) => "numerical",
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Io { path, message } => write!(f, "{path}: {message}"),
            CliError::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl From<kpzlab_core::Error> for CliError {
    fn from(e: kpzlab_core::Error) -> Self {
        match e {
            kpzlab_core::Error::InvalidParameter(m) => CliError::Usage(m),
            e => CliError::Compute(e),
        }
    }
}
