use std::path::{Path, PathBuf};

use clap::Args;
use kpzlab_core::kernel::KernelParams;
use kpzlab_core::{EnsembleParams, Probe, TestBump};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const THREADS_ENV: &str = "KPZLAB_THREADS";

/// Options shared by every subcommand. Each one overrides the matching key
/// of the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with default values for the options below.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Scale L.
    #[arg(long = "L", global = true, value_name = "INT")]
    pub scale: Option<usize>,

    /// Scaled time; the simulation horizon is L·tau.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tau: Option<f64>,

    /// Scaled separating height; levels m <= L·mu0 are slow.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu0: Option<f64>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rate_slow: Option<f64>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rate_fast: Option<f64>,

    #[arg(long, global = true)]
    pub replicas: Option<usize>,

    /// Master seed; replica i draws from the stream (seed, i).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (falls back to KPZLAB_THREADS, then to all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Probe point `x,m`; repeatable, replaces the file list.
    #[arg(long = "probe", global = true, value_name = "X,M", allow_hyphen_values = true)]
    pub probes: Vec<String>,

    /// Test bump `re,im,radius[,amplitude]`; repeatable, replaces the file list.
    #[arg(long = "bump", global = true, value_name = "RE,IM,R[,A]", allow_hyphen_values = true)]
    pub bumps: Vec<String>,

    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    #[arg(long, global = true)]
    pub quad_nodes: Option<usize>,

    #[arg(long, global = true)]
    pub gamma0_radius: Option<f64>,

    #[arg(long, global = true)]
    pub gamma12_center: Option<f64>,

    #[arg(long, global = true)]
    pub gamma12_radius: Option<f64>,

    #[arg(long, global = true)]
    pub quad_tol: Option<f64>,

    /// Radial Gauss-Legendre nodes for the Sobolev norms.
    #[arg(long, global = true)]
    pub sobolev_resolution: Option<usize>,

    /// Store per-replica samples in the ensemble record.
    #[arg(long, global = true)]
    pub keep_raw: bool,

    /// Write per-replica pairing samples as single-column CSV files.
    #[arg(long, global = true)]
    pub pairing_csv: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureFile {
    pub nodes: Option<usize>,
    pub gamma0_radius: Option<f64>,
    pub gamma12_center: Option<f64>,
    pub gamma12_radius: Option<f64>,
    pub tol: Option<f64>,
    pub sobolev_resolution: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitFile {
    pub keep_raw: Option<bool>,
    pub pairing_csv: Option<bool>,
}

/// The TOML configuration file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(rename = "L")]
    pub scale: Option<usize>,
    pub tau: Option<f64>,
    pub mu0: Option<f64>,
    pub rates: Option<[f64; 2]>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub probes: Option<Vec<[i64; 2]>>,
    pub bumps: Option<Vec<BumpSpec>>,
    pub quadrature: Option<QuadratureFile>,
    pub emit: Option<EmitFile>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub nodes: usize,
    pub gamma0_radius: f64,
    pub gamma12_center: f64,
    pub gamma12_radius: f64,
    pub tol: f64,
    pub sobolev_resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Emit {
    pub keep_raw: bool,
    pub pairing_csv: bool,
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scale: usize,
    pub tau: f64,
    pub mu0: f64,
    pub rates: (f64, f64),
    pub replicas: usize,
    pub seed: u64,
    /// `None` leaves the pool size to the runtime.
    pub workers: Option<usize>,
    pub quadrature: Quadrature,
    pub probes: Vec<Probe>,
    pub bumps: Vec<TestBump>,
    pub out_dir: PathBuf,
    pub emit: Emit,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| CliError::usage(format!("malformed {what} `{s}`"))))
        .collect()
}

fn parse_probe(s: &str) -> Result<[i64; 2], CliError> {
    match parse_list::<i64>(s, "probe")?[..] {
        [x, m] => Ok([x, m]),
        _ => Err(CliError::usage(format!("probe `{s}` must be `x,m`"))),
    }
}

fn parse_bump(s: &str) -> Result<BumpSpec, CliError> {
    match parse_list::<f64>(s, "bump")?[..] {
        [re, im, radius] => Ok(BumpSpec { center: [re, im], radius, amplitude: None }),
        [re, im, radius, a] => Ok(BumpSpec { center: [re, im], radius, amplitude: Some(a) }),
        _ => Err(CliError::usage(format!("bump `{s}` must be `re,im,radius[,amplitude]`"))),
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    /// Merges flags over the file over the built-in defaults and validates.
    /// `threads_env` is the value of `KPZLAB_THREADS`.
    pub fn resolve(args: &CommonArgs, threads_env: Option<&str>) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Self::merge(args, file, threads_env)
    }

    pub fn merge(args: &CommonArgs, file: FileConfig, threads_env: Option<&str>) -> Result<Self, CliError> {
        let q = file.quadrature.unwrap_or_default();
        let e = file.emit.unwrap_or_default();
        let kd = KernelParams::default();
        let [fs, ff] = file.rates.unwrap_or([1.0, 2.0]);

        let scale = args.scale.or(file.scale).unwrap_or(40);
        if scale < 1 {
            return Err(CliError::usage("L must be at least 1"));
        }
        let tau = positive("tau", args.tau.or(file.tau).unwrap_or(1.0))?;
        let mu0 = positive("mu0", args.mu0.or(file.mu0).unwrap_or(1.5))?;
        let rates = (
            positive("rate_slow", args.rate_slow.unwrap_or(fs))?,
            positive("rate_fast", args.rate_fast.unwrap_or(ff))?,
        );
        let replicas = args.replicas.or(file.replicas).unwrap_or(400);
        if replicas < 1 {
            return Err(CliError::usage("replicas must be at least 1"));
        }
        let env_workers = match threads_env.map(str::trim).filter(|s| !s.is_empty()) {
            Some(s) => Some(s.parse::<usize>().map_err(|_| CliError::usage(format!("{THREADS_ENV}=`{s}` is not a count")))?),
            None => None,
        };
        let workers = args.workers.or(file.workers).or(env_workers);
        if workers == Some(0) {
            return Err(CliError::usage("workers must be at least 1"));
        }

        let probe_specs = if args.probes.is_empty() {
            file.probes.unwrap_or_default()
        } else {
            args.probes.iter().map(|s| parse_probe(s)).collect::<Result<_, _>>()?
        };
        let probes = probe_specs
            .into_iter()
            .map(|[x, m]| {
                if m < 1 {
                    return Err(CliError::usage(format!("probe ({x}, {m}): levels start at 1")));
                }
                Ok(Probe { x, m: m as usize })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let bump_specs = if args.bumps.is_empty() {
            file.bumps.unwrap_or_default()
        } else {
            args.bumps.iter().map(|s| parse_bump(s)).collect::<Result<_, _>>()?
        };
        let bumps = bump_specs
            .into_iter()
            .map(|b| {
                TestBump::new(Complex64::new(b.center[0], b.center[1]), b.radius, b.amplitude.unwrap_or(1.0))
                    .map_err(|e| CliError::usage(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let quadrature = Quadrature {
            nodes: args.quad_nodes.or(q.nodes).unwrap_or(kd.quad_nodes),
            gamma0_radius: args.gamma0_radius.or(q.gamma0_radius).unwrap_or(kd.gamma0_radius),
            gamma12_center: args.gamma12_center.or(q.gamma12_center).unwrap_or(kd.gamma12_center),
            gamma12_radius: args.gamma12_radius.or(q.gamma12_radius).unwrap_or(kd.gamma12_radius),
            tol: args.quad_tol.or(q.tol).unwrap_or(kd.tol),
            sobolev_resolution: args.sobolev_resolution.or(q.sobolev_resolution).unwrap_or(32),
        };
        if quadrature.sobolev_resolution < 2 {
            return Err(CliError::usage("sobolev_resolution must be at least 2"));
        }
        let cfg = Self {
            scale,
            tau,
            mu0,
            rates,
            replicas,
            seed: args.seed.or(file.seed).unwrap_or(0),
            workers,
            quadrature,
            probes,
            bumps,
            out_dir: args.out_dir.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
            emit: Emit {
                keep_raw: args.keep_raw || e.keep_raw.unwrap_or(false),
                pairing_csv: args.pairing_csv || e.pairing_csv.unwrap_or(false),
            },
        };
        cfg.kernel_params(0.0, 1).validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn ensemble_params(&self) -> EnsembleParams {
        EnsembleParams { rate_slow: self.rates.0, rate_fast: self.rates.1, ..EnsembleParams::new(self.scale, self.tau, self.mu0) }
    }

    /// `L·mu0`, which must be an integer for anything touching the lattice.
    pub fn m0(&self) -> Result<usize, CliError> {
        self.ensemble_params().m0().map_err(|e| CliError::usage(e.to_string()))
    }

    pub fn kernel_params(&self, t: f64, m0: usize) -> KernelParams {
        let q = &self.quadrature;
        KernelParams {
            t,
            m0,
            quad_nodes: q.nodes,
            gamma0_radius: q.gamma0_radius,
            gamma12_center: q.gamma12_center,
            gamma12_radius: q.gamma12_radius,
            tol: q.tol,
        }
    }

    /// File form with every key set; feeding it back via `--config`
    /// reproduces the run.
    pub fn to_file(&self) -> FileConfig {
        let q = &self.quadrature;
        FileConfig {
            scale: Some(self.scale),
            tau: Some(self.tau),
            mu0: Some(self.mu0),
            rates: Some([self.rates.0, self.rates.1]),
            replicas: Some(self.replicas),
            seed: Some(self.seed),
            workers: None,
            out_dir: None,
            probes: Some(self.probes.iter().map(|p| [p.x, p.m as i64]).collect()),
            bumps: Some(
                self.bumps
                    .iter()
                    .map(|b| BumpSpec { center: [b.center.re, b.center.im], radius: b.radius, amplitude: Some(b.amplitude) })
                    .collect(),
            ),
            quadrature: Some(QuadratureFile {
                nodes: Some(q.nodes),
                gamma0_radius: Some(q.gamma0_radius),
                gamma12_center: Some(q.gamma12_center),
                gamma12_radius: Some(q.gamma12_radius),
                tol: Some(q.tol),
                sobolev_resolution: Some(q.sobolev_resolution),
            }),
            emit: Some(EmitFile { keep_raw: Some(self.emit.keep_raw), pairing_csv: Some(self.emit.pairing_csv) }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Cli;
    use clap::Parser;

    fn args(argv: &[&str]) -> CommonArgs {
        let mut full = vec!["kpzlab"];
        full.extend_from_slice(argv);
        full.push("shape");
        Cli::try_parse_from(full).unwrap().common
    }

    #[test]
    fn flags_populate_the_config() {
        let a = args(&["--L", "40", "--tau", "1.0", "--mu0", "1.5", "--replicas", "400", "--seed", "7"]);
        let c = RunConfig::merge(&a, FileConfig::default(), None).unwrap();
        assert_eq!((c.scale, c.tau, c.mu0, c.replicas, c.seed), (40, 1.0, 1.5, 400, 7));
        assert_eq!(c.rates, (1.0, 2.0));
        assert_eq!(c.m0().unwrap(), 60);
    }

    #[test]
    fn flags_override_the_file() {
        let file = FileConfig::parse("replicas = 100\nseed = 3\nprobes = [[0, 5]]").unwrap();
        let c = RunConfig::merge(&args(&["--replicas", "400"]), file.clone(), None).unwrap();
        assert_eq!((c.replicas, c.seed), (400, 3));
        assert_eq!(c.probes, vec![Probe { x: 0, m: 5 }]);
        let c = RunConfig::merge(&args(&["--probe", "-3,4", "--probe", "2,7"]), file, None).unwrap();
        assert_eq!(c.probes, vec![Probe { x: -3, m: 4 }, Probe { x: 2, m: 7 }]);
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        for argv in [&["--mu0", "-1"][..], &["--tau", "0"], &["--L", "0"], &["--probe", "1,0"], &["--bump", "0,0.1,0.5"]] {
            let e = RunConfig::merge(&args(argv), FileConfig::default(), None).unwrap_err();
            assert_eq!(e.kind(), "usage", "{argv:?}");
        }
        assert!(FileConfig::parse("replica = 3").is_err());
        assert!(FileConfig::parse("[quadrature]\nnode = 3").is_err());
    }

    #[test]
    fn thread_fallback_order() {
        let c = RunConfig::merge(&args(&[]), FileConfig::default(), Some("3")).unwrap();
        assert_eq!(c.workers, Some(3));
        let file = FileConfig { workers: Some(2), ..Default::default() };
        assert_eq!(RunConfig::merge(&args(&[]), file.clone(), Some("3")).unwrap().workers, Some(2));
        assert_eq!(RunConfig::merge(&args(&["--workers", "5"]), file, Some("3")).unwrap().workers, Some(5));
        assert!(RunConfig::merge(&args(&[]), FileConfig::default(), Some("many")).is_err());
    }

    #[test]
    fn resolved_config_roundtrips_through_toml() {
        let a = args(&["--L", "20", "--probe", "1,2", "--bump", "1.5,0.5,0.3", "--seed", "11", "--keep-raw"]);
        let c = RunConfig::merge(&a, FileConfig::default(), None).unwrap();
        let text = toml::to_string(&c.to_file()).unwrap();
        let back = RunConfig::merge(&CommonArgs::default(), FileConfig::parse(&text).unwrap(), None).unwrap();
        assert_eq!(back, c);
    }
}
