//! Run configuration and its precedence chain: command-line flags override
//! the two `UNRUH_QFI_*` environment variables, which override a `key=value`
//! config file, which overrides built-in defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use unruh_qfi_core::Schedule;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub fn parse_schedule_arg(s: &str) -> Result<Schedule, String> {
    Schedule::parse(s).map_err(|e| e.to_string())
}

/// Options shared by every subcommand. Each maps onto one [`RunConfig`]
/// field; unset flags fall through to the environment, the config file, and
/// finally the defaults.
#[derive(Debug, Args)]
pub struct CommonOpts {
    /// Key=value defaults file (precision, theta, dim_cap, schedule, cache,
    /// workers, output)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Convergence threshold on |ΔF| between refinements
    #[arg(long, global = true, value_name = "EPS")]
    pub precision: Option<f64>,

    /// Interferometer phase θ (the QFI itself is θ-independent)
    #[arg(long, global = true, value_name = "RAD")]
    pub theta: Option<f64>,

    /// Truncation ceiling (per mode for the dual rail)
    #[arg(long, global = true, value_name = "DIM")]
    pub dim_cap: Option<usize>,

    /// Truncation-growth policy: accelerated | unit-step
    #[arg(long, global = true, value_name = "MODE", value_parser = parse_schedule_arg)]
    pub schedule: Option<Schedule>,

    /// Result cache file, created on first use [env: UNRUH_QFI_CACHE]
    #[arg(long, global = true, value_name = "FILE")]
    pub cache: Option<PathBuf>,

    /// Run without a cache even if one is configured
    #[arg(long, global = true, conflicts_with = "cache")]
    pub no_cache: bool,

    /// Worker threads for independent sweep points [env: UNRUH_QFI_WORKERS]
    #[arg(long, global = true, value_name = "K")]
    pub workers: Option<usize>,

    /// Record format on stdout
    #[arg(long, global = true, value_enum, value_name = "FMT")]
    pub output: Option<OutputFormat>,
}

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub precision: f64,
    pub theta: f64,
    pub dim_cap: Option<usize>,
    pub schedule: Schedule,
    pub cache_path: Option<PathBuf>,
    /// None leaves the thread-pool size to the runtime.
    pub workers: Option<usize>,
    pub output: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            precision: 1e-5,
            theta: 0.4,
            dim_cap: None,
            schedule: Schedule::Accelerated,
            cache_path: None,
            workers: None,
            output: OutputFormat::Csv,
        }
    }
}

pub fn resolve(opts: &CommonOpts) -> Result<RunConfig, Failure> {
    let mut rc = RunConfig::default();

    if let Some(path) = &opts.config {
        apply_file(&mut rc, path)?;
    }

    // Environment layer: exactly two variables, both overridable by flags.
    if let Ok(v) = std::env::var("UNRUH_QFI_CACHE") {
        if !v.is_empty() {
            rc.cache_path = Some(PathBuf::from(v));
        }
    }
    if let Ok(v) = std::env::var("UNRUH_QFI_WORKERS") {
        let w: usize = v.parse().map_err(|_| {
            Failure::usage(format!("UNRUH_QFI_WORKERS must be an integer, got `{v}`"))
        })?;
        rc.workers = Some(w);
    }

    if let Some(p) = opts.precision {
        rc.precision = p;
    }
    if let Some(t) = opts.theta {
        rc.theta = t;
    }
    if let Some(d) = opts.dim_cap {
        rc.dim_cap = Some(d);
    }
    if let Some(s) = opts.schedule {
        rc.schedule = s;
    }
    if let Some(c) = &opts.cache {
        rc.cache_path = Some(c.clone());
    }
    if opts.no_cache {
        rc.cache_path = None;
    }
    if let Some(w) = opts.workers {
        rc.workers = Some(w);
    }
    if let Some(o) = opts.output {
        rc.output = o;
    }

    validate(&rc)?;
    Ok(rc)
}

fn validate(rc: &RunConfig) -> Result<(), Failure> {
    if !(rc.precision > 0.0 && rc.precision.is_finite()) {
        return Err(Failure::usage(format!(
            "precision must be positive and finite, got {}",
            rc.precision
        )));
    }
    if !rc.theta.is_finite() {
        return Err(Failure::usage(format!(
            "theta must be finite, got {}",
            rc.theta
        )));
    }
    if let Some(d) = rc.dim_cap {
        if d < 2 {
            return Err(Failure::usage(format!("dim cap must be >= 2, got {d}")));
        }
    }
    if let Some(w) = rc.workers {
        if w < 1 {
            return Err(Failure::usage("workers must be >= 1, got 0".to_string()));
        }
    }
    Ok(())
}

fn apply_file(rc: &mut RunConfig, path: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::usage(format!("cannot read config {}: {e}", path.display()))
    })?;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |msg: String| Failure::usage(format!("{}: line {}: {msg}", path.display(), i + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at(format!("expected key=value, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "precision" => {
                rc.precision = value
                    .parse()
                    .map_err(|_| at(format!("bad precision `{value}`")))?;
            }
            "theta" => {
                rc.theta = value
                    .parse()
                    .map_err(|_| at(format!("bad theta `{value}`")))?;
            }
            "dim_cap" => {
                rc.dim_cap = Some(
                    value
                        .parse()
                        .map_err(|_| at(format!("bad dim_cap `{value}`")))?,
                );
            }
            "schedule" | "schedule_mode" => {
                rc.schedule = Schedule::parse(value).map_err(|e| at(e.to_string()))?;
            }
            "cache" | "cache_path" => {
                rc.cache_path = Some(PathBuf::from(value));
            }
            "workers" => {
                rc.workers = Some(
                    value
                        .parse()
                        .map_err(|_| at(format!("bad workers `{value}`")))?,
                );
            }
            "output" => {
                rc.output = match value {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    other => return Err(at(format!("bad output `{other}` (csv or json)"))),
                };
            }
            other => return Err(at(format!("unknown config key `{other}`"))),
        }
    }
    Ok(())
}
