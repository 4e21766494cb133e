//! `unruh-qfi` — quantum Fisher information of NOON states whose modes pass
//! through the amplification channel seen by a uniformly accelerated
//! observer.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 convergence failure,
//! 4 partial results (a sweep finished but some points hit the truncation
//! cap), 1 internal error.

mod config;
mod emit;
mod grid;
mod selftest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use unruh_qfi_core::{
    cramer_rao_bound, fit_decay, fmt_g17, optimal_n, slope_of_a, state_trace, sweep_over_n,
    sweep_over_r, Cache, ConvergenceConfig, Encoding, Error, FitResult, ModeSpec, NoonSpec,
    Squeezing, StudyConfig, SweepPoint, SWEEP_CSV_HEADER,
};

use config::{CommonOpts, RunConfig};

/// A terminal failure: message for stderr plus the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Failure::new(2, message)
    }

    pub fn convergence(message: impl Into<String>) -> Self {
        Failure::new(3, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Failure::new(1, message)
    }
}

/// Engine errors caused by the parameters the user gave map onto the usage
/// code; truncation and scan caps onto the convergence code; anything else
/// is a bug in the numerics and reports as internal.
fn from_core(e: Error) -> Failure {
    match e {
        Error::Domain(_) | Error::DimensionTooSmall { .. } | Error::InsufficientData(_) => {
            Failure::usage(e.to_string())
        }
        Error::ConvergenceFailure { .. } | Error::ScanCapReached { .. } => {
            Failure::convergence(e.to_string())
        }
        other => Failure::internal(other.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "unruh-qfi",
    version,
    about = "Quantum Fisher information of NOON states under Unruh amplification",
    after_help = "Grids: floats as lo:step:hi or a,b,c; integers as a..b or a,b,c.\n\
                  Precedence: flags > UNRUH_QFI_* environment > --config file > defaults."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Subcommand)]
enum Command {
    /// Converged QFI at one parameter point
    Qfi(QfiArgs),
    /// QFI over a grid of N or of r
    Sweep(SweepArgs),
    /// Excitation number maximizing the QFI at each squeezing value
    OptimalN(OptimalArgs),
    /// Decay fit F = N² exp(-aN + b) per squeezing, optional a(r) slope
    Fit(FitArgs),
    /// Fast internal consistency checks
    Selftest,
}

fn parse_encoding_arg(s: &str) -> Result<Encoding, String> {
    Encoding::parse(s).map_err(|e| e.to_string())
}

#[derive(clap::Args)]
struct QfiArgs {
    /// NOON encoding: single | dual
    #[arg(long, value_parser = parse_encoding_arg)]
    encoding: Encoding,

    /// Excitation number N >= 1
    #[arg(long)]
    n: u32,

    /// Channel squeezing r >= 0
    #[arg(long)]
    r: Option<f64>,

    /// Rindler mode frequency (with --accel; sets r = artanh e^{-ωπ/a})
    #[arg(long, requires = "accel", conflicts_with = "r")]
    omega: Option<f64>,

    /// Proper acceleration of the receiver (with --omega)
    #[arg(long, requires = "omega", conflicts_with = "r")]
    accel: Option<f64>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Axis {
    N,
    R,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Which parameter the grid runs over
    #[arg(long, value_enum)]
    axis: Axis,

    /// NOON encoding: single | dual
    #[arg(long, value_parser = parse_encoding_arg)]
    encoding: Encoding,

    /// N grid when --axis n (e.g. 1..12), a single N otherwise
    #[arg(long, value_name = "GRID")]
    n: String,

    /// r grid when --axis r (e.g. 0.2:0.2:1.6), a single r otherwise
    #[arg(long, value_name = "GRID")]
    r: String,
}

#[derive(clap::Args)]
struct OptimalArgs {
    /// NOON encoding: single | dual
    #[arg(long, value_parser = parse_encoding_arg)]
    encoding: Encoding,

    /// Squeezing grid, r > 0; rows come out in the order given
    #[arg(long, value_name = "GRID")]
    r: String,

    /// Largest N the maximum scan will try
    #[arg(long, default_value_t = 200)]
    scan_cap: u32,
}

#[derive(clap::Args)]
struct FitArgs {
    /// Sweep CSV to fit (header as produced by `sweep`)
    #[arg(long, value_name = "CSV")]
    input: Option<PathBuf>,

    /// NOON encoding for an inline sweep: single | dual
    #[arg(long, value_parser = parse_encoding_arg, requires_all = ["n", "r"], conflicts_with = "input")]
    encoding: Option<Encoding>,

    /// N grid for an inline sweep
    #[arg(long, value_name = "GRID", requires = "encoding")]
    n: Option<String>,

    /// r grid for an inline sweep, one fit per value
    #[arg(long, value_name = "GRID", requires = "encoding")]
    r: Option<String>,

    /// Also report the least-squares slope of a(r) over this window
    #[arg(long, value_name = "LO:HI")]
    window: Option<String>,

    /// Start the fit tail at this N instead of just past the QFI peak
    #[arg(long, value_name = "N")]
    n_min: Option<u32>,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    std::process::exit(code);
}

fn run(cli: &Cli) -> Result<i32, Failure> {
    let rc = config::resolve(&cli.common)?;
    if let Some(workers) = rc.workers {
        // Sweep points fan out over rayon's global pool; size it once,
        // before the first parallel iterator touches it.
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Failure::internal(format!("cannot size worker pool: {e}")))?;
    }
    let cache = match &rc.cache_path {
        Some(path) => Some(Cache::open(path).map_err(|e| {
            Failure::usage(format!("cannot open cache {}: {e}", path.display()))
        })?),
        None => None,
    };

    let result = match &cli.command {
        Command::Qfi(args) => cmd_qfi(args, &rc, cache.as_ref()),
        Command::Sweep(args) => cmd_sweep(args, &rc, cache.as_ref()),
        Command::OptimalN(args) => cmd_optimal_n(args, &rc, cache.as_ref()),
        Command::Fit(args) => cmd_fit(args, &rc, cache.as_ref()),
        Command::Selftest => Ok(selftest::run()),
    };

    if let Some(c) = &cache {
        for w in c.take_warnings() {
            eprintln!("warning: {w}");
        }
    }
    result
}

fn study_config(rc: &RunConfig) -> StudyConfig {
    StudyConfig {
        theta: rc.theta,
        precision: rc.precision,
        conv: ConvergenceConfig {
            schedule: rc.schedule,
            dim_cap: rc.dim_cap,
            dim0_override: None,
        },
    }
}

fn cmd_qfi(args: &QfiArgs, rc: &RunConfig, cache: Option<&Cache>) -> Result<i32, Failure> {
    let squeezing = match (args.r, args.omega, args.accel) {
        (Some(r), None, None) => Squeezing::new(r).map_err(from_core)?,
        (None, Some(omega), Some(accel)) => {
            Squeezing::from_mode(ModeSpec::new(omega, accel).map_err(from_core)?)
        }
        _ => {
            return Err(Failure::usage(
                "give either --r, or --omega together with --accel",
            ))
        }
    };
    let r = squeezing.value();
    let cfg = study_config(rc);

    let cached = cache.and_then(|c| c.get(args.encoding, args.n, r, cfg.precision, cfg.conv.schedule));
    let point = match cached {
        Some(hit) => hit,
        None => {
            let spec = NoonSpec::new(args.encoding, args.n, cfg.theta).map_err(from_core)?;
            let start = Instant::now();
            match unruh_qfi_core::qfi_converged(&spec, squeezing, cfg.precision, &cfg.conv) {
                Ok(out) => {
                    let point = SweepPoint {
                        encoding: args.encoding,
                        n: args.n,
                        r,
                        theta: cfg.theta,
                        precision: cfg.precision,
                        qfi: out.value,
                        dim_used: out.dim_used,
                        converged: true,
                        wall_time_s: start.elapsed().as_secs_f64(),
                    };
                    if let Some(c) = cache {
                        c.put(&point, cfg.conv.schedule);
                    }
                    point
                }
                Err(Error::ConvergenceFailure { cap, last, history }) => {
                    let point = SweepPoint {
                        encoding: args.encoding,
                        n: args.n,
                        r,
                        theta: cfg.theta,
                        precision: cfg.precision,
                        qfi: last,
                        dim_used: cap,
                        converged: false,
                        wall_time_s: start.elapsed().as_secs_f64(),
                    };
                    if let Some(c) = cache {
                        c.put(&point, cfg.conv.schedule);
                    }
                    eprintln!(
                        "error: |ΔF| did not reach {} within the truncation cap {cap}",
                        fmt_g17(cfg.precision)
                    );
                    eprintln!("refinement history (dim, qfi):");
                    for (d, f) in &history {
                        eprintln!("  {d:>6}  {}", fmt_g17(*f));
                    }
                    return Ok(3);
                }
                Err(e) => return Err(from_core(e)),
            }
        }
    };

    if !point.converged {
        eprintln!(
            "error: cached point is unconverged: qfi {} at truncation cap {} (rerun without the cache for the refinement history)",
            fmt_g17(point.qfi),
            point.dim_used
        );
        return Ok(3);
    }

    // Recompute the deficit from the closed-form trace rather than trusting
    // a cached copy, so warm and cold runs print identical bytes.
    let trace_deficit =
        1.0 - state_trace(args.encoding, args.n, squeezing, point.dim_used).map_err(from_core)?;
    let delta_theta = match cramer_rao_bound(point.qfi, 1) {
        Ok(d) => Some(d),
        Err(Error::UnboundedUncertainty) => None,
        Err(e) => return Err(from_core(e)),
    };
    emit::qfi_record(rc.output, &point, trace_deficit, delta_theta);
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs, rc: &RunConfig, cache: Option<&Cache>) -> Result<i32, Failure> {
    let cfg = study_config(rc);
    let points = match args.axis {
        Axis::N => {
            let mut ns = grid::parse_u32_grid(&args.n).map_err(Failure::usage)?;
            ns.sort_unstable();
            ns.dedup();
            let rs = grid::parse_f64_grid(&args.r).map_err(Failure::usage)?;
            let &[r] = rs.as_slice() else {
                return Err(Failure::usage(
                    "--axis n sweeps over N; give a single --r value",
                ));
            };
            sweep_over_n(args.encoding, r, &ns, &cfg, cache).map_err(from_core)?
        }
        Axis::R => {
            let ns = grid::parse_u32_grid(&args.n).map_err(Failure::usage)?;
            let &[n] = ns.as_slice() else {
                return Err(Failure::usage(
                    "--axis r sweeps over r; give a single --n value",
                ));
            };
            let mut rs = grid::parse_f64_grid(&args.r).map_err(Failure::usage)?;
            rs.sort_by(f64::total_cmp);
            rs.dedup();
            sweep_over_r(args.encoding, n, &rs, &cfg, cache).map_err(from_core)?
        }
    };
    emit::sweep(rc.output, &points);
    let unconverged = points.iter().filter(|p| !p.converged).count();
    if unconverged > 0 {
        eprintln!(
            "warning: {unconverged} of {} points stopped at the truncation cap; results are partial",
            points.len()
        );
        Ok(4)
    } else {
        Ok(0)
    }
}

fn cmd_optimal_n(args: &OptimalArgs, rc: &RunConfig, cache: Option<&Cache>) -> Result<i32, Failure> {
    let rs = grid::parse_f64_grid(&args.r).map_err(Failure::usage)?;
    if rs.iter().any(|&r| r == 0.0) {
        return Err(Failure::usage(
            "r = 0 is the noiseless channel: F = N² grows without bound, so no finite optimum exists",
        ));
    }
    let cfg = study_config(rc);
    let mut rows = Vec::with_capacity(rs.len());
    for &r in &rs {
        rows.push(optimal_n(args.encoding, r, &cfg, cache, args.scan_cap).map_err(from_core)?);
    }
    emit::optimal(rc.output, &rows);
    Ok(0)
}

fn cmd_fit(args: &FitArgs, rc: &RunConfig, cache: Option<&Cache>) -> Result<i32, Failure> {
    let cfg = study_config(rc);
    let groups: Vec<(f64, Vec<SweepPoint>)> = match (&args.input, args.encoding) {
        (Some(path), _) => {
            let points = read_sweep_csv(path)?;
            group_by_r(points)?
        }
        (None, Some(encoding)) => {
            // clap's `requires` guarantees --n and --r are present here.
            let mut ns = grid::parse_u32_grid(args.n.as_deref().unwrap()).map_err(Failure::usage)?;
            ns.sort_unstable();
            ns.dedup();
            let mut rs = grid::parse_f64_grid(args.r.as_deref().unwrap()).map_err(Failure::usage)?;
            rs.sort_by(f64::total_cmp);
            rs.dedup();
            let mut groups = Vec::with_capacity(rs.len());
            for &r in &rs {
                let points = sweep_over_n(encoding, r, &ns, &cfg, cache).map_err(from_core)?;
                let unconverged = points.iter().filter(|p| !p.converged).count();
                if unconverged > 0 {
                    eprintln!(
                        "warning: {unconverged} unconverged points at r = {} are excluded from the fit",
                        fmt_g17(r)
                    );
                }
                groups.push((r, points));
            }
            groups
        }
        (None, None) => {
            return Err(Failure::usage(
                "give --input CSV, or an inline sweep with --encoding, --n, and --r",
            ))
        }
    };

    let mut fits: Vec<FitResult> = Vec::with_capacity(groups.len());
    for (r, points) in &groups {
        let fit = fit_decay(points, args.n_min)
            .map_err(|e| Failure::usage(format!("fit at r = {}: {e}", fmt_g17(*r))))?;
        fits.push(fit);
    }

    let slope = match &args.window {
        Some(w) => {
            let (lo, hi) = grid::parse_window(w).map_err(Failure::usage)?;
            Some(slope_of_a(&fits, lo, hi).map_err(from_core)?)
        }
        None => None,
    };
    emit::fit(rc.output, &fits, slope.as_ref());
    Ok(0)
}

/// Reads a sweep CSV produced by `sweep` (or assembled by hand with the same
/// header). Parse failures name the offending line.
fn read_sweep_csv(path: &Path) -> Result<Vec<SweepPoint>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let at = |lineno: usize, msg: String| {
        Failure::usage(format!("{}: line {lineno}: {msg}", path.display()))
    };
    let mut points = Vec::new();
    let mut saw_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if !saw_header {
            if line != SWEEP_CSV_HEADER {
                return Err(at(i + 1, format!("expected header `{SWEEP_CSV_HEADER}`")));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let point =
            SweepPoint::from_csv_fields(&fields).map_err(|e| at(i + 1, e.to_string()))?;
        if !(point.r >= 0.0 && point.r.is_finite()) {
            return Err(at(i + 1, format!("squeezing must be finite and >= 0, got {}", point.r)));
        }
        points.push(point);
    }
    if points.is_empty() {
        return Err(Failure::usage(format!("{}: no data rows", path.display())));
    }
    Ok(points)
}

/// Splits file rows into per-squeezing groups, ascending in r. Nonnegative
/// f64 bit patterns order like the values, so the bits serve as the key.
fn group_by_r(points: Vec<SweepPoint>) -> Result<Vec<(f64, Vec<SweepPoint>)>, Failure> {
    let encoding = points[0].encoding;
    if points.iter().any(|p| p.encoding != encoding) {
        return Err(Failure::usage(
            "input mixes single- and dual-rail rows; fit them separately",
        ));
    }
    let mut by_r: BTreeMap<u64, Vec<SweepPoint>> = BTreeMap::new();
    for p in points {
        by_r.entry(p.r.to_bits()).or_default().push(p);
    }
    Ok(by_r
        .into_iter()
        .map(|(bits, group)| (f64::from_bits(bits), group))
        .collect())
}
