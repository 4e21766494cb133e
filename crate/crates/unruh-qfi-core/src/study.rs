//! Parameter studies over the converged QFI: sweeps, the optimal excitation
//! number, the exponential-decay fit `F = N² e^{-aN+b}`, and the growth rate
//! of the decay coefficient with squeezing.

use std::time::Instant;

use crate::cache::Cache;
use crate::error::{Error, Result};
use crate::qfi::{qfi_converged, ConvergenceConfig};
use crate::types::{fmt_g17, Encoding, NoonSpec, Squeezing};

/// Shared knobs for every study operation.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub theta: f64,
    pub precision: f64,
    pub conv: ConvergenceConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            theta: 0.4,
            precision: 1e-5,
            conv: ConvergenceConfig::default(),
        }
    }
}

pub const SWEEP_CSV_HEADER: &str =
    "encoding,n,r,theta,precision,qfi,dim_used,converged,wall_time_s";

/// One evaluated parameter point. `converged: false` marks a point that hit
/// the truncation cap; its `qfi` is the last evaluation and `dim_used` the
/// cap.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub encoding: Encoding,
    pub n: u32,
    pub r: f64,
    pub theta: f64,
    pub precision: f64,
    pub qfi: f64,
    pub dim_used: usize,
    pub converged: bool,
    pub wall_time_s: f64,
}

impl SweepPoint {
    /// The CSV row under `SWEEP_CSV_HEADER`; floats carry 17 significant
    /// digits so the row round-trips bit-exactly.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.encoding.label(),
            self.n,
            fmt_g17(self.r),
            fmt_g17(self.theta),
            fmt_g17(self.precision),
            fmt_g17(self.qfi),
            self.dim_used,
            self.converged,
            fmt_g17(self.wall_time_s),
        )
    }

    pub fn from_csv_fields(fields: &[&str]) -> Result<Self> {
        if fields.len() != 9 {
            return Err(Error::Domain(format!(
                "expected 9 fields, found {}",
                fields.len()
            )));
        }
        fn num<T: std::str::FromStr>(name: &str, raw: &str) -> Result<T> {
            raw.trim()
                .parse()
                .map_err(|_| Error::Domain(format!("field '{name}': cannot parse '{raw}'")))
        }
        let converged = match fields[7].trim() {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Domain(format!(
                    "field 'converged': expected true/false, found '{other}'"
                )))
            }
        };
        Ok(SweepPoint {
            encoding: Encoding::parse(fields[0].trim())?,
            n: num("n", fields[1])?,
            r: num("r", fields[2])?,
            theta: num("theta", fields[3])?,
            precision: num("precision", fields[4])?,
            qfi: num("qfi", fields[5])?,
            dim_used: num("dim_used", fields[6])?,
            converged,
            wall_time_s: num("wall_time_s", fields[8])?,
        })
    }
}

/// Converged QFI at one parameter point, consulting and feeding the cache
/// when one is supplied. A truncation-cap failure is recorded in the point
/// (`converged: false`), not raised; any other engine error is a bug and
/// propagates.
pub fn compute_point(
    encoding: Encoding,
    n: u32,
    r: f64,
    cfg: &StudyConfig,
    cache: Option<&Cache>,
) -> Result<SweepPoint> {
    let squeezing = Squeezing::new(r)?;
    if let Some(c) = cache {
        if let Some(hit) = c.get(encoding, n, r, cfg.precision, cfg.conv.schedule) {
            return Ok(hit);
        }
    }
    let spec = NoonSpec::new(encoding, n, cfg.theta)?;
    let start = Instant::now();
    let outcome = qfi_converged(&spec, squeezing, cfg.precision, &cfg.conv);
    let wall_time_s = start.elapsed().as_secs_f64();
    let point = match outcome {
        Ok(out) => SweepPoint {
            encoding,
            n,
            r,
            theta: cfg.theta,
            precision: cfg.precision,
            qfi: out.value,
            dim_used: out.dim_used,
            converged: true,
            wall_time_s,
        },
        Err(Error::ConvergenceFailure { cap, last, .. }) => SweepPoint {
            encoding,
            n,
            r,
            theta: cfg.theta,
            precision: cfg.precision,
            qfi: last,
            dim_used: cap,
            converged: false,
            wall_time_s,
        },
        Err(e) => return Err(e),
    };
    if let Some(c) = cache {
        c.put(&point, cfg.conv.schedule);
    }
    Ok(point)
}

#[cfg(feature = "parallel")]
fn map_points<U: Sync>(
    items: &[U],
    f: impl Fn(&U) -> Result<SweepPoint> + Send + Sync,
) -> Result<Vec<SweepPoint>> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_points<U>(
    items: &[U],
    f: impl Fn(&U) -> Result<SweepPoint>,
) -> Result<Vec<SweepPoint>> {
    items.iter().map(f).collect()
}

fn check_ascending<T: PartialOrd + std::fmt::Debug>(label: &str, values: &[T]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Domain(format!("{label} grid is empty")));
    }
    for pair in values.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Domain(format!(
                "{label} grid must be strictly ascending, found {:?} after {:?}",
                pair[1], pair[0]
            )));
        }
    }
    Ok(())
}

/// Converged QFI over an ascending grid of excitation numbers at fixed r.
/// Points are independent and may run in parallel; the returned order always
/// matches the grid.
pub fn sweep_over_n(
    encoding: Encoding,
    r: f64,
    ns: &[u32],
    cfg: &StudyConfig,
    cache: Option<&Cache>,
) -> Result<Vec<SweepPoint>> {
    check_ascending("N", ns)?;
    map_points(ns, |&n| compute_point(encoding, n, r, cfg, cache))
}

/// Converged QFI over an ascending grid of squeezing values at fixed N.
pub fn sweep_over_r(
    encoding: Encoding,
    n: u32,
    rs: &[f64],
    cfg: &StudyConfig,
    cache: Option<&Cache>,
) -> Result<Vec<SweepPoint>> {
    check_ascending("r", rs)?;
    map_points(rs, |&r| compute_point(encoding, n, r, cfg, cache))
}

/// The excitation number that maximizes the converged QFI at fixed r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalN {
    pub r: f64,
    pub n_star: u32,
    pub f_star: f64,
    /// Last N evaluated before the scan stopped.
    pub scan_upper: u32,
}

/// Scans N = 1, 2, … for the QFI maximum at fixed r > 0, stopping once three
/// consecutive decreases land beyond the running maximum. Ties keep the
/// smaller N. Reaching `scan_cap` without that pattern is an error carrying
/// the best point seen.
pub fn optimal_n(
    encoding: Encoding,
    r: f64,
    cfg: &StudyConfig,
    cache: Option<&Cache>,
    scan_cap: u32,
) -> Result<OptimalN> {
    let squeezing = Squeezing::new(r)?;
    if squeezing.is_zero() {
        return Err(Error::Domain(
            "optimal N is unbounded at r = 0 (F = N² grows without limit)".into(),
        ));
    }
    if scan_cap < 1 {
        return Err(Error::Domain("scan cap must be >= 1".into()));
    }
    let mut n_star = 0u32;
    let mut f_star = f64::NEG_INFINITY;
    let mut prev = f64::NEG_INFINITY;
    let mut decreases = 0u32;
    for n in 1..=scan_cap {
        let point = compute_point(encoding, n, r, cfg, cache)?;
        if !point.converged {
            return Err(Error::ConvergenceFailure {
                cap: point.dim_used,
                last: point.qfi,
                history: Vec::new(),
            });
        }
        if point.qfi > f_star {
            n_star = n;
            f_star = point.qfi;
            decreases = 0;
        } else if point.qfi < prev {
            decreases += 1;
        } else {
            decreases = 0;
        }
        if decreases >= 3 && n >= n_star + 3 {
            return Ok(OptimalN {
                r,
                n_star,
                f_star,
                scan_upper: n,
            });
        }
        prev = point.qfi;
    }
    Err(Error::ScanCapReached {
        cap: scan_cap,
        n_star,
        f_star,
    })
}

pub const FIT_CSV_HEADER: &str = "r,a_coeff,b_coeff,residual_sum,n_min,n_max";

/// Least-squares parameters of `F(N) = N² e^{-aN+b}` on the post-peak tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub r: f64,
    pub a_coeff: f64,
    pub b_coeff: f64,
    /// Sum of squared residuals of `ln(F/N²)` against the fitted line.
    pub residual_sum: f64,
    pub n_min: u32,
    pub n_max: u32,
}

impl FitResult {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            fmt_g17(self.r),
            fmt_g17(self.a_coeff),
            fmt_g17(self.b_coeff),
            fmt_g17(self.residual_sum),
            self.n_min,
            self.n_max,
        )
    }

    /// Model value `N² e^{-aN+b}` at a given N.
    pub fn predicted(&self, n: u32) -> f64 {
        let nf = n as f64;
        nf * nf * (-self.a_coeff * nf + self.b_coeff).exp()
    }
}

/// Unweighted least squares of y against x. Returns (slope, intercept, rss).
fn linear_lsq(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - xbar) * (x - xbar);
        sxy += (x - xbar) * (y - ybar);
    }
    if sxx == 0.0 {
        return Err(Error::Domain(
            "least squares needs at least two distinct abscissae".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    Ok((slope, intercept, rss))
}

/// Fits `ln(F/N²) = -aN + b` over the tail of a fixed-r sweep.
///
/// Only converged points with F > 0 enter. The tail starts at `n_min` when
/// given, otherwise just past the QFI peak (`n_star + 1`); at least three
/// points must survive. The fit is linear least squares in log space, so
/// `residual_sum` is log-space RSS.
pub fn fit_decay(points: &[SweepPoint], n_min: Option<u32>) -> Result<FitResult> {
    let usable: Vec<&SweepPoint> = points.iter().filter(|p| p.converged && p.qfi > 0.0).collect();
    let first = usable
        .first()
        .ok_or_else(|| Error::InsufficientData("no converged positive-QFI points".into()))?;
    let r = first.r;
    if usable.iter().any(|p| p.r != r) {
        return Err(Error::Domain(
            "decay fit requires all points at one squeezing value".into(),
        ));
    }
    let n_star = usable
        .iter()
        .fold((0u32, f64::NEG_INFINITY), |best, p| {
            if p.qfi > best.1 {
                (p.n, p.qfi)
            } else {
                best
            }
        })
        .0;
    let n_lo = n_min.unwrap_or(n_star + 1);
    let mut tail: Vec<&SweepPoint> = usable.into_iter().filter(|p| p.n >= n_lo).collect();
    tail.sort_by_key(|p| p.n);
    if tail.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs >= 3 tail points with N >= {n_lo}, found {}",
            tail.len()
        )));
    }
    let xs: Vec<f64> = tail.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = tail
        .iter()
        .map(|p| (p.qfi / (p.n as f64 * p.n as f64)).ln())
        .collect();
    let (slope, intercept, rss) = linear_lsq(&xs, &ys)?;
    Ok(FitResult {
        r,
        a_coeff: -slope,
        b_coeff: intercept,
        residual_sum: rss,
        n_min: tail.first().unwrap().n,
        n_max: tail.last().unwrap().n,
    })
}

/// Gradient of the decay coefficient a(r) across a squeezing window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeResult {
    pub gradient: f64,
    /// Standard error of the gradient: `sqrt(RSS / (k-2) / Sxx)`.
    pub stderr: f64,
    pub r_window: (f64, f64),
}

/// Least-squares slope of `a_coeff` against r over fits whose r lies in
/// `[r_lo, r_hi]`; at least three such fits are required.
pub fn slope_of_a(fits: &[FitResult], r_lo: f64, r_hi: f64) -> Result<SlopeResult> {
    if !(r_lo.is_finite() && r_hi.is_finite() && r_lo < r_hi) {
        return Err(Error::Domain(format!(
            "invalid squeezing window [{r_lo}, {r_hi}]"
        )));
    }
    let mut window: Vec<&FitResult> = fits
        .iter()
        .filter(|f| f.r >= r_lo && f.r <= r_hi)
        .collect();
    window.sort_by(|a, b| a.r.partial_cmp(&b.r).unwrap());
    if window.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "slope needs >= 3 fits inside [{r_lo}, {r_hi}], found {}",
            window.len()
        )));
    }
    let xs: Vec<f64> = window.iter().map(|f| f.r).collect();
    let ys: Vec<f64> = window.iter().map(|f| f.a_coeff).collect();
    let (gradient, _, rss) = linear_lsq(&xs, &ys)?;
    let k = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let stderr = if xs.len() > 2 {
        (rss / (k - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(SlopeResult {
        gradient,
        stderr,
        r_window: (r_lo, r_hi),
    })
}

/// Cramér–Rao phase uncertainty `δθ = 1/sqrt(M·F)` for M independent probes.
pub fn cramer_rao_bound(qfi: f64, probes: u64) -> Result<f64> {
    if probes < 1 {
        return Err(Error::Domain("probe count must be >= 1".into()));
    }
    if !qfi.is_finite() || qfi < 0.0 {
        return Err(Error::Domain(format!("QFI must be finite and >= 0, got {qfi}")));
    }
    if qfi == 0.0 {
        return Err(Error::UnboundedUncertainty);
    }
    Ok(1.0 / (probes as f64 * qfi).sqrt())
}

/// Max-minus-min of the converged QFI across a set of phases; the QFI of a
/// NOON state is θ-independent, so this measures numerical noise only.
pub fn theta_spread(
    encoding: Encoding,
    n: u32,
    r: f64,
    thetas: &[f64],
    precision: f64,
    conv: &ConvergenceConfig,
) -> Result<f64> {
    if thetas.len() < 2 {
        return Err(Error::Domain("theta spread needs >= 2 phases".into()));
    }
    let squeezing = Squeezing::new(r)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &theta in thetas {
        let spec = NoonSpec::new(encoding, n, theta)?;
        let out = qfi_converged(&spec, squeezing, precision, conv)?;
        lo = lo.min(out.value);
        hi = hi.max(out.value);
    }
    Ok(hi - lo)
}
