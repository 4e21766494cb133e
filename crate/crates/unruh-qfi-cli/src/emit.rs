//! Record emission. CSV and JSON both route every float through
//! [`fmt_g17`], so the two formats carry bit-identical numbers and a cached
//! rerun reproduces its output byte for byte.

use unruh_qfi_core::{
    fmt_g17, FitResult, OptimalN, SlopeResult, SweepPoint, FIT_CSV_HEADER, SWEEP_CSV_HEADER,
};

use crate::config::OutputFormat;

pub const QFI_CSV_HEADER: &str =
    "encoding,n,r,theta,precision,qfi,dim_used,converged,trace_deficit,delta_theta";
pub const OPTIMAL_CSV_HEADER: &str = "r,n_star,f_star,scan_upper";
pub const SLOPE_CSV_HEADER: &str = "gradient,stderr,r_lo,r_hi";

/// δθ is None when the QFI vanishes and the bound is unbounded.
pub fn qfi_record(fmt: OutputFormat, p: &SweepPoint, trace_deficit: f64, delta_theta: Option<f64>) {
    match fmt {
        OutputFormat::Csv => {
            println!("{QFI_CSV_HEADER}");
            println!(
                "{},{},{},{},{},{},{},{},{},{}",
                p.encoding.label(),
                p.n,
                fmt_g17(p.r),
                fmt_g17(p.theta),
                fmt_g17(p.precision),
                fmt_g17(p.qfi),
                p.dim_used,
                p.converged,
                fmt_g17(trace_deficit),
                delta_theta.map_or_else(|| "inf".into(), fmt_g17),
            );
        }
        OutputFormat::Json => {
            println!("{{");
            println!("  \"encoding\": \"{}\",", p.encoding.label());
            println!("  \"n\": {},", p.n);
            println!("  \"r\": {},", fmt_g17(p.r));
            println!("  \"theta\": {},", fmt_g17(p.theta));
            println!("  \"precision\": {},", fmt_g17(p.precision));
            println!("  \"qfi\": {},", fmt_g17(p.qfi));
            println!("  \"dim_used\": {},", p.dim_used);
            println!("  \"converged\": {},", p.converged);
            println!("  \"trace_deficit\": {},", fmt_g17(trace_deficit));
            println!(
                "  \"delta_theta\": {}",
                delta_theta.map_or_else(|| "null".into(), fmt_g17)
            );
            println!("}}");
        }
    }
}

fn sweep_point_json(p: &SweepPoint) -> String {
    format!(
        "{{\"encoding\":\"{}\",\"n\":{},\"r\":{},\"theta\":{},\"precision\":{},\"qfi\":{},\"dim_used\":{},\"converged\":{},\"wall_time_s\":{}}}",
        p.encoding.label(),
        p.n,
        fmt_g17(p.r),
        fmt_g17(p.theta),
        fmt_g17(p.precision),
        fmt_g17(p.qfi),
        p.dim_used,
        p.converged,
        fmt_g17(p.wall_time_s),
    )
}

fn print_json_array(rows: Vec<String>) {
    println!("[");
    let last = rows.len().saturating_sub(1);
    for (i, row) in rows.iter().enumerate() {
        println!("  {row}{}", if i == last { "" } else { "," });
    }
    println!("]");
}

pub fn sweep(fmt: OutputFormat, points: &[SweepPoint]) {
    match fmt {
        OutputFormat::Csv => {
            println!("{SWEEP_CSV_HEADER}");
            for p in points {
                println!("{}", p.to_csv_row());
            }
        }
        OutputFormat::Json => print_json_array(points.iter().map(sweep_point_json).collect()),
    }
}

fn optimal_json(o: &OptimalN) -> String {
    format!(
        "{{\"r\":{},\"n_star\":{},\"f_star\":{},\"scan_upper\":{}}}",
        fmt_g17(o.r),
        o.n_star,
        fmt_g17(o.f_star),
        o.scan_upper,
    )
}

pub fn optimal(fmt: OutputFormat, rows: &[OptimalN]) {
    match fmt {
        OutputFormat::Csv => {
            println!("{OPTIMAL_CSV_HEADER}");
            for o in rows {
                println!(
                    "{},{},{},{}",
                    fmt_g17(o.r),
                    o.n_star,
                    fmt_g17(o.f_star),
                    o.scan_upper
                );
            }
        }
        OutputFormat::Json => print_json_array(rows.iter().map(optimal_json).collect()),
    }
}

fn fit_json(f: &FitResult) -> String {
    format!(
        "{{\"r\":{},\"a_coeff\":{},\"b_coeff\":{},\"residual_sum\":{},\"n_min\":{},\"n_max\":{}}}",
        fmt_g17(f.r),
        fmt_g17(f.a_coeff),
        fmt_g17(f.b_coeff),
        fmt_g17(f.residual_sum),
        f.n_min,
        f.n_max,
    )
}

fn slope_json(s: &SlopeResult) -> String {
    format!(
        "{{\"gradient\":{},\"stderr\":{},\"r_lo\":{},\"r_hi\":{}}}",
        fmt_g17(s.gradient),
        fmt_g17(s.stderr),
        fmt_g17(s.r_window.0),
        fmt_g17(s.r_window.1),
    )
}

pub fn fit(fmt: OutputFormat, fits: &[FitResult], slope: Option<&SlopeResult>) {
    match fmt {
        OutputFormat::Csv => {
            println!("{FIT_CSV_HEADER}");
            for f in fits {
                println!("{}", f.to_csv_row());
            }
            if let Some(s) = slope {
                println!();
                println!("{SLOPE_CSV_HEADER}");
                println!(
                    "{},{},{},{}",
                    fmt_g17(s.gradient),
                    fmt_g17(s.stderr),
                    fmt_g17(s.r_window.0),
                    fmt_g17(s.r_window.1)
                );
            }
        }
        OutputFormat::Json => match slope {
            None => print_json_array(fits.iter().map(fit_json).collect()),
            Some(s) => {
                println!("{{");
                println!("  \"fits\": [");
                let last = fits.len().saturating_sub(1);
                for (i, f) in fits.iter().enumerate() {
                    println!("    {}{}", fit_json(f), if i == last { "" } else { "," });
                }
                println!("  ],");
                println!("  \"slope\": {}", slope_json(s));
                println!("}}");
            }
        },
    }
}
