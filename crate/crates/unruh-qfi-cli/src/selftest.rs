//! Fast end-to-end consistency checks, one line per invariant. Everything
//! here runs at small fixed truncations so the whole suite finishes in
//! seconds even on one core.

use unruh_qfi_core::{
    cramer_rao_bound, fit_decay, qfi_at_dim, qfi_at_dim_dense, qfi_converged,
    qfi_lyapunov_dense, rob_state_derivative, rob_state_single, state_trace, Cache,
    ConvergenceConfig, Encoding, NoonSpec, Schedule, Squeezing, SweepPoint, UnruhAmplitudes,
};

fn spec(encoding: Encoding, n: u32, theta: f64) -> NoonSpec {
    NoonSpec::new(encoding, n, theta).expect("selftest spec is valid")
}

fn within(label: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{label}: got {got:.17e}, want {want:.17e} (tol {tol:.1e})"))
    }
}

/// At r = 0 the channel is the identity and the QFI is exactly N².
fn noiseless_law() -> Result<(), String> {
    let r = Squeezing::new(0.0).unwrap();
    let conv = ConvergenceConfig::default();
    for encoding in [Encoding::SingleRail, Encoding::DualRail] {
        for n in 1..=3u32 {
            let out = qfi_converged(&spec(encoding, n, 0.7), r, 1e-6, &conv)
                .map_err(|e| e.to_string())?;
            within(
                &format!("{} N={n}", encoding.label()),
                out.value,
                (n * n) as f64,
                1e-9,
            )?;
        }
    }
    Ok(())
}

/// Channel amplitudes are a unit vector once the truncation covers the
/// thermal tail.
fn channel_unitarity() -> Result<(), String> {
    let r = Squeezing::new(1.2).unwrap();
    for m in [0u32, 3] {
        let amps = UnruhAmplitudes::new(m, r, 4096).map_err(|e| e.to_string())?;
        within(&format!("M={m}"), amps.partial_norm(), 1.0, 1e-9)?;
    }
    Ok(())
}

/// Assembled states match the closed-form trace; the derivative is traceless
/// and both matrices are Hermitian by construction.
fn state_consistency() -> Result<(), String> {
    let r = Squeezing::new(0.8).unwrap();
    let s = spec(Encoding::SingleRail, 2, 0.9);
    let rho = rob_state_single(&s, r, 40).map_err(|e| e.to_string())?;
    let drho = rob_state_derivative(&s, r, 40).map_err(|e| e.to_string())?;
    let closed = state_trace(Encoding::SingleRail, 2, r, 40).map_err(|e| e.to_string())?;
    within("trace vs closed form", rho.trace_real(), closed, 1e-12)?;
    within("derivative trace", drho.trace_real(), 0.0, 1e-14)?;
    if rho.hermiticity_defect() != 0.0 || drho.hermiticity_defect() != 0.0 {
        return Err("assembled matrices are not exactly Hermitian".into());
    }
    Ok(())
}

/// The sector-blocked pipeline agrees with a dense whole-matrix evaluation.
fn blocked_vs_dense() -> Result<(), String> {
    let cases = [
        (Encoding::SingleRail, 2, 0.7, 28usize),
        (Encoding::DualRail, 1, 0.5, 10),
    ];
    for (encoding, n, r, dim) in cases {
        let s = spec(encoding, n, 0.4);
        let rq = Squeezing::new(r).unwrap();
        let blocked = qfi_at_dim(&s, rq, dim).map_err(|e| e.to_string())?;
        let dense = qfi_at_dim_dense(&s, rq, dim).map_err(|e| e.to_string())?;
        within(&format!("{} N={n}", encoding.label()), blocked, dense, 1e-9)?;
    }
    Ok(())
}

/// The eigenbasis QFI formula agrees with solving the Lyapunov equation
/// ρL + Lρ = 2ρ′ directly.
fn lyapunov_oracle() -> Result<(), String> {
    let s = spec(Encoding::SingleRail, 1, 0.6);
    let r = Squeezing::new(0.4).unwrap();
    let rho = rob_state_single(&s, r, 14).map_err(|e| e.to_string())?;
    let drho = rob_state_derivative(&s, r, 14).map_err(|e| e.to_string())?;
    let via_lyapunov = qfi_lyapunov_dense(&rho, &drho).map_err(|e| e.to_string())?;
    let via_eigen = qfi_at_dim(&s, r, 14).map_err(|e| e.to_string())?;
    within("dim 14", via_eigen, via_lyapunov, 1e-8)
}

/// The QFI of a NOON state does not depend on the phase being estimated.
fn theta_independence() -> Result<(), String> {
    let r = Squeezing::new(0.5).unwrap();
    let a = qfi_at_dim(&spec(Encoding::SingleRail, 2, 0.15), r, 24).map_err(|e| e.to_string())?;
    let b = qfi_at_dim(&spec(Encoding::SingleRail, 2, 1.35), r, 24).map_err(|e| e.to_string())?;
    within("θ=0.15 vs θ=1.35", a, b, 1e-9)
}

/// Points drawn exactly from F = N² e^{-aN+b} fit back to (a, b).
fn fit_exactness() -> Result<(), String> {
    let (a, b) = (0.3, 0.2);
    let points: Vec<SweepPoint> = (1..=8u32)
        .map(|n| SweepPoint {
            encoding: Encoding::SingleRail,
            n,
            r: 1.0,
            theta: 0.4,
            precision: 1e-5,
            qfi: (n * n) as f64 * (-a * n as f64 + b).exp(),
            dim_used: 32,
            converged: true,
            wall_time_s: 0.0,
        })
        .collect();
    let fit = fit_decay(&points, Some(1)).map_err(|e| e.to_string())?;
    within("a", fit.a_coeff, a, 1e-10)?;
    within("b", fit.b_coeff, b, 1e-10)?;
    within("rss", fit.residual_sum, 0.0, 1e-18)
}

fn cramer_rao() -> Result<(), String> {
    within("M=1", cramer_rao_bound(4.0, 1).map_err(|e| e.to_string())?, 0.5, 0.0)?;
    within("M=4", cramer_rao_bound(4.0, 4).map_err(|e| e.to_string())?, 0.25, 0.0)
}

/// A stored sweep point survives the cache round trip bit for bit.
fn cache_roundtrip() -> Result<(), String> {
    let path = std::env::temp_dir().join(format!(
        "unruh-qfi-selftest-{}.cache",
        std::process::id()
    ));
    let result = (|| {
        let cache = Cache::open(&path).map_err(|e| e.to_string())?;
        let point = SweepPoint {
            encoding: Encoding::DualRail,
            n: 7,
            r: 0.1 + 0.2,
            theta: 0.4,
            precision: 1e-5,
            qfi: 12.345678901234567,
            dim_used: 48,
            converged: true,
            wall_time_s: 1.5e-300,
        };
        cache.put(&point, Schedule::Accelerated);
        let hit = cache
            .get(point.encoding, point.n, point.r, point.precision, Schedule::Accelerated)
            .ok_or("stored point not found")?;
        if hit.qfi.to_bits() != point.qfi.to_bits()
            || hit.r.to_bits() != point.r.to_bits()
            || hit.wall_time_s.to_bits() != point.wall_time_s.to_bits()
            || hit.dim_used != point.dim_used
        {
            return Err("round trip altered the stored fields".into());
        }
        if cache
            .get(point.encoding, point.n, point.r, point.precision, Schedule::UnitStep)
            .is_some()
        {
            return Err("schedule is missing from the cache key".into());
        }
        Ok(())
    })();
    std::fs::remove_file(&path).ok();
    result
}

pub fn run() -> i32 {
    let checks: &[(&str, fn() -> Result<(), String>)] = &[
        ("noiseless-law", noiseless_law),
        ("channel-unitarity", channel_unitarity),
        ("state-consistency", state_consistency),
        ("blocked-vs-dense", blocked_vs_dense),
        ("lyapunov-oracle", lyapunov_oracle),
        ("theta-independence", theta_independence),
        ("fit-exactness", fit_exactness),
        ("cramer-rao", cramer_rao),
        ("cache-roundtrip", cache_roundtrip),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("selftest {name:<20} ok"),
            Err(msg) => {
                println!("selftest {name:<20} FAIL  {msg}");
                failed += 1;
            }
        }
    }
    if failed == 0 {
        println!("selftest: all checks passed");
        0
    } else {
        println!("selftest: {failed} check(s) failed");
        1
    }
}
