//! Acceptance gate: ten go/no-go criteria for the library, each printed as
//! one PASS/FAIL line with the measured margin. The test fails if any
//! criterion fails, but always evaluates and reports all ten.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unruh_qfi_core::{
    eigh, fit_decay, optimal_n, qfi_at_dim, qfi_at_dim_dense, qfi_converged, qfi_from_pair,
    qfi_lyapunov_dense, rob_state_derivative, rob_state_dual, rob_state_single, slope_of_a,
    sweep_over_n, theta_spread, Basis, Cache, ConvergenceConfig, Encoding, HermitianMatrix,
    NoonSpec, Squeezing, StudyConfig,
};

fn sq(r: f64) -> Squeezing {
    Squeezing::new(r).unwrap()
}

fn spec(encoding: Encoding, n: u32, theta: f64) -> NoonSpec {
    NoonSpec::new(encoding, n, theta).unwrap()
}

struct Outcome {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn record(results: &mut Vec<Outcome>, id: u32, name: &'static str, passed: bool, detail: String) {
    results.push(Outcome {
        id,
        name,
        passed,
        detail,
    });
}

/// Random full-rank state with exact hermiticity, for the oracle criteria.
fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> HermitianMatrix {
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let g = &a * a.adjoint();
    let mut trace = 0.0;
    for i in 0..dim {
        trace += g[(i, i)].re + 0.05;
    }
    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        rho[(i, i)] = Complex64::new((g[(i, i)].re + 0.05) / trace, 0.0);
        for j in 0..i {
            let v = g[(i, j)] / trace;
            rho[(i, j)] = v;
            rho[(j, i)] = v.conj();
        }
    }
    HermitianMatrix::new(rho, Basis::OneMode { dim }).unwrap()
}

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> HermitianMatrix {
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        h[(i, i)] = Complex64::new(rng.random::<f64>() - 0.5, 0.0);
        for j in 0..i {
            let v = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
        }
    }
    HermitianMatrix::new(h, Basis::OneMode { dim }).unwrap()
}

fn c01_noiseless_law(results: &mut Vec<Outcome>) {
    let mut worst = 0.0f64;
    for enc in [Encoding::SingleRail, Encoding::DualRail] {
        for n in 1..=10u32 {
            let out = qfi_converged(
                &spec(enc, n, 0.4),
                sq(0.0),
                1e-5,
                &ConvergenceConfig::default(),
            )
            .unwrap();
            worst = worst.max((out.value - (n * n) as f64).abs());
        }
    }
    record(
        results,
        1,
        "noiseless-law",
        worst < 1e-6,
        format!("max |F - N²| = {worst:.2e} over both encodings, N = 1..10 (tol 1e-6)"),
    );
}

fn c02_theta_independence(results: &mut Vec<Outcome>) {
    let thetas = [0.0, 0.3, 1.0, 2.5];
    let conv = ConvergenceConfig::default();
    let s_single = theta_spread(Encoding::SingleRail, 2, 0.5, &thetas, 1e-7, &conv).unwrap();
    let s_dual = theta_spread(Encoding::DualRail, 1, 0.8, &thetas, 1e-7, &conv).unwrap();
    let worst = s_single.max(s_dual);
    record(
        results,
        2,
        "theta-independence",
        worst < 1e-6,
        format!(
            "spread single(N=2,r=0.5) = {s_single:.2e}, dual(N=1,r=0.8) = {s_dual:.2e} (tol 1e-6)"
        ),
    );
}

fn c03_oracle_equivalence(results: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_816);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let dim = 2 + (i % 7);
        let rho = random_state(&mut rng, dim);
        let drho = random_hermitian(&mut rng, dim);
        let fast = qfi_from_pair(&rho, &drho).unwrap();
        let oracle = qfi_lyapunov_dense(&rho, &drho).unwrap();
        worst = worst.max((fast - oracle).abs() / fast.abs().max(1.0));
    }
    record(
        results,
        3,
        "oracle-equivalence",
        worst < 1e-8,
        format!("max |pipeline - Lyapunov| = {worst:.2e} over 20 random dim<=8 states (tol 1e-8)"),
    );
}

fn c04_derivative_check(results: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let single = rng.random::<bool>();
        let n = rng.random_range(1..=5u32);
        let theta = rng.random_range(0.0..6.28);
        let r = rng.random_range(0.0..1.5);
        let (enc, dim) = if single {
            (Encoding::SingleRail, rng.random_range(n as usize + 2..=40))
        } else {
            (Encoding::DualRail, rng.random_range(n as usize + 1..=6))
        };
        let build = |th: f64| match enc {
            Encoding::SingleRail => rob_state_single(&spec(enc, n, th), sq(r), dim)
                .unwrap()
                .into_matrix(),
            Encoding::DualRail => rob_state_dual(&spec(enc, n, th), sq(r), dim)
                .unwrap()
                .into_matrix(),
        };
        let fd = (build(theta + h) - build(theta - h)) / Complex64::new(2.0 * h, 0.0);
        let analytic = rob_state_derivative(&spec(enc, n, theta), sq(r), dim).unwrap();
        worst = worst.max((fd - analytic.matrix()).map(|z| z.norm()).max());
    }
    record(
        results,
        4,
        "derivative-check",
        worst < 1e-8,
        format!("max entrywise |FD - analytic| = {worst:.2e} over 10 random instances (tol 1e-8)"),
    );
}

fn c05_single_rail_dominance(results: &mut Vec<Outcome>, cache: &Cache) {
    let cfg = StudyConfig::default();
    let mut ok = true;
    let mut min_gap = f64::INFINITY;
    let mut detail_fail = String::new();
    for &n in &[1u32, 2, 3, 5] {
        for &r in &[0.2, 0.5, 1.0, 1.5] {
            let fs = unruh_qfi_core::compute_point(Encoding::SingleRail, n, r, &cfg, Some(cache))
                .unwrap();
            let fd =
                unruh_qfi_core::compute_point(Encoding::DualRail, n, r, &cfg, Some(cache)).unwrap();
            assert!(fs.converged && fd.converged, "dominance grid did not converge");
            min_gap = min_gap.min(fs.qfi - fd.qfi);
            if fs.qfi <= fd.qfi {
                ok = false;
                detail_fail = format!(" first violation at N={n}, r={r}");
            }
        }
    }
    record(
        results,
        5,
        "single-rail-dominance",
        ok,
        format!("min(single - dual) = {min_gap:.3e} over N in {{1,2,3,5}} x r in {{0.2,0.5,1.0,1.5}}{detail_fail}"),
    );
}

fn c06_optimal_n(results: &mut Vec<Outcome>, cache: &Cache) {
    let cfg = StudyConfig::default();
    let rs = [0.6, 0.8, 1.0, 1.2, 1.5, 2.0];
    let mut stars = Vec::new();
    let mut ok = true;
    let mut notes = Vec::new();
    for &r in &rs {
        let best = optimal_n(Encoding::SingleRail, r, &cfg, Some(cache), 200).unwrap();
        // Exhaustive cross-check: argmax of the converged QFI over N = 1..100.
        let ns: Vec<u32> = (1..=100).collect();
        let sweep = sweep_over_n(Encoding::SingleRail, r, &ns, &cfg, Some(cache)).unwrap();
        let exhaustive = sweep
            .iter()
            .fold((0u32, f64::NEG_INFINITY), |acc, p| {
                if p.converged && p.qfi > acc.1 {
                    (p.n, p.qfi)
                } else {
                    acc
                }
            })
            .0;
        if best.n_star != exhaustive {
            ok = false;
            notes.push(format!(
                "r={r}: search found {} but exhaustive scan found {exhaustive}",
                best.n_star
            ));
        }
        stars.push(best.n_star);
    }
    if !stars.windows(2).all(|w| w[1] <= w[0]) {
        ok = false;
        notes.push(format!("n_star sequence not nonincreasing: {stars:?}"));
    }
    record(
        results,
        6,
        "optimal-n-monotonicity",
        ok,
        format!(
            "n_star over r = {rs:?}: {stars:?}; exhaustive scans to N=100 agree{}",
            if notes.is_empty() {
                String::new()
            } else {
                format!("; {}", notes.join("; "))
            }
        ),
    );
}

fn c07_decay_fit(results: &mut Vec<Outcome>, cache: &Cache) {
    let cfg = StudyConfig::default();
    let rs = [2.2, 2.5, 2.8, 3.1];
    let mut fits = Vec::new();
    let mut min_r2 = f64::INFINITY;
    let mut lines = Vec::new();
    for &r in &rs {
        let ns: Vec<u32> = (1..=16).collect();
        let sweep = sweep_over_n(Encoding::SingleRail, r, &ns, &cfg, Some(cache)).unwrap();
        assert!(sweep.iter().all(|p| p.converged), "decay sweep hit the cap at r={r}");
        let n_star = sweep
            .iter()
            .fold((0u32, f64::NEG_INFINITY), |acc, p| {
                if p.qfi > acc.1 {
                    (p.n, p.qfi)
                } else {
                    acc
                }
            })
            .0;
        // Post-peak tail window: the ten points after the maximum.
        let window: Vec<_> = sweep
            .iter()
            .filter(|p| p.n <= n_star + 10)
            .cloned()
            .collect();
        let fit = fit_decay(&window, None).unwrap();
        // R² of the log-space fit.
        let tail: Vec<&unruh_qfi_core::SweepPoint> =
            window.iter().filter(|p| p.n >= fit.n_min).collect();
        let ys: Vec<f64> = tail
            .iter()
            .map(|p| (p.qfi / (p.n as f64 * p.n as f64)).ln())
            .collect();
        let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
        let tss: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
        let r2 = 1.0 - fit.residual_sum / tss;
        min_r2 = min_r2.min(r2);
        lines.push(format!(
            "      r={r}: a = {:.6}, fit window N = {}..{}, R² = {:.7}",
            fit.a_coeff, fit.n_min, fit.n_max, r2
        ));
        fits.push(fit);
    }
    let slope = slope_of_a(&fits, 2.08, 3.10).unwrap();
    let target = 41.6e-3;
    let (lo, hi) = (target * 0.85, target * 1.15);
    let r2_ok = min_r2 > 0.99;
    let slope_ok = slope.gradient >= lo && slope.gradient <= hi;
    let mut detail = format!(
        "min R² = {min_r2:.6} (need > 0.99); slope of a(r) over [2.08, 3.10] = {:.4e} ± {:.1e}, band [{lo:.4e}, {hi:.4e}]",
        slope.gradient, slope.stderr
    );
    detail.push('\n');
    detail.push_str(&lines.join("\n"));
    if !slope_ok {
        detail.push_str(&format!(
            "\n      note: with the window bounds read as squeezing values the post-peak tail slope sits near 2.3e-2 \
             for every tail rule tried; reading the bounds [2.08, 3.10] as accelerations (tanh r = exp(-pi/a), omega = 1, \
             so r in [0.22, 0.38] and the peak moves to N = 73..28) reproduces the target: slope 4.37e-2, inside the band. \
             The criterion is implemented as stated, in squeezing units."
        ));
    }
    record(
        results,
        7,
        "decay-model-fit",
        r2_ok && slope_ok,
        detail,
    );
}

fn c08_fit_exactness(results: &mut Vec<Outcome>) {
    // Synthetic decay data generated exactly from the model.
    let (a, b, r) = (0.3137, -0.275, 2.4);
    let points: Vec<unruh_qfi_core::SweepPoint> = (1..=18)
        .map(|n| {
            let nf = n as f64;
            unruh_qfi_core::SweepPoint {
                encoding: Encoding::SingleRail,
                n,
                r,
                theta: 0.4,
                precision: 1e-5,
                qfi: nf * nf * (-a * nf + b).exp(),
                dim_used: 64,
                converged: true,
                wall_time_s: 0.0,
            }
        })
        .collect();
    let fit = fit_decay(&points, None).unwrap();
    let fit_err = (fit.a_coeff - a).abs().max((fit.b_coeff - b).abs());

    // Synthetic linear a(r).
    let (c0, c1) = (0.0041, 0.0416);
    let fits: Vec<unruh_qfi_core::FitResult> = [2.08, 2.4, 2.7, 3.10]
        .iter()
        .map(|&rv| unruh_qfi_core::FitResult {
            r: rv,
            a_coeff: c0 + c1 * rv,
            b_coeff: 0.0,
            residual_sum: 0.0,
            n_min: 7,
            n_max: 16,
        })
        .collect();
    let slope = slope_of_a(&fits, 2.0, 3.2).unwrap();
    let slope_err = (slope.gradient - c1).abs();
    record(
        results,
        8,
        "fit-exactness",
        fit_err < 1e-10 && slope_err < 1e-12,
        format!(
            "synthetic decay coefficient error = {fit_err:.2e} (tol 1e-10); synthetic slope error = {slope_err:.2e} (tol 1e-12)"
        ),
    );
}

fn c09_structural_invariants(results: &mut Vec<Outcome>) {
    let mut ok = true;
    let mut notes = Vec::new();

    // Hermiticity exact, spectra admissible, support structure.
    for &(n, r, dim) in &[(1u32, 0.4, 20usize), (3, 1.1, 33), (2, 0.8, 27)] {
        let s = spec(Encoding::SingleRail, n, 0.9);
        let rho = rob_state_single(&s, sq(r), dim).unwrap();
        let drho = rob_state_derivative(&s, sq(r), dim).unwrap();
        if rho.hermiticity_defect() != 0.0 || drho.hermiticity_defect() != 0.0 {
            ok = false;
            notes.push(format!("hermiticity defect at single N={n} r={r}"));
        }
        if eigh(&rho).is_err() {
            ok = false;
            notes.push(format!("spectrum rejected at single N={n} r={r}"));
        }
        let m = rho.matrix();
        for i in 0..dim {
            for j in 0..dim {
                let gap = i.abs_diff(j);
                if gap != 0 && gap != n as usize && m[(i, j)] != Complex64::new(0.0, 0.0) {
                    ok = false;
                    notes.push(format!("single-rail support leak at N={n}, ({i},{j})"));
                }
            }
        }
    }
    for &(n, r, d) in &[(1u32, 0.4, 8usize), (2, 0.8, 10)] {
        let s = spec(Encoding::DualRail, n, 1.3);
        let rho = rob_state_dual(&s, sq(r), d).unwrap();
        let drho = rob_state_derivative(&s, sq(r), d).unwrap();
        if rho.hermiticity_defect() != 0.0 || drho.hermiticity_defect() != 0.0 {
            ok = false;
            notes.push(format!("hermiticity defect at dual N={n} r={r}"));
        }
        if eigh(&rho).is_err() {
            ok = false;
            notes.push(format!("spectrum rejected at dual N={n} r={r}"));
        }
        let m = rho.matrix();
        for row in 0..d * d {
            for col in 0..d * d {
                if m[(row, col)] != Complex64::new(0.0, 0.0)
                    && row / d + row % d != col / d + col % d
                {
                    ok = false;
                    notes.push(format!("dual-rail number violation at N={n}, ({row},{col})"));
                }
            }
        }
    }

    // Converged trace deficits stay within 10x precision.
    let precision = 1e-5;
    let mut worst_deficit = 0.0f64;
    for (enc, n, r) in [
        (Encoding::SingleRail, 2u32, 0.7),
        (Encoding::SingleRail, 4, 1.3),
        (Encoding::DualRail, 1, 0.5),
        (Encoding::DualRail, 2, 0.9),
    ] {
        let out = qfi_converged(
            &spec(enc, n, 0.4),
            sq(r),
            precision,
            &ConvergenceConfig::default(),
        )
        .unwrap();
        worst_deficit = worst_deficit.max(out.trace_deficit);
    }
    if worst_deficit >= 10.0 * precision {
        ok = false;
        notes.push(format!("trace deficit {worst_deficit:.2e} over bound"));
    }
    record(
        results,
        9,
        "structural-invariants",
        ok,
        if notes.is_empty() {
            format!(
                "hermiticity exact, spectra admissible, support confined, number conserved; max converged trace deficit = {worst_deficit:.2e} (bound {:.0e})",
                10.0 * precision
            )
        } else {
            notes.join("; ")
        },
    );
}

fn c10_block_equivalence(results: &mut Vec<Outcome>) {
    let mut worst = 0.0f64;
    for n in 1..=3u32 {
        for &r in &[0.3, 0.7, 1.0] {
            for &dim in &[25usize, 45, 60] {
                let s = spec(Encoding::SingleRail, n, 0.9);
                let blocked = qfi_at_dim(&s, sq(r), dim).unwrap();
                let dense = qfi_at_dim_dense(&s, sq(r), dim).unwrap();
                worst = worst.max((blocked - dense).abs());
            }
        }
    }
    for &r in &[0.3, 0.8] {
        for &d in &[12usize, 20] {
            let s = spec(Encoding::DualRail, 1, 0.9);
            let blocked = qfi_at_dim(&s, sq(r), d).unwrap();
            let dense = qfi_at_dim_dense(&s, sq(r), d).unwrap();
            worst = worst.max((blocked - dense).abs());
        }
    }
    record(
        results,
        10,
        "block-path-equivalence",
        worst < 1e-9,
        format!("max |blocked - dense| = {worst:.2e} over the single/dual grids (tol 1e-9)"),
    );
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::open(dir.path().join("acceptance-cache.csv")).unwrap();
    let mut results = Vec::new();

    c01_noiseless_law(&mut results);
    c02_theta_independence(&mut results);
    c03_oracle_equivalence(&mut results);
    c04_derivative_check(&mut results);
    c05_single_rail_dominance(&mut results, &cache);
    c06_optimal_n(&mut results, &cache);
    c07_decay_fit(&mut results, &cache);
    c08_fit_exactness(&mut results);
    c09_structural_invariants(&mut results);
    c10_block_equivalence(&mut results);

    println!("\n==== acceptance criteria ====");
    for o in &results {
        println!(
            "criterion {:2} {:<24} {}  {}",
            o.id,
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed: Vec<String> = results
        .iter()
        .filter(|o| !o.passed)
        .map(|o| format!("{} ({})", o.id, o.name))
        .collect();
    assert!(
        failed.is_empty(),
        "acceptance criteria failed: {}",
        failed.join(", ")
    );
}
