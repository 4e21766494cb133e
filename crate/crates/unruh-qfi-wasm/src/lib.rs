//! Browser bindings: three JSON-string entry points over the QFI engine,
//! thin enough that every number a page displays comes from the same code
//! path the CLI uses.
//!
//! Build with `wasm-pack build crates/unruh-qfi-wasm --target web`; the
//! demo page in `www/` loads the generated `pkg/` directory as an ES module.
//!
//! Each exported function is a shim over a `Result<String, String>` worker,
//! because a `JsValue` cannot even be constructed off wasm32 — this way the
//! logic and its tests run natively and only the boundary types are
//! browser-specific.

use wasm_bindgen::prelude::*;

use unruh_qfi_core::{
    cramer_rao_bound, fmt_g17, optimal_n, qfi_converged, ConvergenceConfig, Encoding, Error,
    NoonSpec, Squeezing, StudyConfig,
};

fn parse_inputs(encoding: &str, r: f64, precision: f64) -> Result<(Encoding, Squeezing), String> {
    let encoding = Encoding::parse(encoding).map_err(|e| e.to_string())?;
    let r = Squeezing::new(r).map_err(|e| e.to_string())?;
    if !(precision > 0.0 && precision.is_finite()) {
        return Err("precision must be positive and finite".into());
    }
    Ok((encoding, r))
}

/// The page never estimates a phase, so θ only needs to be some valid value.
const THETA: f64 = 0.4;

fn opt_g17(v: Option<f64>) -> String {
    v.map_or_else(|| "null".into(), fmt_g17)
}

fn render_point(
    qfi: f64,
    dim_used: usize,
    converged: bool,
    trace_deficit: Option<f64>,
    delta_theta: Option<f64>,
    history: &[(usize, f64)],
) -> String {
    let hist: Vec<String> = history
        .iter()
        .map(|(d, f)| format!("[{d},{}]", fmt_g17(*f)))
        .collect();
    format!(
        "{{\"qfi\":{},\"dim_used\":{dim_used},\"converged\":{converged},\"trace_deficit\":{},\"delta_theta\":{},\"history\":[{}]}}",
        fmt_g17(qfi),
        opt_g17(trace_deficit),
        opt_g17(delta_theta),
        hist.join(","),
    )
}

fn qfi_point_impl(encoding: &str, n: u32, r: f64, precision: f64) -> Result<String, String> {
    let (encoding, squeezing) = parse_inputs(encoding, r, precision)?;
    let spec = NoonSpec::new(encoding, n, THETA).map_err(|e| e.to_string())?;
    let conv = ConvergenceConfig::default();
    match qfi_converged(&spec, squeezing, precision, &conv) {
        Ok(out) => {
            let delta_theta = cramer_rao_bound(out.value, 1).map_err(|e| e.to_string())?;
            Ok(render_point(
                out.value,
                out.dim_used,
                true,
                Some(out.trace_deficit),
                Some(delta_theta),
                &out.history,
            ))
        }
        // Report the cap walk instead of failing: the page shows the
        // unconverged value with a warning.
        Err(Error::ConvergenceFailure { cap, last, history }) => {
            Ok(render_point(last, cap, false, None, None, &history))
        }
        Err(e) => Err(e.to_string()),
    }
}

fn sweep_n_impl(
    encoding: &str,
    n_lo: u32,
    n_hi: u32,
    r: f64,
    precision: f64,
) -> Result<String, String> {
    let (encoding, _) = parse_inputs(encoding, r, precision)?;
    if n_lo < 1 || n_hi < n_lo {
        return Err("need 1 <= n_lo <= n_hi".into());
    }
    if n_hi - n_lo > 63 {
        return Err("grid too long for a browser session".into());
    }
    let cfg = StudyConfig {
        theta: THETA,
        precision,
        conv: ConvergenceConfig::default(),
    };
    let ns: Vec<u32> = (n_lo..=n_hi).collect();
    let points =
        unruh_qfi_core::sweep_over_n(encoding, r, &ns, &cfg, None).map_err(|e| e.to_string())?;
    let rows: Vec<String> = points
        .iter()
        .map(|p| {
            format!(
                "{{\"n\":{},\"qfi\":{},\"dim_used\":{},\"converged\":{}}}",
                p.n,
                fmt_g17(p.qfi),
                p.dim_used,
                p.converged
            )
        })
        .collect();
    Ok(format!("{{\"points\":[{}]}}", rows.join(",")))
}

fn optimal_n_search_impl(
    encoding: &str,
    r: f64,
    precision: f64,
    scan_cap: u32,
) -> Result<String, String> {
    let (encoding, _) = parse_inputs(encoding, r, precision)?;
    let cfg = StudyConfig {
        theta: THETA,
        precision,
        conv: ConvergenceConfig::default(),
    };
    let best = optimal_n(encoding, r, &cfg, None, scan_cap).map_err(|e| e.to_string())?;
    Ok(format!(
        "{{\"n_star\":{},\"f_star\":{},\"scan_upper\":{}}}",
        best.n_star,
        fmt_g17(best.f_star),
        best.scan_upper,
    ))
}

/// Converged QFI at one point, with the refinement history so a page can
/// show how the truncation walk settled. Returns a JSON object string:
/// `{"qfi":…,"dim_used":…,"converged":…,"trace_deficit":…,"delta_theta":…,
/// "history":[[dim,qfi],…]}`; the two optional fields are null when the
/// walk stopped at the truncation cap.
#[wasm_bindgen]
pub fn qfi_point(encoding: &str, n: u32, r: f64, precision: f64) -> Result<String, JsValue> {
    qfi_point_impl(encoding, n, r, precision).map_err(|e| JsValue::from_str(&e))
}

/// Converged QFI over N = n_lo..=n_hi at fixed r. Returns
/// `{"points":[{"n":…,"qfi":…,"dim_used":…,"converged":…},…]}`.
#[wasm_bindgen]
pub fn sweep_n(
    encoding: &str,
    n_lo: u32,
    n_hi: u32,
    r: f64,
    precision: f64,
) -> Result<String, JsValue> {
    sweep_n_impl(encoding, n_lo, n_hi, r, precision).map_err(|e| JsValue::from_str(&e))
}

/// The N that maximizes the QFI at fixed r > 0. Returns
/// `{"n_star":…,"f_star":…,"scan_upper":…}`.
#[wasm_bindgen]
pub fn optimal_n_search(
    encoding: &str,
    r: f64,
    precision: f64,
    scan_cap: u32,
) -> Result<String, JsValue> {
    optimal_n_search_impl(encoding, r, precision, scan_cap).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(json: &str, key: &str) -> String {
        let needle = format!("\"{key}\":");
        let start = json.find(&needle).unwrap_or_else(|| panic!("{key} in {json}")) + needle.len();
        let rest = &json[start..];
        let end = rest
            .find([',', '}'])
            .unwrap_or_else(|| panic!("terminator after {key}"));
        rest[..end].to_string()
    }

    #[test]
    fn qfi_point_noiseless_square() {
        let json = qfi_point_impl("single", 3, 0.0, 1e-5).unwrap();
        let qfi: f64 = field(&json, "qfi").parse().unwrap();
        assert!((qfi - 9.0).abs() < 1e-9, "{json}");
        assert_eq!(field(&json, "converged"), "true");
        let delta: f64 = field(&json, "delta_theta").parse().unwrap();
        assert!((delta - 1.0 / 3.0).abs() < 1e-9);
        assert!(json.contains("\"history\":[["), "{json}");
    }

    #[test]
    fn qfi_point_rejects_bad_inputs() {
        assert!(qfi_point_impl("nope", 2, 0.5, 1e-5).is_err());
        assert!(qfi_point_impl("single", 0, 0.5, 1e-5).is_err());
        assert!(qfi_point_impl("single", 2, -0.5, 1e-5).is_err());
        assert!(qfi_point_impl("single", 2, 0.5, 0.0).is_err());
    }

    #[test]
    fn sweep_matches_single_points() {
        let sweep = sweep_n_impl("dual", 1, 3, 0.3, 1e-5).unwrap();
        let objects: Vec<&str> = sweep.split("{\"n\":").skip(1).collect();
        assert_eq!(objects.len(), 3);
        let lone = qfi_point_impl("dual", 2, 0.3, 1e-5).unwrap();
        assert!(
            sweep.contains(&format!("\"qfi\":{}", field(&lone, "qfi"))),
            "sweep and point disagree:\n{sweep}\n{lone}"
        );
    }

    #[test]
    fn optimal_search_finds_the_known_peak() {
        let json = optimal_n_search_impl("single", 1.0, 1e-5, 50).unwrap();
        assert_eq!(field(&json, "n_star"), "8");
        let f_star: f64 = field(&json, "f_star").parse().unwrap();
        assert!((f_star - 10.531226).abs() < 1e-4);
        assert!(optimal_n_search_impl("single", 0.0, 1e-5, 50).is_err());
    }
}
