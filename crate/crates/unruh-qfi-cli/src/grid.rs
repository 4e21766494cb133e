//! Parameter-grid syntax: `lo:step:hi` for float ranges, `a..b` for inclusive
//! integer ranges, comma lists and single values for both.

fn parse_one_f64(field: &str) -> Result<f64, String> {
    let field = field.trim();
    let v: f64 = field
        .parse()
        .map_err(|_| format!("bad number `{field}`"))?;
    if !v.is_finite() {
        return Err(format!("number `{field}` is not finite"));
    }
    Ok(v)
}

/// `lo:step:hi` (hi inclusive up to rounding), `x,y,z`, or a single value.
pub fn parse_f64_grid(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => s.split(',').map(parse_one_f64).collect(),
        3 => {
            let lo = parse_one_f64(parts[0])?;
            let step = parse_one_f64(parts[1])?;
            let hi = parse_one_f64(parts[2])?;
            if !(step > 0.0) {
                return Err(format!("step must be positive in `{s}`"));
            }
            if hi < lo {
                return Err(format!("empty range `{s}`: hi < lo"));
            }
            let mut grid = Vec::new();
            // Walk by index, not by accumulation, so rounding error stays
            // one ulp-scale instead of growing along the grid; snap the last
            // point onto hi when it lands within a relative step tolerance.
            let slack = step * 1e-9;
            for k in 0.. {
                let v = lo + k as f64 * step;
                if v > hi + slack {
                    break;
                }
                grid.push(if (v - hi).abs() <= slack { hi } else { v });
            }
            Ok(grid)
        }
        _ => Err(format!(
            "expected `lo:step:hi`, a comma list, or a single value, got `{s}`"
        )),
    }
}

/// `a..b` (both ends included), `x,y,z`, or a single integer.
pub fn parse_u32_grid(s: &str) -> Result<Vec<u32>, String> {
    let s = s.trim();
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo
            .trim()
            .parse()
            .map_err(|_| format!("bad integer `{}` in `{s}`", lo.trim()))?;
        let hi: u32 = hi
            .trim()
            .parse()
            .map_err(|_| format!("bad integer `{}` in `{s}`", hi.trim()))?;
        if lo > hi {
            return Err(format!("empty range `{s}`: {lo} > {hi}"));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|f| {
            let f = f.trim();
            f.parse::<u32>().map_err(|_| format!("bad integer `{f}`"))
        })
        .collect()
}

/// `lo:hi` with lo < hi, for the a(r) slope window.
pub fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let s = s.trim();
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `lo:hi`, got `{s}`"))?;
    if hi.contains(':') {
        return Err(format!("expected `lo:hi`, got `{s}`"));
    }
    let lo = parse_one_f64(lo)?;
    let hi = parse_one_f64(hi)?;
    if !(lo < hi) {
        return Err(format!("window `{s}` needs lo < hi"));
    }
    Ok((lo, hi))
}
