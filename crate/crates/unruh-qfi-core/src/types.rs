use crate::error::{Error, Result};

/// PSD tolerance: eigenvalues of a state may dip this far (relative to the
/// largest eigenvalue) below zero before we call the state invalid.
pub const EPS_PSD_REL: f64 = 1e-12;

/// Null-space threshold for the SLD sum, relative to the largest eigenvalue.
/// Eigenvalue pairs with `p_j + p_k` at or below this are dropped; truncation
/// noise there would otherwise be amplified catastrophically.
pub const TAU_NULL_REL: f64 = 1e-12;

/// Absolute tolerance on the trace of a θ-derivative matrix (exactly zero in
/// exact arithmetic).
pub const EPS_DERIVATIVE_TRACE: f64 = 1e-10;

/// NOON-state encoding: one optical mode or two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Encoding {
    /// `(|∅⟩ + e^{iNθ}|N⟩)/√2` in a single mode.
    SingleRail,
    /// `(|N,∅⟩ + e^{iNθ}|∅,N⟩)/√2` across two modes.
    DualRail,
}

impl Encoding {
    pub fn label(self) -> &'static str {
        match self {
            Encoding::SingleRail => "single",
            Encoding::DualRail => "dual",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Encoding::SingleRail),
            "dual" => Ok(Encoding::DualRail),
            other => Err(Error::Domain(format!(
                "unknown encoding {other:?} (expected \"single\" or \"dual\")"
            ))),
        }
    }
}

impl std::fmt::Display for Encoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Rindler mode frequency ω and the receiver's proper acceleration, the pair
/// that fixes the channel noise through `tanh r = exp(-ωπ/a)`.
#[derive(Debug, Clone, Copy)]
pub struct ModeSpec {
    pub omega: f64,
    pub accel: f64,
}

impl ModeSpec {
    pub fn new(omega: f64, accel: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::Domain(format!("omega must be positive, got {omega}")));
        }
        if !(accel > 0.0) || !accel.is_finite() {
            return Err(Error::Domain(format!("accel must be positive, got {accel}")));
        }
        Ok(ModeSpec { omega, accel })
    }
}

/// Two-mode squeezing parameter of the amplification channel, `r ≥ 0`.
///
/// The phase convention is fixed by taking `r` real and nonnegative, so the
/// channel amplitudes carry a pure `i^p` phase.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Squeezing {
    r: f64,
}

impl Squeezing {
    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::Domain(format!(
                "squeezing must be finite and nonnegative, got {r}"
            )));
        }
        Ok(Squeezing { r })
    }

    /// `r = artanh(exp(-ωπ/a))`: the squeezing seen by an observer of proper
    /// acceleration `a` in the Unruh mode of frequency ω.
    pub fn from_mode(mode: ModeSpec) -> Squeezing {
        let x = (-mode.omega * std::f64::consts::PI / mode.accel).exp();
        Squeezing { r: x.atanh() }
    }

    pub fn value(self) -> f64 {
        self.r
    }

    pub fn is_zero(self) -> bool {
        self.r == 0.0
    }
}

/// A NOON-state preparation: encoding, excitation number N ≥ 1, phase θ.
#[derive(Debug, Clone, Copy)]
pub struct NoonSpec {
    pub encoding: Encoding,
    pub n: u32,
    pub theta: f64,
}

impl NoonSpec {
    pub fn new(encoding: Encoding, n: u32, theta: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("excitation number N must be >= 1".into()));
        }
        if !theta.is_finite() {
            return Err(Error::Domain(format!("theta must be finite, got {theta}")));
        }
        Ok(NoonSpec { encoding, n, theta })
    }
}

/// Formats a float with 17 significant digits, the shortest width that
/// round-trips every f64 bit pattern. All emitted numbers — CSV, JSON, cache
/// records — go through this one function so the three agree byte for byte.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_g17_round_trips_exactly() {
        for &x in &[
            0.0,
            0.4,
            1e-5,
            3.5500326148507626,
            std::f64::consts::PI,
            f64::MIN_POSITIVE,
            1.7976931348623157e308,
            -2.2250738585072014e-308,
        ] {
            let s = fmt_g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s}");
        }
    }

    #[test]
    fn squeezing_rejects_negative_and_nan() {
        assert!(Squeezing::new(-0.1).is_err());
        assert!(Squeezing::new(f64::NAN).is_err());
        assert!(Squeezing::new(f64::INFINITY).is_err());
        assert_eq!(Squeezing::new(0.0).unwrap().value(), 0.0);
    }

    #[test]
    fn mode_spec_rejects_nonpositive() {
        assert!(ModeSpec::new(0.0, 1.0).is_err());
        assert!(ModeSpec::new(1.0, -2.0).is_err());
        assert!(ModeSpec::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn squeezing_from_mode_limits() {
        // omega -> infinity: r -> 0
        let tiny = Squeezing::from_mode(ModeSpec::new(1e12, 1.0).unwrap());
        assert!(tiny.value() < 1e-300);
        // accel -> infinity: exp(-eps) -> 1, artanh diverges
        let huge = Squeezing::from_mode(ModeSpec::new(1.0, 1e9).unwrap());
        assert!(huge.value() > 10.0);
    }

    #[test]
    fn squeezing_from_mode_reference_point() {
        // omega*pi/accel = pi  =>  r = artanh(e^{-pi}), value from
        // 30-digit arbitrary-precision evaluation.
        let r = Squeezing::from_mode(ModeSpec::new(1.0, 1.0).unwrap());
        assert!((r.value() - 0.043_240_848_283_570_177_86).abs() < 1e-12);
    }

    #[test]
    fn squeezing_from_mode_monotonicity() {
        let base = Squeezing::from_mode(ModeSpec::new(1.0, 2.0).unwrap());
        let faster = Squeezing::from_mode(ModeSpec::new(1.0, 3.0).unwrap());
        let stiffer = Squeezing::from_mode(ModeSpec::new(1.5, 2.0).unwrap());
        assert!(faster.value() > base.value(), "increasing in accel");
        assert!(stiffer.value() < base.value(), "decreasing in omega");
    }

    #[test]
    fn noon_spec_validation() {
        assert!(NoonSpec::new(Encoding::SingleRail, 0, 0.0).is_err());
        assert!(NoonSpec::new(Encoding::DualRail, 1, f64::NAN).is_err());
        assert!(NoonSpec::new(Encoding::SingleRail, 3, 0.4).is_ok());
    }

    #[test]
    fn encoding_labels_roundtrip() {
        for enc in [Encoding::SingleRail, Encoding::DualRail] {
            assert_eq!(Encoding::parse(enc.label()).unwrap(), enc);
        }
        assert!(Encoding::parse("triple").is_err());
    }
}
