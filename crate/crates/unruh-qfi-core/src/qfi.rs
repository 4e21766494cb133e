//! The QFI pipeline: eigendecomposition, SLD lowering, trace pairing, the
//! block-diagonal fast path, and the truncation-convergence driver.
//!
//! For a state ρ with derivative ρ′, the quantum Fisher information is
//! `F = Tr[ρ′ L]` where the symmetric logarithmic derivative L solves
//! `ρL + Lρ = 2ρ′`. In the eigenbasis of ρ the solution is entrywise,
//! `L̃_jk = 2 B̃_jk / (p_j + p_k)` with `B̃ = V†ρ′V`, and the pairing
//! collapses to `F = Σ_jk 2|B̃_jk|² / (p_j + p_k)` over pairs whose
//! eigenvalue sum clears the null-space cutoff.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{state_blocks, state_trace, Basis, HermitianMatrix};
use crate::fock::{rob_state_derivative, rob_state_dual, rob_state_single};
use crate::types::{Encoding, NoonSpec, Squeezing, EPS_PSD_REL, TAU_NULL_REL};

/// Eigendecomposition of a state: eigenvalues descending, negatives within
/// `EPS_PSD_REL` of zero clamped, eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<Complex64>,
    source_basis: Basis,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn source_basis(&self) -> Basis {
        self.source_basis
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Null-space cutoff for this spectrum: `TAU_NULL_REL ×` largest
    /// eigenvalue. Blocked paths use a global cutoff across blocks instead.
    pub fn tau_null(&self) -> f64 {
        TAU_NULL_REL * self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `V† B V`: re-expresses B in this eigenbasis.
    fn rotate(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.vectors.adjoint() * b * &self.vectors
    }
}

/// Decomposes a Hermitian matrix, sorts descending, and clamps the
/// truncation-noise negatives. Eigenvalues below `-EPS_PSD_REL · max`
/// indicate a genuinely indefinite matrix and are rejected.
fn eigh_raw(mat: DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = mat.nrows();
    let se = mat.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    let pmax = se.eigenvalues[order[0]].max(0.0);
    let floor = -EPS_PSD_REL * pmax;
    let mut eigenvalues = Vec::with_capacity(n);
    for &i in &order {
        let p = se.eigenvalues[i];
        if p < floor {
            return Err(Error::InvalidState {
                value: p,
                tolerance: EPS_PSD_REL * pmax,
            });
        }
        eigenvalues.push(p.max(0.0));
    }
    let vectors = DMatrix::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    Ok((eigenvalues, vectors))
}

pub fn eigh(state: &HermitianMatrix) -> Result<Spectrum> {
    let (eigenvalues, vectors) = eigh_raw(state.matrix().clone())?;
    Ok(Spectrum {
        eigenvalues,
        vectors,
        source_basis: state.basis(),
    })
}

/// Entrywise SLD in the eigenbasis of the decomposed state:
/// `L̃_jk = 2 (V†BV)_jk / (p_j + p_k)`, zero where the pair lies in the
/// numerical null space.
pub fn sld_lower(spectrum: &Spectrum, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    if b.basis() != spectrum.source_basis() {
        return Err(Error::BasisMismatch(format!(
            "operator basis {:?} does not match the decomposed state's {:?}",
            b.basis(),
            spectrum.source_basis()
        )));
    }
    let btilde = spectrum.rotate(b.matrix());
    let p = spectrum.eigenvalues();
    let tau = spectrum.tau_null();
    let n = spectrum.dim();
    let l = DMatrix::from_fn(n, n, |j, k| {
        let s = p[j] + p[k];
        if s > tau {
            btilde[(j, k)] * (2.0 / s)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(HermitianMatrix::from_parts(l, Basis::Eigen { dim: n }))
}

/// The lowered pairing `Σ 2|B̃_jk|²/(p_j+p_k)` with an explicit cutoff,
/// Kahan-accumulated in fixed (j,k) order.
fn paired_sum(p: &[f64], btilde: &DMatrix<Complex64>, tau: f64) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for j in 0..p.len() {
        for k in 0..p.len() {
            let s = p[j] + p[k];
            if s > tau {
                let term = 2.0 * btilde[(j, k)].norm_sqr() / s;
                let y = term - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            }
        }
    }
    sum
}

/// QFI of an explicit (ρ, ρ′) pair by dense eigendecomposition. The two
/// operators must carry the same basis tag.
pub fn qfi_from_pair(rho: &HermitianMatrix, drho: &HermitianMatrix) -> Result<f64> {
    if rho.basis() != drho.basis() {
        return Err(Error::BasisMismatch(format!(
            "state basis {:?} does not match derivative basis {:?}",
            rho.basis(),
            drho.basis()
        )));
    }
    let spectrum = eigh(rho)?;
    let btilde = spectrum.rotate(drho.matrix());
    Ok(paired_sum(
        spectrum.eigenvalues(),
        &btilde,
        spectrum.tau_null(),
    ))
}

/// Independent QFI oracle: solve the SLD equation `ρL + Lρ = 2ρ′` as the
/// linear system `(I⊗ρ + ρᵀ⊗I) vec(L) = 2 vec(ρ′)` by LU, then pair
/// `F = Re Tr[ρ′ L]`. Requires a full-rank ρ and O(dim⁶) work, so this is a
/// cross-check for small systems, not a production path.
pub fn qfi_lyapunov_dense(rho: &HermitianMatrix, drho: &HermitianMatrix) -> Result<f64> {
    if rho.basis() != drho.basis() {
        return Err(Error::BasisMismatch(
            "state and derivative bases differ".into(),
        ));
    }
    let n = rho.dim();
    let eye = DMatrix::<Complex64>::identity(n, n);
    let m = eye.kronecker(rho.matrix()) + rho.matrix().transpose().kronecker(&eye);
    let rhs =
        nalgebra::DVector::from_column_slice(drho.matrix().as_slice()) * Complex64::new(2.0, 0.0);
    let l_vec = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Domain("SLD system is singular; state is rank-deficient".into()))?;
    let l = DMatrix::from_column_slice(n, n, l_vec.as_slice());
    Ok((drho.matrix() * l).trace().re)
}

struct DecomposedBlock {
    eigenvalues: Vec<f64>,
    btilde: DMatrix<Complex64>,
}

fn decompose_block(block: crate::fock::StateBlock) -> Result<DecomposedBlock> {
    let (eigenvalues, vectors) = eigh_raw(block.rho)?;
    let btilde = vectors.adjoint() * &block.drho * &vectors;
    Ok(DecomposedBlock {
        eigenvalues,
        btilde,
    })
}

#[cfg(feature = "parallel")]
fn decompose_all(blocks: Vec<crate::fock::StateBlock>) -> Result<Vec<DecomposedBlock>> {
    use rayon::prelude::*;
    blocks.into_par_iter().map(decompose_block).collect()
}

#[cfg(not(feature = "parallel"))]
fn decompose_all(blocks: Vec<crate::fock::StateBlock>) -> Result<Vec<DecomposedBlock>> {
    blocks.into_iter().map(decompose_block).collect()
}

/// QFI at a fixed truncation via the symmetry-block decomposition. `dim` is
/// the total Fock truncation for the single rail and the per-mode truncation
/// for the dual rail. Blocks may be decomposed in parallel; the null-space
/// cutoff uses the global eigenvalue maximum and the final sum runs in block
/// order, so the result is independent of thread count.
pub fn qfi_at_dim(spec: &NoonSpec, r: Squeezing, dim: usize) -> Result<f64> {
    let blocks = state_blocks(spec, r, dim)?;
    let decomposed = decompose_all(blocks)?;
    let pmax = decomposed
        .iter()
        .flat_map(|b| b.eigenvalues.iter().copied())
        .fold(0.0f64, f64::max);
    let tau = TAU_NULL_REL * pmax;
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for block in &decomposed {
        let y = paired_sum(&block.eigenvalues, &block.btilde, tau) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(sum)
}

/// QFI at a fixed truncation through the dense builders — no block
/// decomposition anywhere in the route. Exists to cross-check `qfi_at_dim`.
pub fn qfi_at_dim_dense(spec: &NoonSpec, r: Squeezing, dim: usize) -> Result<f64> {
    let rho = match spec.encoding {
        Encoding::SingleRail => rob_state_single(spec, r, dim)?,
        Encoding::DualRail => rob_state_dual(spec, r, dim)?,
    };
    let drho = rob_state_derivative(spec, r, dim)?;
    qfi_from_pair(&rho, &drho)
}

/// Truncation-growth policy for `qfi_converged`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Step by `Δk = max(8, ⌈0.25·dim₀⌉)` and re-confirm any tentative
    /// convergence at `4Δk` further out before accepting it.
    Accelerated,
    /// Step by 1 with no confirmation stage; for fidelity studies of the
    /// schedule itself.
    UnitStep,
}

impl Schedule {
    pub fn label(self) -> &'static str {
        match self {
            Schedule::Accelerated => "accelerated",
            Schedule::UnitStep => "unit-step",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "accelerated" => Ok(Schedule::Accelerated),
            "unit-step" => Ok(Schedule::UnitStep),
            other => Err(Error::Domain(format!("unknown schedule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub schedule: Schedule,
    /// Truncation ceiling; defaults to 4096 (single rail) or 120 per mode
    /// (dual rail).
    pub dim_cap: Option<usize>,
    /// Replaces the `N + ⌈6(sinh²r + 1)⌉` starting truncation.
    pub dim0_override: Option<usize>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            schedule: Schedule::Accelerated,
            dim_cap: None,
            dim0_override: None,
        }
    }
}

pub fn default_dim_cap(encoding: Encoding) -> usize {
    match encoding {
        Encoding::SingleRail => 4096,
        Encoding::DualRail => 120,
    }
}

/// `dim₀ = N + ⌈6·(sinh²r + 1)⌉`: the starting truncation, sized so the
/// thermal tail of the vacuum block is already inside the basis.
pub fn initial_dim(n: u32, r: Squeezing) -> usize {
    let sh = r.value().sinh();
    n as usize + (6.0 * (sh * sh + 1.0)).ceil() as usize
}

/// A converged QFI evaluation with its truncation-walk record.
#[derive(Debug, Clone)]
pub struct QfiOutcome {
    pub value: f64,
    /// Truncation of the accepted evaluation (per mode for the dual rail).
    pub dim_used: usize,
    /// Every (dim, qfi) evaluation in walk order.
    pub history: Vec<(usize, f64)>,
    pub converged: bool,
    pub precision: f64,
    /// `1 - Tr ρ` at the accepted truncation.
    pub trace_deficit: f64,
}

/// Grows the truncation until two successive evaluations differ by less than
/// `precision`.
///
/// The amplified blocks of the state have mean occupation near
/// `(N+1)sinh²r + N`, which for large N r sits far beyond the starting
/// truncation; there the QFI-vs-dim curve has a flat foot on which successive
/// coarse steps can agree to within any precision while the value is still
/// wrong by orders of magnitude. The accelerated schedule therefore treats
/// agreement as tentative: it re-evaluates a further `4Δk` out, accepts only
/// if the value holds, and otherwise resumes the walk from the probe point.
pub fn qfi_converged(
    spec: &NoonSpec,
    r: Squeezing,
    precision: f64,
    config: &ConvergenceConfig,
) -> Result<QfiOutcome> {
    if !(precision > 0.0 && precision.is_finite()) {
        return Err(Error::Domain(format!(
            "precision must be positive and finite, got {precision}"
        )));
    }
    let cap = config.dim_cap.unwrap_or(default_dim_cap(spec.encoding));
    if cap <= spec.n as usize {
        return Err(Error::DimensionTooSmall {
            dim: cap,
            n: spec.n,
        });
    }
    let dim0 = config
        .dim0_override
        .unwrap_or_else(|| initial_dim(spec.n, r))
        .min(cap);
    let dk = match config.schedule {
        Schedule::Accelerated => 8usize.max((0.25 * dim0 as f64).ceil() as usize),
        Schedule::UnitStep => 1,
    };

    let mut history: Vec<(usize, f64)> = Vec::new();
    let eval = |d: usize, history: &mut Vec<(usize, f64)>| -> Result<f64> {
        let f = qfi_at_dim(spec, r, d)?;
        history.push((d, f));
        Ok(f)
    };

    let mut dim = dim0;
    let mut f_prev = eval(dim, &mut history)?;
    let accepted = loop {
        let next = (dim + dk).min(cap);
        if next == dim {
            return Err(Error::ConvergenceFailure {
                cap,
                last: f_prev,
                history,
            });
        }
        let f = eval(next, &mut history)?;
        if (f - f_prev).abs() < precision {
            match config.schedule {
                Schedule::UnitStep => break (next, f),
                Schedule::Accelerated => {
                    let probe = (next + 4 * dk).min(cap);
                    if probe == next {
                        // No room left to confirm; the passing diff stands.
                        break (next, f);
                    }
                    let f_probe = eval(probe, &mut history)?;
                    if (f_probe - f).abs() < precision {
                        break (probe, f_probe);
                    }
                    // False plateau: resume the walk from the probe.
                    dim = probe;
                    f_prev = f_probe;
                }
            }
        } else {
            dim = next;
            f_prev = f;
        }
    };

    let (dim_used, value) = accepted;
    let trace_deficit = 1.0 - state_trace(spec.encoding, spec.n, r, dim_used)?;
    Ok(QfiOutcome {
        value,
        dim_used,
        history,
        converged: true,
        precision,
        trace_deficit,
    })
}
