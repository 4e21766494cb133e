//! Channel amplitudes, traced channel blocks, and truncated-Fock-space
//! assembly of the receiver's state and its θ-derivative.
//!
//! The amplification channel maps an input Fock state `|M⟩` to a two-mode
//! state with amplitudes `A^M_p = i^p tanh^p(r) / cosh^{M+1}(r) · C(p+M,p)^{1/2}`
//! on `|M+p⟩|p⟩`; tracing the inaccessible partner mode leaves the blocks
//! `K(m,m') = Tr₂[T|m⟩⟨m'|T†]`, which have entries only at `(m+p, m'+p)`.
//! Because the `i^p` phases cancel in every such product, all blocks are real.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::types::{Encoding, NoonSpec, Squeezing};

/// `table[k] = ln(k!)`, accumulated with Kahan compensation so late entries
/// carry no drift. Integer arguments only, which is all the amplitude
/// formula needs; avoids a lgamma dependency.
fn ln_factorials(len: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(len);
    table.push(0.0);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in 1..len {
        let y = (k as f64).ln() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        table.push(sum);
    }
    table
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// ln cosh(r) without overflow for any r ≥ 0.
fn ln_cosh(r: f64) -> f64 {
    r + (-2.0 * r).exp().ln_1p() - std::f64::consts::LN_2
}

/// Magnitudes `|A^M_p|` for p = 0..dim, computed in log space: direct
/// binomials overflow near p ≈ 170, far below the truncations needed at
/// r ≥ 2.
pub(crate) fn amp_magnitudes(input_n: u32, r: Squeezing, dim: usize) -> Vec<f64> {
    if r.is_zero() {
        let mut v = vec![0.0; dim];
        if dim > 0 {
            v[0] = 1.0;
        }
        return v;
    }
    let m = input_n as usize;
    let lnf = ln_factorials(dim + m + 1);
    let lt = r.value().tanh().ln();
    let lc = ln_cosh(r.value());
    (0..dim)
        .map(|p| {
            let ln_mag =
                p as f64 * lt - (m as f64 + 1.0) * lc + 0.5 * (lnf[p + m] - lnf[p] - lnf[m]);
            ln_mag.exp()
        })
        .collect()
}

/// The amplitude sequence of the amplification channel for one input Fock
/// state: `amps[p] = A^M_p` with `|A^M_p|` stored and the `i^p` phase applied
/// on access.
#[derive(Debug, Clone)]
pub struct UnruhAmplitudes {
    pub input_n: u32,
    mags: Vec<f64>,
}

impl UnruhAmplitudes {
    pub fn new(input_n: u32, r: Squeezing, dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::Domain("amplitude truncation must be >= 1".into()));
        }
        Ok(UnruhAmplitudes {
            input_n,
            mags: amp_magnitudes(input_n, r, dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.mags.len()
    }

    pub fn magnitude(&self, p: usize) -> f64 {
        self.mags[p]
    }

    /// `A^M_p` including the `i^p` phase.
    pub fn amp(&self, p: usize) -> Complex64 {
        let mag = self.mags[p];
        match p % 4 {
            0 => Complex64::new(mag, 0.0),
            1 => Complex64::new(0.0, mag),
            2 => Complex64::new(-mag, 0.0),
            _ => Complex64::new(0.0, -mag),
        }
    }

    /// `Σ_p |A^M_p|²` over the stored range; ≤ 1, → 1 as dim grows.
    pub fn partial_norm(&self) -> f64 {
        kahan_sum(self.mags.iter().map(|m| m * m))
    }
}

/// Basis tag carried by every assembled matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Single-mode Fock basis `|0⟩..|dim-1⟩`.
    OneMode { dim: usize },
    /// Two-mode Fock basis, row-major: `|j₁⟩|j₂⟩ ↦ j₁·d + j₂`.
    TwoMode { dim_per_mode: usize },
    /// Eigenbasis of a previously decomposed state.
    Eigen { dim: usize },
}

impl Basis {
    pub fn matrix_dim(self) -> usize {
        match self {
            Basis::OneMode { dim } => dim,
            Basis::TwoMode { dim_per_mode } => dim_per_mode * dim_per_mode,
            Basis::Eigen { dim } => dim,
        }
    }
}

/// A Hermitian matrix in a tagged basis. Hermiticity holds exactly: builders
/// write each off-diagonal pair from one scalar and its conjugate, never by
/// symmetrizing after the fact.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    mat: DMatrix<Complex64>,
    basis: Basis,
}

impl HermitianMatrix {
    /// Wraps a caller-built matrix, rejecting anything not exactly Hermitian.
    pub fn new(mat: DMatrix<Complex64>, basis: Basis) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() != basis.matrix_dim() {
            return Err(Error::BasisMismatch(format!(
                "matrix is {}x{} but basis implies dimension {}",
                mat.nrows(),
                mat.ncols(),
                basis.matrix_dim()
            )));
        }
        for i in 0..mat.nrows() {
            for j in 0..=i {
                if mat[(i, j)] != mat[(j, i)].conj() {
                    return Err(Error::BasisMismatch(format!(
                        "entry ({i},{j}) is not the conjugate of ({j},{i})"
                    )));
                }
            }
        }
        Ok(HermitianMatrix { mat, basis })
    }

    pub(crate) fn from_parts(mat: DMatrix<Complex64>, basis: Basis) -> Self {
        debug_assert_eq!(mat.nrows(), basis.matrix_dim());
        HermitianMatrix { mat, basis }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn trace_real(&self) -> f64 {
        kahan_sum((0..self.dim()).map(|i| self.mat[(i, i)].re))
    }

    /// Largest entrywise deviation from `m = m†`; zero for every matrix this
    /// crate constructs.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..=i {
                let d = (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// The traced channel block `K(m, m') = Tr₂[T|m⟩⟨m'|T†]`: entries only at
/// `(m+p, m'+p)`, each the real nonnegative product `|A^m_p||A^{m'}_p|`
/// (the `i^p` phases cancel). `K(m,m')ᵀ = K(m',m)`; `K(m,m)` is diagonal.
pub fn channel_block(m: u32, m_prime: u32, r: Squeezing, dim: usize) -> Result<DMatrix<f64>> {
    if dim < 1 {
        return Err(Error::Domain("channel block dimension must be >= 1".into()));
    }
    let row_mags = amp_magnitudes(m, r, dim);
    let col_mags = amp_magnitudes(m_prime, r, dim);
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    let mut p = 0usize;
    while m as usize + p < dim && m_prime as usize + p < dim {
        k[(m as usize + p, m_prime as usize + p)] = row_mags[p] * col_mags[p];
        p += 1;
    }
    Ok(k)
}

/// Shared scalar ingredients of the single-rail state: `|A^0_p|`, `|A^N_p|`,
/// and the coherence phase.
struct SingleParts {
    m0: Vec<f64>,
    mn: Vec<f64>,
    phase: Complex64,
    n: usize,
}

impl SingleParts {
    fn build(n: u32, theta: f64, r: Squeezing, dim: usize) -> Self {
        let angle = n as f64 * theta;
        SingleParts {
            m0: amp_magnitudes(0, r, dim),
            mn: amp_magnitudes(n, r, dim),
            phase: Complex64::new(angle.cos(), angle.sin()),
            n: n as usize,
        }
    }

    /// Diagonal of ρ at Fock index j: `½(|A^0_j|² + |A^N_{j-N}|²)`.
    fn diag(&self, j: usize) -> f64 {
        let mut d = 0.5 * self.m0[j] * self.m0[j];
        if j >= self.n {
            d += 0.5 * self.mn[j - self.n] * self.mn[j - self.n];
        }
        d
    }

    /// Magnitude of the coherence entry at `(N+p, p)`.
    fn coh(&self, p: usize) -> f64 {
        0.5 * self.mn[p] * self.m0[p]
    }
}

fn check_dims(n: u32, dim: usize) -> Result<()> {
    if dim <= n as usize {
        return Err(Error::DimensionTooSmall { dim, n });
    }
    Ok(())
}

fn assemble_single(n: u32, theta: f64, r: Squeezing, dim: usize, derivative: bool) -> HermitianMatrix {
    let parts = SingleParts::build(n, theta, r, dim);
    // d/dθ e^{iNθ} = iN e^{iNθ}: the derivative keeps the coherence support
    // and drops the θ-independent diagonal.
    let factor = if derivative {
        Complex64::new(0.0, n as f64) * parts.phase
    } else {
        parts.phase
    };
    let mut mat = DMatrix::<Complex64>::zeros(dim, dim);
    if !derivative {
        for j in 0..dim {
            mat[(j, j)] = Complex64::new(parts.diag(j), 0.0);
        }
    }
    for p in 0..dim - n as usize {
        let v = factor * parts.coh(p);
        mat[(n as usize + p, p)] = v;
        mat[(p, n as usize + p)] = v.conj();
    }
    HermitianMatrix::from_parts(mat, Basis::OneMode { dim })
}

/// `ρ = ½[K(0,0) + K(N,N) + e^{iNθ}K(N,0) + e^{-iNθ}K(0,N)]` truncated to
/// `dim`: the single-rail NOON state after the channel and partial trace.
pub fn rob_state_single(spec: &NoonSpec, r: Squeezing, dim: usize) -> Result<HermitianMatrix> {
    if spec.encoding != Encoding::SingleRail {
        return Err(Error::Domain("rob_state_single requires the single-rail encoding".into()));
    }
    check_dims(spec.n, dim)?;
    Ok(assemble_single(spec.n, spec.theta, r, dim, false))
}

struct DualParts {
    /// `w[p] = |A^N_p||A^0_p|`, the scalar in every coherence entry.
    w: Vec<f64>,
    /// `k00[j] = |A^0_j|²`.
    k00: Vec<f64>,
    /// `knn[j] = |A^N_{j-N}|²` for j ≥ N, else 0.
    knn: Vec<f64>,
    phase: Complex64,
}

impl DualParts {
    fn build(n: u32, theta: f64, r: Squeezing, d: usize) -> Self {
        let m0 = amp_magnitudes(0, r, d);
        let mn = amp_magnitudes(n, r, d);
        let angle = n as f64 * theta;
        let nn = n as usize;
        DualParts {
            w: (0..d).map(|p| mn[p] * m0[p]).collect(),
            k00: m0.iter().map(|x| x * x).collect(),
            knn: (0..d)
                .map(|j| if j >= nn { mn[j - nn] * mn[j - nn] } else { 0.0 })
                .collect(),
            phase: Complex64::new(angle.cos(), angle.sin()),
        }
    }

    /// Two-mode diagonal at `(j₁, j₂)`: `½(knn[j₁]k00[j₂] + k00[j₁]knn[j₂])`.
    fn diag(&self, j1: usize, j2: usize) -> f64 {
        0.5 * (self.knn[j1] * self.k00[j2] + self.k00[j1] * self.knn[j2])
    }
}

fn assemble_dual(n: u32, theta: f64, r: Squeezing, d: usize, derivative: bool) -> HermitianMatrix {
    let parts = DualParts::build(n, theta, r, d);
    let factor = if derivative {
        Complex64::new(0.0, n as f64) * parts.phase
    } else {
        parts.phase
    };
    let nn = n as usize;
    let total = d * d;
    let mut mat = DMatrix::<Complex64>::zeros(total, total);
    if !derivative {
        for j1 in 0..d {
            for j2 in 0..d {
                let idx = j1 * d + j2;
                mat[(idx, idx)] = Complex64::new(parts.diag(j1, j2), 0.0);
            }
        }
    }
    // e^{iNθ} K(0,N)⊗K(N,0): mode 1 loses N excitations, mode 2 gains them,
    // so the entry connects |j₁, j₂+N⟩⟨j₁+N, j₂| — total photon number is
    // conserved across every coherence.
    for j1 in 0..d - nn {
        for j2 in 0..d - nn {
            let v = factor * (0.5 * parts.w[j1] * parts.w[j2]);
            let row = j1 * d + (j2 + nn);
            let col = (j1 + nn) * d + j2;
            mat[(row, col)] = v;
            mat[(col, row)] = v.conj();
        }
    }
    HermitianMatrix::from_parts(mat, Basis::TwoMode { dim_per_mode: d })
}

/// `ρ = ½[K(N,N)⊗K(0,0) + K(0,0)⊗K(N,N) + e^{iNθ}K(0,N)⊗K(N,0) + h.c.]`:
/// the dual-rail NOON state, each mode sent through its own independent
/// channel. Block diagonal over total-photon-number sectors.
pub fn rob_state_dual(spec: &NoonSpec, r: Squeezing, dim_per_mode: usize) -> Result<HermitianMatrix> {
    if spec.encoding != Encoding::DualRail {
        return Err(Error::Domain("rob_state_dual requires the dual-rail encoding".into()));
    }
    check_dims(spec.n, dim_per_mode)?;
    Ok(assemble_dual(spec.n, spec.theta, r, dim_per_mode, false))
}

/// Analytic `ρ' = dρ/dθ`: the θ-independent blocks vanish and each coherence
/// block is scaled by `±iN`. Traceless exactly (its diagonal is never
/// written).
///
/// `dim` is the per-mode truncation for the dual rail, the total truncation
/// for the single rail, matching the corresponding state builder.
pub fn rob_state_derivative(spec: &NoonSpec, r: Squeezing, dim: usize) -> Result<HermitianMatrix> {
    check_dims(spec.n, dim)?;
    Ok(match spec.encoding {
        Encoding::SingleRail => assemble_single(spec.n, spec.theta, r, dim, true),
        Encoding::DualRail => assemble_dual(spec.n, spec.theta, r, dim, true),
    })
}

/// Trace of the truncated state, summed from the closed-form diagonal without
/// materializing the matrix. The deficit `1 - trace` is the truncation
/// witness reported alongside converged QFI values.
pub fn state_trace(encoding: Encoding, n: u32, r: Squeezing, dim: usize) -> Result<f64> {
    check_dims(n, dim)?;
    let m0 = amp_magnitudes(0, r, dim);
    let mn = amp_magnitudes(n, r, dim);
    let norm0 = kahan_sum(m0.iter().map(|x| x * x));
    let normn = kahan_sum(mn.iter().take(dim - n as usize).map(|x| x * x));
    Ok(match encoding {
        Encoding::SingleRail => 0.5 * (norm0 + normn),
        Encoding::DualRail => norm0 * normn,
    })
}

/// One diagonal block of (ρ, ρ') in a symmetry sector.
pub(crate) struct StateBlock {
    pub rho: DMatrix<Complex64>,
    pub drho: DMatrix<Complex64>,
}

/// Single-rail block decomposition: ρ couples Fock indices only across
/// differences {-N, 0, +N}, so each residue class mod N is an invariant
/// subspace on which (ρ, ρ') are tridiagonal.
pub(crate) fn single_rail_blocks(n: u32, theta: f64, r: Squeezing, dim: usize) -> Vec<StateBlock> {
    let parts = SingleParts::build(n, theta, r, dim);
    let nn = n as usize;
    let dfactor = Complex64::new(0.0, n as f64) * parts.phase;
    let mut out = Vec::with_capacity(nn);
    for residue in 0..nn {
        let idx: Vec<usize> = (residue..dim).step_by(nn).collect();
        let len = idx.len();
        let mut rho = DMatrix::<Complex64>::zeros(len, len);
        let mut drho = DMatrix::<Complex64>::zeros(len, len);
        for (a, &j) in idx.iter().enumerate() {
            rho[(a, a)] = Complex64::new(parts.diag(j), 0.0);
        }
        for a in 1..len {
            let p = idx[a - 1]; // row index idx[a] = p + N
            let v = parts.coh(p);
            rho[(a, a - 1)] = parts.phase * v;
            rho[(a - 1, a)] = (parts.phase * v).conj();
            drho[(a, a - 1)] = dfactor * v;
            drho[(a - 1, a)] = (dfactor * v).conj();
        }
        out.push(StateBlock { rho, drho });
    }
    out
}

/// Dual-rail block decomposition over total-photon-number sectors. Sector
/// `s` has basis `(j, s-j)` for `j = max(0, s-d+1)..=min(s, d-1)`; the
/// sector matrices are built directly from the block profiles, never from a
/// dense two-mode product.
pub(crate) fn dual_rail_sectors(n: u32, theta: f64, r: Squeezing, d: usize) -> Vec<StateBlock> {
    let parts = DualParts::build(n, theta, r, d);
    let nn = n as usize;
    let dfactor = Complex64::new(0.0, n as f64) * parts.phase;
    let mut out = Vec::with_capacity(2 * d - 1);
    for s in 0..(2 * d - 1) {
        let jlo = s.saturating_sub(d - 1);
        let jhi = s.min(d - 1);
        let len = jhi - jlo + 1;
        let mut rho = DMatrix::<Complex64>::zeros(len, len);
        let mut drho = DMatrix::<Complex64>::zeros(len, len);
        for a in 0..len {
            let j = jlo + a;
            let k = s - j;
            rho[(a, a)] = Complex64::new(parts.diag(j, k), 0.0);
            // Coherence partner within the sector: (j, k) ↔ (j+N, k-N); the
            // +Nθ phase sits on the row whose first-mode index is smaller,
            // matching the dense assembly.
            if j + nn <= jhi && k >= nn {
                let b = a + nn;
                let v = 0.5 * parts.w[j] * parts.w[k - nn];
                rho[(a, b)] = parts.phase * v;
                rho[(b, a)] = (parts.phase * v).conj();
                drho[(a, b)] = dfactor * v;
                drho[(b, a)] = (dfactor * v).conj();
            }
        }
        out.push(StateBlock { rho, drho });
    }
    out
}

pub(crate) fn state_blocks(spec: &NoonSpec, r: Squeezing, dim: usize) -> Result<Vec<StateBlock>> {
    check_dims(spec.n, dim)?;
    Ok(match spec.encoding {
        Encoding::SingleRail => single_rail_blocks(spec.n, spec.theta, r, dim),
        Encoding::DualRail => dual_rail_sectors(spec.n, spec.theta, r, dim),
    })
}
