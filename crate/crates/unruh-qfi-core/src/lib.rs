//! Quantum Fisher information of NOON states through the Unruh amplification
//! channel.
//!
//! An inertial sender prepares a single- or dual-rail NOON state carrying a
//! phase θ and transmits it to a uniformly accelerated receiver. Acceleration
//! acts on each mode as a two-mode squeezing (amplification) channel with
//! noise parameter `r`; tracing out the causally disconnected partner mode
//! leaves a mixed state whose quantum Fisher information about θ this crate
//! computes, together with the parameter studies built on top of it:
//! QFI-vs-N and QFI-vs-r sweeps, the optimal-N search, the exponential decay
//! fit `F = N² exp(-aN + b)`, and the slope of `a(r)`.
//!
//! - [`types`] — squeezing, mode frequencies, NOON specs.
//! - [`fock`] — channel amplitudes, traced channel blocks, state assembly.
//! - [`qfi`] — eigendecomposition, SLD lowering, truncation convergence.
//! - [`study`] — sweeps, optimal N, decay fits, Cramér-Rao helper.
//! - [`cache`] — append-only result store for sweep points.

pub mod cache;
pub mod error;
pub mod fock;
pub mod qfi;
pub mod study;
pub mod types;

pub use cache::Cache;
pub use error::{Error, Result};
pub use fock::{
    channel_block, rob_state_derivative, rob_state_dual, rob_state_single, state_trace, Basis,
    HermitianMatrix, UnruhAmplitudes,
};
pub use qfi::{
    default_dim_cap, eigh, initial_dim, qfi_at_dim, qfi_at_dim_dense, qfi_converged,
    qfi_from_pair, qfi_lyapunov_dense, sld_lower, ConvergenceConfig, QfiOutcome, Schedule,
    Spectrum,
};
pub use study::{
    compute_point, cramer_rao_bound, fit_decay, optimal_n, slope_of_a, sweep_over_n,
    sweep_over_r, theta_spread, FitResult, OptimalN, SlopeResult, StudyConfig, SweepPoint,
    FIT_CSV_HEADER, SWEEP_CSV_HEADER,
};
pub use types::{fmt_g17, Encoding, ModeSpec, NoonSpec, Squeezing};
