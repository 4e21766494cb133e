use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physically meaningless input (negative squeezing, zero frequency, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Truncation too small to hold the state support (dim must exceed N).
    #[error("truncation dimension {dim} cannot represent excitation number {n}")]
    DimensionTooSmall { dim: usize, n: u32 },

    /// An eigenvalue fell below the PSD noise floor: the matrix is not a
    /// valid (possibly truncated) density matrix, i.e. a construction bug.
    #[error("invalid state: eigenvalue {value:.3e} below tolerance -{tolerance:.3e}")]
    InvalidState { value: f64, tolerance: f64 },

    /// Operands live in different bases or truncations.
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    /// The dimension cap was reached before the QFI settled. Carries the full
    /// evaluation history for post-mortem inspection.
    #[error("convergence failure: dimension cap {cap} reached, last qfi {last:.6e} (history: {} evaluations)", history.len())]
    ConvergenceFailure {
        cap: usize,
        last: f64,
        history: Vec<(usize, f64)>,
    },

    /// The optimal-N scan hit its upper bound before the stopping rule fired.
    #[error("optimal-N scan reached cap {cap} without passing the maximum (best so far: N={n_star}, qfi={f_star:.6e})")]
    ScanCapReached { cap: u32, n_star: u32, f_star: f64 },

    /// Fewer usable data points than the operation needs.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Cramér-Rao bound requested for a state carrying no information.
    #[error("uncertainty unbounded: quantum Fisher information is zero")]
    UnboundedUncertainty,

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
