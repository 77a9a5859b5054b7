use thiserror::Error;

/// Failure modes of the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no degenerate eigenvalue pair at the vertex within tolerance (smallest gap {smallest_gap:e})")]
    NoDiracPoint { smallest_gap: f64 },

    #[error("degenerate pair ({lower}, {upper}) has rotation eigenvalues {eigenvalues:?}, expected tau and conj(tau)")]
    WrongSymmetrySector {
        lower: usize,
        upper: usize,
        eigenvalues: [(f64, f64); 2],
    },

    #[error("Dirac velocity extractions disagree: relative mismatch {mismatch:e}")]
    SymmetryClassification { mismatch: f64 },

    #[error("Dirac velocity vanishes (|lambda| = {modulus:e}); standing assumption violated")]
    AssumptionViolated { modulus: f64 },

    #[error("band tracking failed at radius {radius:e}: a third band enters the cone window")]
    TrackingFailure { radius: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (matrix size {size}, max |H_ij| {scale:e})")]
    EigenNonConvergence {
        iterations: usize,
        size: usize,
        scale: f64,
    },

    #[error("partial resolvent ill-conditioned: spectral margin {margin:e} at eigenvalue {eigenvalue}")]
    IllConditionedResolvent { margin: f64, eigenvalue: f64 },

    #[error("iterative solve stalled: residual {residual:e} after {iterations} iterations")]
    SolverStalled { residual: f64, iterations: usize },

    #[error("quadrature not converged under refinement: change {change:e}")]
    Resolution { change: f64 },

    #[error("solvability residual {residual:e} exceeds tolerance; amplitudes do not solve the Dirac system")]
    AlphaNotASolution { residual: f64 },

    #[error("grid is not commensurate: {0}")]
    NonCommensurate(String),

    #[error("blow-up detected at t = {time}: sup|field| = {sup:e}")]
    BlowUp { time: f64, sup: f64 },

    #[error("time grid mismatch: {0}")]
    TimeGridMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
