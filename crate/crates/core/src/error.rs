use thiserror::Error;

/// Errors produced by the phase routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operation undefined for the zero matrix")]
    ZeroMatrix,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("matrix is not quasi-sectorial")]
    NotQuasiSectorial,
    #[error("matrix is not rotated Hermitian")]
    NotRotatedHermitian,
    #[error("matrix is not semi-sectorial")]
    NotSemiSectorial,

    #[error("invalid phase cone [{alpha}, {beta}]: need 0 <= beta - alpha < 2pi")]
    InvalidCone { alpha: f64, beta: f64 },
    #[error("compression matrix does not have full column rank")]
    RankDeficientX,
    #[error("compression is the zero matrix")]
    ZeroCompression,
    #[error("range condition of the generalized Schur complement violated (residual {residual:.3e})")]
    RangeConditionViolated { residual: f64 },
    #[error("partition size {k} out of range for {n}x{n} matrix")]
    BadPartition { k: usize, n: usize },
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("first factor is not quasi-sectorial")]
    NotQuasiSectorialA,
    #[error("second factor does not have computable semi-sectorial phases")]
    NotSemiSectorialB,
    #[error("cone satisfies the small phase condition; no singular witness exists")]
    ConditionNotViolated,
    #[error("witness search failed (best sigma_min {best_sigma_min:.3e})")]
    SearchFailed { best_sigma_min: f64 },

    #[error("scaled matrix DM is not quasi-sectorial")]
    ScaledNotQuasiSectorial,
    #[error("matrix is not an M-matrix: {0}")]
    NotMMatrix(String),
    #[error("nonnegative part is reducible")]
    Reducible,
    #[error("inner solver exceeded its iteration budget (best lambda_min {best:.3e})")]
    MaxIterExceeded { best: f64 },
    #[error("no upper bound available: supply one for matrices that are not irreducible M-matrices")]
    NoUpperBound,
    #[error("upper bound {0} is not certified feasible")]
    UpperBoundInfeasible(f64),
    #[error("inner solver failed at bisection iteration {iteration}: {message}")]
    InnerSolverFailure { iteration: usize, message: String },

    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("graph has no spanning tree")]
    NoSpanningTree,
    #[error("internal classification failure: {0}")]
    InternalClassificationFailure(String),

    #[error("line {line}: {message}")]
    BadLine { line: usize, message: String },
    #[error("line {line}: edge weight must be positive")]
    NonPositiveWeight { line: usize },
    #[error("line {line}: duplicate edge {src} -> {dst}")]
    DuplicateEdge { line: usize, src: usize, dst: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
