use thiserror::Error;

/// Errors surfaced by grid construction, assembly, solvers and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate grid: axis {axis} has only {count} usable interior nodes (need >= 3)")]
    DegenerateGrid { axis: usize, count: usize },

    #[error("grid is not symmetric: node {index} has no mirror node on axis {axis}")]
    AsymmetricGrid { axis: usize, index: usize },

    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("scale factor must be positive, got {0}")]
    NonpositiveScale(f64),

    #[error("fractional order s must lie in (0, 1), got {0}")]
    OrderOutOfRange(f64),

    #[error("exponent p = {p} is not admissible (need 1 < p < {limit})")]
    ExponentOutOfRange { p: f64, limit: f64 },

    #[error("lambda must be positive for the full norm, got {0}")]
    NonpositiveLambda(f64),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("input function is identically zero")]
    ZeroFunction,

    #[error("initial guess must be nonnegative")]
    NegativeInit,

    #[error("input must be nonnegative, min value {0}")]
    NegativeInput(f64),

    #[error("solve did not converge: residual {residual:.3e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },

    #[error("result is not a converged solve")]
    RequiresConverged,

    #[error("truncation radius {0} is too small (need L >= 20)")]
    TruncationTooSmall(f64),

    #[error("eigensolver failed: LAPACK info = {0}")]
    EigenFailed(i32),

    #[error("Cholesky factorization failed: matrix not positive definite (info = {0})")]
    FactorizationFailed(i32),

    #[error("input is one-signed; a sign-changing function is required")]
    OneSignedInput,

    #[error("all-zero profile")]
    AllZeroProfile,

    #[error("potential is not symmetric and monotone in |x1| (defect {0:.3e})")]
    AsymmetricPotential(f64),

    #[error("grid too coarse for boundary extrapolation (need depth 2h inside the domain)")]
    InsufficientDepth,

    #[error("grid transfer not supported: target grid is finer than the data supports")]
    GridTransfer,

    #[error("operation rejects p = 1 (identity degenerates)")]
    UnitExponent,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad function file: {0}")]
    BadFunctionFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
