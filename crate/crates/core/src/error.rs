use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh needs at least 2 cells, got {0}")]
    MeshTooSmall(usize),

    #[error("step initial condition needs an even cell count so x = 1/2 is a node, got {0}")]
    OddCellCount(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mesh mismatch: vectors live on meshes with {left} and {right} cells")]
    MeshMismatch { left: usize, right: usize },

    #[error("singular pivot {pivot:e} at row {row}")]
    SingularPivot { row: usize, pivot: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("Newton failed at step {step}: residual {residual:e} after {iterations} iterations")]
    NewtonDiverged {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("Picard iteration failed: residual {residual:e} after {iterations} iterations")]
    PicardDiverged { iterations: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("snapshot set is empty or too small ({0} snapshots, need at least 2)")]
    TooFewSnapshots(usize),

    #[error("all snapshots are zero; POD is undefined")]
    ZeroSnapshots,

    #[error("mode index {m} out of range 1..={d}")]
    ModeOutOfRange { m: usize, d: usize },

    #[error("requested {count} spectral modes but only {n_dof} degrees of freedom exist")]
    SpectralCountOutOfRange { count: usize, n_dof: usize },

    #[error("sequence length {len} does not match n + 1 = {}", n + 1)]
    LengthMismatch { len: usize, n: usize },

    #[error("quadrature node {index} at t = {time} does not coincide with a recorded snapshot")]
    Misaligned { index: usize, time: f64 },

    #[error("time {0} is not a recorded snapshot time")]
    TimeNotRecorded(f64),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
