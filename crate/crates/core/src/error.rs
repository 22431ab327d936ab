use thiserror::Error;

/// Errors raised anywhere in the gap pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("no convergence in {context} after {iterations} iterations")]
    NonConvergence { context: String, iterations: usize },

    #[error("degenerate Riccati profile: {0}")]
    DegenerateProfile(String),

    #[error("{count} turning points detected (expected exactly one); refine the sample grid")]
    MultipleTurningPoints { count: usize },

    #[error("invariant violated: {check} (value {value:e}, at s = {at})")]
    InvariantViolation { check: String, value: f64, at: f64 },

    #[error("drift velocity requested without a principal eigenfunction")]
    MissingEigenfunction,

    #[error("principal eigenfunction is not positive at node {node} (u0 = {value:e})")]
    NonPositiveEigenfunction { node: usize, value: f64 },

    #[error("manufactured solution is not positive at ({x}, {y})")]
    NonPositiveManufacturedSolution { x: f64, y: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("cell Peclet number max|B|*h = {0} must stay below 2")]
    CellPeclet(f64),

    #[error("converged principal vector changes sign at node {0}")]
    SignInconsistency(usize),

    #[error("spectrum holds no eigenvalue besides the principal one")]
    GapUndefined,

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("singular pivot {pivot:e} at row {row} during factorization")]
    SingularPivot { row: usize, pivot: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
