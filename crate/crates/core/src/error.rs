use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("feasible set is empty")]
    EmptyFeasibleSet,

    #[error("feasible set is unbounded")]
    UnboundedSet,

    #[error("enumeration budget exceeded: {candidates} candidates, cap {cap}")]
    BudgetExceeded { candidates: u128, cap: u64 },

    #[error("every vertex is optimal; the suboptimality gap is undefined")]
    AllVerticesOptimal,

    /// The active-set loop did not terminate; `best` is the last feasible iterate.
    #[error("active-set solver did not converge in {iterations} iterations")]
    MaxIterationsExceeded { iterations: usize, best: Vec<f64> },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("path tracer exceeded {0} segments")]
    MaxSegmentsExceeded(usize),

    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    #[error("cost matrix is not square")]
    NonSquareCost,

    #[error("cost matrix contains a non-finite entry")]
    NaNInCost,

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
