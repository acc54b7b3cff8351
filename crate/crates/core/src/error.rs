use thiserror::Error;

pub type Result<T> = std::result::Result<T, NrfError>;

#[derive(Debug, Error)]
pub enum NrfError {
    #[error("division by the zero rational function")]
    DivisionByZeroFunction,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("stability domain mismatch between operands")]
    DomainMismatch,
    #[error("matrix is singular over the rational functions")]
    SingularMatrix,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("transfer function is not proper")]
    NotProper,
    #[error("evaluation at a pole (point {0})")]
    EvaluationAtPole(String),
    #[error("realization is not stabilizable")]
    NotStabilizable,
    #[error("realization is not detectable")]
    NotDetectable,
    #[error("gains do not stabilize: {0}")]
    GainsNotStabilizing(String),
    #[error("plant is not strictly proper")]
    NotStrictlyProper,
    #[error("pole placement failed: {0}")]
    PlacementFailed(String),
    #[error("Youla parameter is unstable (poles {0})")]
    UnstableParameter(String),
    #[error("Y_Q is not invertible")]
    SingularDenominator,
    #[error("sparsity correspondence violated: {0}")]
    CorrespondenceViolation(String),
    #[error("diagonal part is not invertible with a proper inverse (entry {0})")]
    SingularDiagonal(usize),
    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),
    #[error("static coupling matrix is singular: {0}")]
    SingularCoupling(String),
    #[error("feedback loop is ill-posed")]
    IllPosedLoop,
    #[error("algebraic loop at a simulation step is singular")]
    IllPosedStep,
    #[error("simulation requires a discrete-time system")]
    NonDiscrete,
    #[error("closed-loop map is unstable, norm undefined")]
    UnstableMap,
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
