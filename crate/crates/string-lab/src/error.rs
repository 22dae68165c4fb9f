use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("grid needs at least {min} cells, got {n_cells}")]
    GridTooCoarse { n_cells: usize, min: usize },

    #[error("field length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular tridiagonal system at row {row}")]
    SingularSystem { row: usize },

    #[error("discrete residual {residual:e} exceeds {limit:e}")]
    ResidualCheck { residual: f64, limit: f64 },

    #[error("phi is not positive at node {node}")]
    NonPositivePhi { node: usize },

    #[error("|v0| = {norm} < 0.5 at node {node}")]
    Degenerate { node: usize, norm: f64 },

    #[error("Jacobian not diagonally dominant after {halvings} halvings of delta")]
    JacobianSingular { halvings: usize },

    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("theta_0 = {theta} is below the margin {margin}")]
    ThetaBelowMargin { theta: f64, margin: f64 },

    #[error("need at least {needed} snapshots, found {found}")]
    InsufficientSnapshots { needed: usize, found: usize },

    #[error("snapshots are not uniformly spaced")]
    NonUniformSnapshots,

    #[error("no oscillation detected")]
    NoOscillation,

    #[error("stability collapse at t = {t}: margin {margin}")]
    StabilityCollapse { t: f64, margin: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
