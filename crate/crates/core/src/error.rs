use thiserror::Error;

/// Errors raised by the pointwise algebra, the field operators, the flow and the CLI.
#[derive(Debug, Error)]
pub enum GkError {
    #[error("I and J do not induce the same orientation (self-duality residual {residual:.3e})")]
    OrientationMismatch { residual: f64 },

    #[error("structure is degenerate: |p| = {p_abs:.6} exceeds limit {limit:.6}")]
    DegenerateStructure { p_abs: f64, limit: f64 },

    #[error("form-pair constraint violated: {what} residual {residual:.3e}")]
    ConstraintViolation { what: &'static str, residual: f64 },

    #[error("operator not defined for a {rank}-form")]
    RankError { rank: usize },

    #[error("metric is singular: min det {min_det:.3e} below threshold {threshold:.3e}")]
    SingularMetric { min_det: f64, threshold: f64 },

    #[error("trajectory moved {moved:.3e} in one substep, limit {limit:.3e}")]
    StepTooLarge { moved: f64, limit: f64 },

    #[error("generalized Kahler validation failed: {0}")]
    ValidationFailed(String),

    #[error("constraint drift {residual:.3e} exceeds threshold {threshold:.3e} at t = {t}")]
    ConstraintDrift { residual: f64, threshold: f64, t: f64 },

    #[error("step rejected: sup|p| = {p_abs:.6} exceeds p_max {p_max:.6}")]
    StepRejected { p_abs: f64, p_max: f64 },

    #[error("reconstructed metric is not positive definite")]
    MetricNotPositive,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GkError>;
