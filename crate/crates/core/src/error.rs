use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    SingularMatrix { condition: f64 },

    #[error("point {point:?} lies outside the chart domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("gradient norm {norm:.3e} is below the critical-point threshold {threshold:.3e}")]
    CriticalPoint { norm: f64, threshold: f64 },

    #[error("time {t} is outside the trajectory span [{start}, {end}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },

    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("maximum number of integration steps ({0}) exceeded")]
    TooManySteps(usize),

    #[error("gradient norm failed to decrease over an output window ending at t = {t}")]
    NonConvergence { t: f64 },

    #[error("level {level} is not reachable along the requested direction within the chart")]
    LevelUnreachable { level: f64 },

    #[error("degenerate level: {0}")]
    DegenerateLevel(String),

    #[error("potential has no registered minimizer")]
    MissingMinimizer,

    #[error("submanifold tangent basis is rank-deficient at the requested point")]
    DegenerateTangent,

    #[error("Hessian of the potential is not positive definite at {point:?}")]
    NonConvex { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("closed form is singular at this point: {0}")]
    Singularity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("root finding did not converge: {0}")]
    RootNotFound(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn to_f64_vec<T: num_traits::ToPrimitive>(x: &[T]) -> Vec<f64> {
    x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
}
