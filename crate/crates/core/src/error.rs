use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("derivative nesting depth {requested} exceeds the supported maximum of {max}")]
    UnsupportedOrder { requested: usize, max: usize },

    #[error("non-finite value while evaluating at x = {x:?}, y = {y:?}")]
    NonFinite { x: Vec<f64>, y: Vec<f64> },

    #[error("tangent vector is too close to zero (|y| = {norm:e}); Finsler data is only smooth off the zero section")]
    ZeroVector { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid coordinates: {0}")]
    InvalidCoordinates(String),

    #[error("matrix is singular")]
    Singular,

    #[error("matrix condition number {cond:e} exceeds the guard {limit:e}")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("fundamental tensor is not positive definite at x = {x:?}, y = {y:?}")]
    ConvexityViolation { x: Vec<f64>, y: Vec<f64> },

    #[error("x = {x:?} lies outside the admissible domain: {reason}")]
    Domain { x: Vec<f64>, reason: String },

    #[error("the two vectors do not span a plane")]
    DegeneratePlane,

    #[error("flag pole and transverse vector are parallel")]
    DegenerateFlag,

    #[error("deformation loses positivity: 1 - kappa(b^2) b^2 = {value:e}")]
    Positivity { value: f64 },

    #[error("the 1-form vanishes at x = {x:?}; theta/tau extraction is underdetermined")]
    Underdetermined { x: Vec<f64> },

    #[error("least-squares normal equations are rank deficient")]
    RankDeficient,

    #[error("Hessian of the potential is not positive definite at x = {x:?}")]
    IndefiniteHessian { x: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown metric identifier `{0}`")]
    UnknownMetric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
