use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precision too low: {bits} bits requested, at least 64 required")]
    PrecisionTooLow { bits: u32 },

    #[error("precision exhausted in {context}: error bound {err:e} exceeds budget")]
    PrecisionExhausted { context: String, err: f64 },

    #[error("{p}/{q} is not in lowest terms")]
    NotLowestTerms { p: i64, q: u64 },

    #[error("h(n={n}, t={t}) is undefined: t is a multiple of F_n")]
    UndefinedIndex { n: u32, t: i64 },

    #[error("generalised product has a nonpositive term at index {index}")]
    NonPositiveTerm { index: i64 },

    #[error("singular angle: {0}")]
    SingularAngle(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("phase {alpha} outside the admissible range |alpha| <= {limit:e}")]
    OutOfRange { alpha: String, limit: f64 },

    #[error("q = {q} is not a convergent denominator of the given angle")]
    NotAConvergent { q: u64 },

    #[error("level {n} outside the supported range 1..={max}")]
    LevelOutOfRange { n: u32, max: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
