use thiserror::Error;

/// Library error type. Every variant is a domain/constraint violation;
/// none of them are internal invariant failures (those panic).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("outcome has {got} modes but the network has {expected} detector modes")]
    OutcomeArity { got: usize, expected: usize },

    #[error("outcome total {got} does not match the required particle count {expected}")]
    OutcomeTotal { got: u32, expected: u32 },

    #[error("detected count M={m} exceeds the emitted total N={n}")]
    TooManyDetected { m: u32, n: u32 },

    #[error("source has {got} modes but the network kind '{kind}' needs {expected}")]
    SourceArity {
        got: usize,
        expected: usize,
        kind: String,
    },

    #[error("geometry '{kind}': {reason}")]
    GeometryMismatch { kind: String, reason: String },

    #[error("unknown geometry tag '{0}'")]
    UnknownGeometry(String),

    #[error("transmission must lie in [0,1], got {0}")]
    InvalidTransmission(f64),

    #[error("brute-force oracle refuses N={n} (limit {limit}); use the main engine instead")]
    OracleTooLarge { n: u32, limit: u32 },

    #[error("N={n} is not divisible by 3")]
    NotDivisibleBy3 { n: u32 },

    #[error("no sign contradiction available: N/3={k} is even")]
    ContradictionNeedsOddThird { k: u32 },

    #[error("N={n} is odd; this quantity needs N even")]
    NeedsEvenN { n: u32 },

    #[error("N/2={k} is even; the impossibility chain needs N/2 odd")]
    NeedsOddHalf { k: u32 },

    #[error("M={m} out of range 0..={n}")]
    MOutOfRange { m: u32, n: u32 },

    #[error("state vector is not normalized: sum |x_q|^2 = {norm}")]
    NotNormalized { norm: f64 },

    #[error("state vector must have N+1 = {expected} coefficients, got {got}")]
    StateArity { got: usize, expected: usize },

    #[error("pixel assignment reuses pixel index {0}")]
    DuplicatePixel(usize),

    #[error("pixel index {idx} out of range for a model with {count} pixels")]
    PixelOutOfRange { idx: usize, count: usize },

    #[error("requested counts ({m1},{m2}) exceed the pixel budget {q}")]
    CountsExceedPixels { m1: u64, m2: u64, q: u64 },

    #[error("time {t} outside [0, {t_end}]")]
    TimeOutOfRange { t: f64, t_end: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
