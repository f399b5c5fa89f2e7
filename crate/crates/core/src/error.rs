use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {0}: qudit dimension must be at least 2")]
    InvalidDimension(usize),

    #[error("unsupported dimension {d}: {reason}")]
    UnsupportedDimension { d: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("degenerate state: all amplitudes are zero")]
    DegenerateState,

    #[error("invalid phase at index {index}: |theta| = {modulus} (must be 1)")]
    InvalidPhase { index: usize, modulus: f64 },

    #[error("invalid exponents ({i}, {j}) for d = {d}: need 1 <= i <= d-2 and i + j = d-1")]
    ExponentConstraint { d: usize, i: usize, j: usize },

    #[error("monomial exponents {0:?} do not sum to d-1")]
    MonomialDegree((u32, u32)),

    #[error("noise proportion {0} outside [0, 1]")]
    NoiseOutOfRange(f64),

    #[error("no violation: v = {0} < 1")]
    NoViolation(f64),

    #[error("security criterion undefined: d * F_A = {0} <= 1")]
    CriterionUndefined(f64),

    #[error("distribution not normalized: total mass {0}")]
    Unnormalized(f64),

    #[error("insufficient data: no samples for basis pairs {}", format_pairs(.0))]
    InsufficientData(Vec<(usize, usize)>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

fn format_pairs(pairs: &[(usize, usize)]) -> String {
    pairs
        .iter()
        .map(|(a, b)| format!("(a={a}, b={b})"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
