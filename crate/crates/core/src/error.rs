use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown irrational basis name `{0}`")]
    UnknownBasisName(String),
    #[error("duplicate irrational basis name `{0}`")]
    DuplicateBasisName(String),
    #[error("basis entry `{name}` is only known to {available} bits, {requested} requested")]
    PrecisionUnavailable {
        name: String,
        available: u32,
        requested: u32,
    },
    #[error("could not decide rounding within {0} bits of precision")]
    PrecisionExhausted(u32),
    #[error("iterate {0} is degenerate (some k*lambda_j is an integer)")]
    DegenerateIterate(u64),
    #[error("loop part of iterate {0} is undefined (some k*lambda_j is a half-integer)")]
    LoopPartUndefined(u64),
    #[error("rotation spectrum is fully rational: the base group is finite")]
    FullyRationalSpectrum,
    #[error("path is not toric: base group has dimension {dim} < n = {n}")]
    NotToric { dim: usize, n: usize },
    #[error("expected n = 2 and dim = 1, got n = {n} and dim = {dim}")]
    WrongDimension { n: usize, dim: usize },
    #[error("relation ({0}, {1}) has a zero entry: some rotation number is rational")]
    DegenerateSlope(i128, i128),
    #[error("classification is only available for N in {{2, 3}}, got N = {n}{note}")]
    UnsupportedN { n: u64, note: String },
    #[error("hypotheses of the component residue argument are not met: {0}")]
    HypothesesNotMet(String),
    #[error("matrix input is degenerate: {0}")]
    DegenerateInput(String),
    #[error("no Lagrangian complement transverse to all graphs found after {0} attempts")]
    ComplementNotFound(usize),
    #[error("eigenvalue {value:e} lies within tolerance {tol:e} of zero; signature is ambiguous")]
    SingularEigenvalue { value: f64, tol: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("integer overflow in lattice arithmetic")]
    Overflow,
}

pub type Result<T> = std::result::Result<T, Error>;
