use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("convolution integral diverges for exponents {left} and {right}")]
    DivergentConvolution { left: String, right: String },
    #[error("parity error: {0}")]
    Parity(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("polynomial division left a remainder: {0}")]
    InexactDivision(String),
    #[error("pair count mismatch: inner has {inner}, outer has {outer}")]
    PairCountMismatch { inner: usize, outer: usize },
    #[error("jump system is singular")]
    SingularJumpSystem,
    #[error("repeated characteristic root {0} where distinct roots are required")]
    RepeatedRoot(String),
    #[error("decay contract violated: {0}")]
    DecayContractViolation(String),
    #[error("quadrature failed to reach tolerance (estimate {estimate:e})")]
    QuadratureFailure { estimate: f64 },
    #[error("boundary value system ill-conditioned (condition estimate {cond:e})")]
    IllConditioned { cond: f64 },
    #[error("series truncation tail {tail:e} exceeds tolerance relative to {sum:e}")]
    TruncationWarning { tail: f64, sum: f64 },
    #[error("sample plan spans {decades:.2} decades, at least {required} needed")]
    InsufficientDecades { decades: f64, required: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
