use thiserror::Error;

/// Failure modes shared by every layer of the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("atom number {n} exceeds the configured basis cap {cap}")]
    CapacityExceeded { n: usize, cap: usize },

    #[error("state norm deviates from one by {deviation:e}")]
    NonNormalizedInput { deviation: f64 },

    #[error("operands live on different Fock bases (N={left} vs N={right})")]
    BasisMismatch { left: usize, right: usize },

    #[error("cannot split {n} atoms evenly between two interferometers")]
    InvalidSplit { n: usize },

    #[error("fringe slope vanishes at the requested working point ({which})")]
    DegenerateWorkingPoint { which: &'static str },

    #[error("Gaussian sensitivity denominator is not positive ({which})")]
    DenominatorNonPositive { which: &'static str },

    #[error("phase {theta} lies on the fringe boundary where cot diverges")]
    BoundaryPhase { theta: f64 },

    #[error("probability table sums to {total}, not one")]
    NonNormalizedDistribution { total: f64 },

    #[error("fringe amplitude {amplitude:e} is too small to invert")]
    ZeroFringeAmplitude { amplitude: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
