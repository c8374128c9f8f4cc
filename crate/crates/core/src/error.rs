use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lag ladder must be strictly decreasing and positive: {0}")]
    InvalidLadder(String),

    #[error("radius {0} must exceed 1 (log d <= 0 makes the criterion vacuous)")]
    RadiusTooSmall(f64),

    #[error("circulant embedding failed: min eigenvalue {min_eig:e} below tolerance (max {max_eig:e})")]
    EmbeddingFailure { min_eig: f64, max_eig: f64 },

    #[error("grid of {points} points exceeds the memory cap of {cap}")]
    MemoryCap { points: usize, cap: usize },

    #[error("grid spacing {0} does not divide the unit block")]
    AlignmentError(f64),

    #[error("mixing weight r/log T = {0} must be below 1")]
    InvalidMix(f64),

    #[error("region contains no grid point")]
    EmptyRegion,

    #[error("simple set rectangles {0} and {1} overlap")]
    NotDisjoint(usize, usize),

    #[error("ladder needs at least 3 rungs, got {0}")]
    LadderTooShort(usize),

    #[error("approximation value {0} >= 1: not in the asymptotic regime")]
    NotInAsymptoticRegime(f64),

    #[error("no threshold solves m(u) = {0} on the monotone branch")]
    NoRoot(f64),

    #[error("integral diverges for lambda = {0} (need lambda < 2)")]
    Nonintegrable(f64),

    #[error("case requires the second moment E[T^2]")]
    MissingMoment,

    #[error("case requires a survival function for T")]
    MissingSurvival,

    #[error("probability {name} = {value} outside the stable range")]
    UnstableRegime { name: &'static str, value: f64 },

    #[error("io: {0}")]
    Io(String),

    #[error("malformed field file: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
