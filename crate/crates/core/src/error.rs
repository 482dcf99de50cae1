use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the design and simulation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions: coherence time T={t} must exceed antennas M={m}")]
    InvalidDimensions { t: usize, m: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(&'static str),

    #[error("matrix is not Hermitian positive definite")]
    NotPositiveDefinite,

    #[error("matrix is rank deficient")]
    RankDeficient,

    #[error("degenerate retraction for codeword {index} of user {user}")]
    DegenerateRetraction { user: usize, index: usize },

    #[error(
        "full diversity needs T >= (K+1)M, got T={t}, K={k}, M={m}"
    )]
    NotFullDiversity { t: usize, k: usize, m: usize },

    #[error(
        "coincident codewords: user {user} codeword {transmitted} vs {detected} (other users at {common:?})"
    )]
    CoincidentCodewords {
        user: usize,
        transmitted: usize,
        detected: usize,
        common: Vec<usize>,
    },

    #[error("coincident joint codewords {first} and {second}")]
    CoincidentJointCodewords { first: usize, second: usize },

    #[error("eigenvalue {0} is not positive")]
    InvalidSpectrum(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
