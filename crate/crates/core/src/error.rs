use thiserror::Error;

/// Errors raised while building operators, pmfs and measures.
///
/// Check failures are not errors; they are reported through
/// [`crate::verify::CheckReport`] with a witness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("capacity violated: {0}")]
    Capacity(String),

    #[error("conditioning on a zero-mass set: {0}")]
    Conditioning(String),

    #[error("stationary law on sector {sector} is not unique (kernel dimension {dim})")]
    Multiplicity { sector: u32, dim: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid symmetry descriptor: {0}")]
    Descriptor(String),

    #[error("operator is not lumpable: {0}")]
    NotLumpable(String),

    #[error("invalid model: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, Error>;
