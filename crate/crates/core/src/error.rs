use alloc::string::String;

use crate::autodiff::ShapeError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("affinity {value} for pair ({a}, {b}) is outside [0, 1]")]
    AffinityRange { a: usize, b: usize, value: f64 },
    #[error("model error: {0}")]
    Model(String),
    #[error("cannot cluster an empty distance matrix")]
    EmptyMatrix,
}
