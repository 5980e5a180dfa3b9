//! File formats, training orchestration, the evaluation pipeline and the
//! command line for triad-based coreference resolution. The numerical core
//! lives in `triad_coref_core` and is re-exported as [`core`].

pub use triad_coref_core as core;

pub mod checkpoint;
pub mod config;
pub mod corpus;
mod error;
pub mod pipeline;
pub mod training;

pub use error::{AppError, AppResult};
