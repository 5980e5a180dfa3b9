//! Triad-based coreference resolution core.
//!
//! Everything in this crate is a pure function of its inputs: mention
//! features, a small reverse-mode autodiff engine, the triad and dyad
//! networks built on it, triad enumeration, affinity aggregation,
//! average-linkage clustering, postprocessing rules and the MUC / B³ /
//! CEAF-φ4 scorers. It builds without `std`; IO, training orchestration
//! and the command line live in the `triad-coref` crate.

#![no_std]

extern crate alloc;

pub mod affinity;
pub mod autodiff;
pub mod clustering;
pub mod document;
pub mod embedding;
mod error;
pub mod features;
pub mod metrics;
pub mod model;
pub mod partition;
pub mod polyads;
pub mod postprocess;

pub use error::{Error, Result};
