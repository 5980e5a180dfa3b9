//! Minimal reverse-mode automatic differentiation over dense 2-D tensors.
//!
//! A [`Graph`] is a tape: every operation appends a node holding its forward
//! value, and [`Graph::backward`] walks the tape in reverse accumulating
//! exact gradients into a [`Gradients`] buffer keyed by [`ParamId`].
//! Parameters live outside the graph in a [`ParamStore`] so that many graphs
//! can read one snapshot concurrently while a single trainer owns updates.

mod adam;
mod graph;
mod lstm;
mod params;
mod tensor;

pub use adam::Adam;
pub use graph::{Graph, Var};
pub use lstm::{BiLstm, LstmParams};
pub use params::{xavier_uniform, Gradients, ParamId, ParamStore, Parameter};
pub use tensor::Tensor;

use alloc::string::String;

/// Operand shapes that an operation cannot combine.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{op}: incompatible shapes {lhs:?} and {rhs:?}{}", if detail.is_empty() { String::new() } else { alloc::format!(" ({detail})") })]
pub struct ShapeError {
    pub op: &'static str,
    pub lhs: (usize, usize),
    pub rhs: (usize, usize),
    pub detail: String,
}

impl ShapeError {
    pub(crate) fn new(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        ShapeError {
            op,
            lhs,
            rhs,
            detail: String::new(),
        }
    }

    pub(crate) fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}
