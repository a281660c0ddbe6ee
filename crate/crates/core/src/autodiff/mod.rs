//! Reverse-mode automatic differentiation with support for gradients of
//! gradients.

mod check;
mod graph;
mod tensor;

pub use check::{finite_diff_check, FiniteDiffError, GRADIENT_FLOOR};
pub(crate) use graph::softplus;
pub use graph::{Graph, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("non-finite value produced by {op} at node {node}")]
    NonFinite { op: &'static str, node: usize },
    #[error("gradient output must be 1x1, got {shape:?}")]
    NotScalar { shape: (usize, usize) },
    #[error("node {index} is not on this graph ({len} nodes)")]
    UnknownVar { index: usize, len: usize },
    #[error("node {index} is not a leaf and cannot be rebound")]
    NotALeaf { index: usize },
    #[error("{op} over an empty tensor")]
    EmptyReduction { op: &'static str },
}

/// Whether a gradient includes terms from differentiating through an inner
/// gradient step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeOrder {
    First,
    Second,
}

/// A flat gradient aligned with a parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub entries: Vec<f64>,
    pub order: DerivativeOrder,
}

impl GradientVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}
