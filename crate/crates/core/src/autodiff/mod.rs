//! Dense tensors with tape-based reverse-mode differentiation.
//!
//! The engine is generic over the scalar type: the predictor trains in
//! `f32`, while gradient verification instantiates the same operators in
//! `f64` so finite differences are not swamped by rounding.

mod gradcheck;
mod optim;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport};
pub use optim::{Adam, AdamConfig};
pub use tape::{Gradients, Tape, Var};
pub use tensor::{Scalar, Tensor};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("mean over an empty set")]
    EmptySet,
    #[error("non-finite gradient at input {input}, coordinate {index}")]
    NonFiniteGradient { input: usize, index: usize },
    #[error("backward requires a scalar output, got shape {0:?}")]
    NotScalar(Vec<usize>),
}

pub(crate) fn shape_err(op: &'static str, detail: String) -> TensorError {
    TensorError::ShapeMismatch { op, detail }
}
