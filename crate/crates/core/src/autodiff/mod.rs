//! Reverse-mode automatic differentiation over dense `f64` tensors, with Adam.
//!
//! The tape is define-by-run: each forward pass records a fresh operation list
//! and the backward pass replays it once in reverse. Tapes are single-owner;
//! independent tapes may be evaluated on different workers and their
//! gradients summed by the caller.

mod adam;
mod gradcheck;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{
    compare_with_central_differences, finite_difference_check, relative_error, GradCheckFailure,
    GradCheckReport,
};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: expected rank {expected}, got shape {shape:?}")]
    RankMismatch {
        op: &'static str,
        expected: usize,
        shape: Vec<usize>,
    },
    #[error("invalid tensor shape {shape:?}: {reason}")]
    InvalidShape {
        shape: Vec<usize>,
        reason: &'static str,
    },
    #[error("backward needs a scalar output, got shape {shape:?}")]
    NonScalarOutput { shape: Vec<usize> },
    #[error("{op}: empty input")]
    EmptyInput { op: &'static str },
    #[error("{op}: index {index} out of range for {len} rows")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        len: usize,
    },
    #[error("parameter count mismatch: {params} params, {grads} grads, {state} optimizer slots")]
    ParameterCountMismatch {
        params: usize,
        grads: usize,
        state: usize,
    },
}
