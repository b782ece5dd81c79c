//! Dense 2-D tensors with a reverse-mode tape, Adam, a cosine learning-rate
//! schedule, a finite-difference checker and a binary checkpoint format.
//! Everything computes in f64.

mod check;
mod checkpoint;
mod optim;
mod params;
mod tape;
mod tensor;

pub use check::{grad_check, GRAD_CHECK_FLOOR};
pub use checkpoint::{
    load_checkpoint, restore_into, save_checkpoint, DType, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use optim::{adam_step, clip_grad_norm, cosine_lr, AdamState, CosineSchedule};
pub use params::{glorot_uniform, normal, Bound, ParamId, ParamStore};
pub use tape::{Axis, Gradients, SparseRows, Tape, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: [usize; 2],
        right: [usize; 2],
    },
    #[error("{op}: index {index} out of range for length {len}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        len: usize,
    },
    #[error("every position is masked")]
    AllPositionsMasked,
    #[error("loss must be 1x1, got {0:?}")]
    NonScalarLoss([usize; 2]),
    #[error("step {step} outside 0..={total}")]
    StepOutOfRange { step: u64, total: u64 },
    #[error("invalid schedule: lr_max {lr_max} must be >= lr_min {lr_min} > 0")]
    InvalidSchedule { lr_max: f64, lr_min: f64 },
    #[error("parameter {0:?} defined twice")]
    DuplicateParameter(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
