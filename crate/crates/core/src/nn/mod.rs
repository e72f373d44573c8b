//! Differentiable building blocks: a reverse-mode tape over `f64` tensors,
//! convolution, max-pooling over time, LSTM cells, dense softmax heads, the
//! Adam optimizer, a finite-difference gradient checker and the checkpoint
//! container.

mod adam;
pub mod checkpoint;
mod gradcheck;
mod layers;
mod params;
mod tape;
mod tensor;

use alloc::string::String;

pub use adam::Adam;
pub use checkpoint::{CheckpointError, Metadata};
pub use gradcheck::{finite_difference_check, relative_error, GradCheck, GradCheckReport, RELATIVE_ERROR_FLOOR};
pub use layers::{conv1d_forward, dense_softmax, lstm_step, maxpool_time, ConvFilterBank, Dense, LstmState, LstmWeights};
pub use params::{GradBuffer, ParamId, Parameter, ParameterStore};
pub use tape::{softmax, Tape, Var};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("{op}: shape mismatch ({detail})")]
    Shape { op: &'static str, detail: String },
    #[error("backward called on a node that was never recorded")]
    NoForward,
    #[error("duplicate parameter name {0}")]
    DuplicateParameter(String),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
}
