//! Deterministic dense numerics with reverse-mode gradients.
//!
//! Everything is `f64` and every reduction runs in index order, so a given
//! seed and input produce bit-identical results on one platform. Models record
//! their forward pass on a [`Tape`]; [`Tape::backward`] accumulates gradients
//! into the [`ParamStore`] the parameters were read from.

mod gradcheck;
mod init;
mod ops;
mod optim;
mod param;
mod tape;
mod tensor;

pub use gradcheck::{finite_diff_check, finite_diff_check_sampled, relative_gradient_error};
pub use init::glorot_init;
pub use ops::{
    elementwise_activation, leaky_relu, matmul, mse_loss, relu, segment_softmax, Activation,
};
pub use optim::{clip_grad_norm, AdamConfig, AdamState};
pub use param::{Param, ParamId, ParamStore};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
