//! Deterministic f32 tensor engine for M: tensors up to rank 3, a
//! reverse-mode tape, SGD/Adam, Glorot init and the splitmix64 PRNG.
//!
//! Every op runs single-threaded with a fixed loop order, so identical
//! inputs give bitwise identical outputs.

mod error;
mod init;
mod optim;
mod param;
mod prng;
mod tape;
mod tensor;

pub use error::{Result, TensorError};
pub use init::{glorot_bound, glorot_uniform};
pub use optim::{OptimKind, Optimizer};
pub use param::{Param, ParamState};
pub use prng::{mix, SplitMix64};
pub use tape::Tape;
pub use tensor::{leaf_on, DType, Tensor, MAX_RANK};
