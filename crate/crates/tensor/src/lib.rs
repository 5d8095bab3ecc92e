//! Dense double-precision tensors with reverse-mode automatic differentiation.
//!
//! The engine is deliberately small: row-major `f64` storage, explicit shape
//! checks, no broadcasting beyond scalar scaling, and a per-forward-pass
//! [`Tape`] that records every operation together with its local gradient
//! rule. Calling [`Tape::backward`] replays the tape in reverse and
//! accumulates chain-rule gradients onto every recorded tensor that requires
//! them.
//!
//! A tape and the tensors it owns are used by one thread at a time;
//! parallelism happens across tapes (one per rollout), never inside one.
//!
//! [`finite_diff_grad`] provides the central-difference gradient oracle used
//! throughout the test suites, and [`checkpoint`] a versioned text container
//! for named parameter tensors.

pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod tape;
pub mod tensor;

pub use checkpoint::{Checkpoint, CheckpointEntry, CheckpointError};
pub use error::TensorError;
pub use gradcheck::{finite_diff_grad, max_rel_error};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
