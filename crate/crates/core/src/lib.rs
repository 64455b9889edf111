//! Catalog of fixed and trainable activation functions with analytically
//! derived gradients, a finite-difference verification oracle, and a minimal
//! dense-network training harness that learns activation parameters jointly
//! with weights.

pub mod activations;
pub mod curves;
pub mod data;
pub mod gradcheck;
pub mod network;
pub mod numerics;
pub mod optim;
pub mod tensor;
pub mod train;

pub use activations::{ActivationError, ActivationInstance, ActivationKind, ParamSet};
pub use gradcheck::GradReport;
pub use network::{Network, NetworkError};
pub use tensor::Tensor;
pub use train::{RunConfig, RunMetrics};
