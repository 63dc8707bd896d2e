//! Minimal tensor arithmetic with reverse-mode differentiation, the layer
//! set used by the encoder and heads, and the Adam optimizer.

mod adam;
mod check;
pub mod ops;
mod params;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use check::{grad_check, GradCheckOptions, GradCheckReport};
pub use ops::Mode;
pub use params::{ParamGrads, ParamSet, Role};
pub use tape::{backward, BoundParams, Gradients, Tape, Var};
pub use tensor::Tensor;
