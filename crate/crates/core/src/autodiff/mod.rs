//! Reverse-mode automatic differentiation over dense `f64` tensors.

mod check;
mod nn;
mod optim;
mod tape;
mod tensor;

pub use check::{grad_check, relative_error, GradCheckReport, REL_ERROR_FLOOR};
pub use nn::{linear, lstm_cell, multi_head_attention, Attention, AttentionVars, LstmVars};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use tape::{Gradients, Tape, Var, LAYER_NORM_EPS};
pub use tensor::Tensor;
