//! Exact switched-linear modeling and orbital stability of PWM DC-DC
//! converters under average current control.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaged;
pub mod error;
pub mod harmonic_balance;
pub mod model;
pub mod numerics;
pub mod sampled_data;
pub mod simulator;
pub mod steady_state;

pub use error::{Error, Result};
pub use model::{build_buck_model, presets, ConverterParams, Input, RampSignal, SwitchedModel};
