// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod central_config;
pub mod cli;
pub mod continuation;
pub mod error;
pub mod evolution;
pub mod field;
pub mod residual;
pub mod spectrum;

pub use error::{Error, Result};
pub use rustfft;
