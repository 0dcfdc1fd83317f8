// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod detection;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod rng;
pub mod scenario;
pub mod servo;
pub mod spectral;

pub use error::{Error, Result};
