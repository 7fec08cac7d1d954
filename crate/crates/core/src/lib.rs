// Small fixed-size index loops mirror the tensor notation of the formulas.
#![allow(clippy::needless_range_loop)]

pub mod assembly;
pub mod cli;
pub mod eigensolve;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod femcore;
pub mod mesh;
pub mod postprocess;
pub mod verify;

pub use error::{Error, Result};
