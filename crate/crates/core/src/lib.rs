//! Recovery of measures on the torus from noisy Fourier data, with
//! localized-kernel norms for measuring the error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crosscheck;
pub mod error;
pub mod experiments;
mod fft;
pub mod measures;
pub mod metrics;
pub mod recover;
pub mod spectral;
pub mod system;

pub use error::{Error, Result};
