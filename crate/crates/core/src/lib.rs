//! Data-integration estimators that combine a probability sample with a
//! non-probability big-data source covering part of a finite population.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod classifier;
pub mod error;
pub mod estimators;
pub mod io;
pub mod linalg;
pub mod mismeasure;
pub mod population;
pub mod rng;
pub mod simlab;
pub mod variance;

pub use error::{Error, Result};
