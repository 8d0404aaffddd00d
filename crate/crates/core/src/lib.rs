//! Data-quality certificates for Koopman/EDMDc identification.

pub mod acquisition;
pub mod certificates;
pub mod dataset;
pub mod downstream;
pub mod edmdc;
pub mod error;
pub mod harness;
pub mod lifting;
pub mod linalg;
pub mod standardize;
pub mod systems;

pub use dataset::Dataset;
pub use error::{Error, Layer, Result};
