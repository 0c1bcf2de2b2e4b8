pub mod data;
pub mod embedding;
pub mod error;
pub mod fr;
pub mod metrics;
pub mod params;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
