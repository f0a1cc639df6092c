pub mod channel;
pub mod constellation;
pub mod detectors;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;

pub use error::{Error, Result};
