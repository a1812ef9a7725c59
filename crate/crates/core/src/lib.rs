pub mod calibration;
pub mod curves;
pub mod distributions;
pub mod el;
pub mod error;
pub mod mc;
pub mod report;
pub mod rng;
pub mod special;
pub mod zhang;

pub use error::{Error, Result};
