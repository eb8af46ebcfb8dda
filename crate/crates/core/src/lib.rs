//! MiniRocket time-series classification for duty-cycled sensor nodes.
//!
//! The crate covers the whole offline toolchain: synthetic and CSV data
//! ingestion with anti-aliased resampling, the MiniRocket transform, a ridge
//! classifier head, calibration and quantization for 32-bit integer-only
//! inference, model bundles and firmware exports, and an energy simulator
//! for the duty-cycled device that runs the model.

pub mod error;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod quant;
pub mod ridge;
pub mod signal;
pub mod sim;
pub mod transform;

pub use error::{Error, Result};
