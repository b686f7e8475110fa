//! Sparse distributed coding fields ("macs") with single-trial Hebbian learning,
//! receptive-field hierarchies over binary frame sequences, preprocessing for digits
//! and video, and readout classifiers.

pub mod bits;
pub mod classify;
pub mod error;
pub mod experiments;
pub mod format;
pub mod hierarchy;
pub mod mac;
pub mod ops;
pub mod preprocess;
pub mod seed;

pub use error::{Error, Result};
pub use mac::{Code, CsaParams, InputVector, Mac, MacConfig, Mode};
pub use ops::OpCounts;
