pub mod bytes;
pub mod cli;
pub mod codec;
pub mod cube;
pub mod error;
pub mod pca;
pub mod pipeline;
pub mod predict;
pub mod quant;
pub mod rd;
pub mod synth;

pub use error::{Error, Result};
