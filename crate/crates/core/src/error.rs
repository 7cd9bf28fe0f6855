use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error("sample {value} out of range for {bit_depth}-bit data")]
    Range { value: u32, bit_depth: u8 },

    #[error("length error: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },

    #[error("size error: {0}")]
    Size(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("quantizer overflow: value {value} does not fit {width_bits}-bit indices")]
    Overflow { value: f64, width_bits: u8 },

    #[error("unsupported scheme id {0}")]
    UnsupportedScheme(u8),

    #[error("missing section {section} in layer {layer}")]
    MissingSection { layer: u8, section: u8 },

    #[error("container validation failed: {0}")]
    Validation(String),

    #[error("capability missing: {0}")]
    Capability(String),

    #[error("external encoder: {0}")]
    External(String),

    #[error("incomplete grid: {0}")]
    IncompleteGrid(String),

    #[error("unreachable target: {0}")]
    Unreachable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
