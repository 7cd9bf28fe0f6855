//! Uniform scalar quantization with power-of-two step sizes.

/// `Δv = 2⁻¹³`, the step for PCA basis vectors and means.
pub const BASIS_STEP_EXP: i8 = -13;
/// `Δw = 2⁻¹²`, the step for predictor weights.
pub const WEIGHT_STEP_EXP: i8 = -12;

pub fn step(exponent: i8) -> f64 {
    2f64.powi(exponent as i32)
}

/// Nearest index for `x` at step `2^exponent`; ties round away from zero.
pub fn index_of(x: f64, exponent: i8) -> i64 {
    (x / step(exponent)).round() as i64
}

pub fn dequantize(index: i64, exponent: i8) -> f64 {
    index as f64 * step(exponent)
}

/// Largest magnitude representable in a two's-complement field of `bits`.
pub fn fits(index: i64, bits: u8) -> bool {
    let half = 1i64 << (bits - 1);
    (-half..half).contains(&index)
}
