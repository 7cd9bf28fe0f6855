use super::{max_sample, SpectralCube};
use crate::error::{Error, Result};

/// Which peak value enters the PSNR numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeakMode {
    /// Maximum sample of the original image.
    #[default]
    ImageMax,
    /// `2^bit_depth − 1` of the original.
    Nominal,
}

fn check_shape(a: &SpectralCube, b: &SpectralCube) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.bands(),
            b.width(),
            b.height(),
            b.bands()
        )))
    }
}

pub fn mse(a: &SpectralCube, b: &SpectralCube) -> Result<f64> {
    check_shape(a, b)?;
    let sum: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.samples().len() as f64)
}

/// PSNR in dB of `recon` against the pre-compression `original`, using the
/// original's maximum sample as peak. Lossless reconstruction yields
/// `f64::INFINITY`.
pub fn psnr(original: &SpectralCube, recon: &SpectralCube) -> Result<f64> {
    psnr_with(original, recon, PeakMode::ImageMax)
}

pub fn psnr_with(original: &SpectralCube, recon: &SpectralCube, peak: PeakMode) -> Result<f64> {
    let err = mse(original, recon)?;
    let i_max = match peak {
        PeakMode::ImageMax => original.max_value(),
        PeakMode::Nominal => max_sample(original.bit_depth()),
    } as f64;
    if i_max == 0.0 {
        return Err(Error::UndefinedMetric(
            "original has no non-zero sample".into(),
        ));
    }
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (i_max * i_max / err).log10())
}
