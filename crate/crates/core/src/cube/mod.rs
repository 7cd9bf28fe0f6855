//! Multispectral cubes and the plane containers used throughout the codec.
//!
//! A [`SpectralCube`] stores integer samples band-planar: all pixels of band 0
//! in row-major order, then band 1, and so on. Real-valued intermediate data
//! (PC images, residuals, predictions) lives in a [`RealPlaneStack`] with the
//! same layout.

mod metrics;
mod msrc;
mod rgb;

pub use metrics::{mse, psnr, psnr_with, PeakMode};
pub use msrc::{load_cube, parse_cube, store_cube, write_cube, MSRC_HEADER_LEN, MSRC_MAGIC};
pub use rgb::{cie1931_cmf, render_rgb, CmfMatrix, RgbImage, CIE1931_2DEG_400_700, PREVIEW_DEPTH};

use crate::error::{Error, Result};

pub const CROP_EDGE: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    width: usize,
    height: usize,
    bands: usize,
    bit_depth: u8,
    samples: Vec<u16>,
    band_wavelengths: Option<Vec<f64>>,
}

impl SpectralCube {
    pub fn new(
        width: usize,
        height: usize,
        bands: usize,
        bit_depth: u8,
        samples: Vec<u16>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || bands == 0 {
            return Err(Error::Size(format!(
                "cube dimensions must be non-zero, got {width}x{height}x{bands}"
            )));
        }
        if !(1..=16).contains(&bit_depth) {
            return Err(Error::InvalidParameter(format!("bit depth {bit_depth}")));
        }
        let expected = width * height * bands;
        if samples.len() != expected {
            return Err(Error::Length {
                expected,
                found: samples.len(),
            });
        }
        let max = max_sample(bit_depth);
        if let Some(&bad) = samples.iter().find(|&&s| s > max) {
            return Err(Error::Range {
                value: bad as u32,
                bit_depth,
            });
        }
        Ok(Self {
            width,
            height,
            bands,
            bit_depth,
            samples,
            band_wavelengths: None,
        })
    }

    /// Builds a cube from a per-sample function `f(band, row, col)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        bands: usize,
        bit_depth: u8,
        mut f: impl FnMut(usize, usize, usize) -> u16,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height * bands);
        for b in 0..bands {
            for y in 0..height {
                for x in 0..width {
                    samples.push(f(b, y, x));
                }
            }
        }
        Self::new(width, height, bands, bit_depth, samples)
    }

    pub fn with_wavelengths(mut self, nm: Vec<f64>) -> Result<Self> {
        if nm.len() != self.bands {
            return Err(Error::DimensionMismatch(format!(
                "{} wavelengths for {} bands",
                nm.len(),
                self.bands
            )));
        }
        self.band_wavelengths = Some(nm);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn band_wavelengths(&self) -> Option<&[f64]> {
        self.band_wavelengths.as_deref()
    }

    pub fn band(&self, b: usize) -> &[u16] {
        let n = self.pixels();
        &self.samples[b * n..(b + 1) * n]
    }

    pub fn get(&self, band: usize, row: usize, col: usize) -> u16 {
        self.samples[(band * self.height + row) * self.width + col]
    }

    pub fn max_value(&self) -> u16 {
        self.samples.iter().copied().max().unwrap_or(0)
    }

    pub fn same_shape(&self, other: &SpectralCube) -> bool {
        self.width == other.width && self.height == other.height && self.bands == other.bands
    }

    pub fn to_planes(&self) -> RealPlaneStack {
        RealPlaneStack {
            width: self.width,
            height: self.height,
            planes: self.bands,
            values: self.samples.iter().map(|&s| s as f64).collect(),
        }
    }

    /// Rounds and clamps real planes into the sample domain of `bit_depth`.
    pub fn from_planes_rounded(stack: &RealPlaneStack, bit_depth: u8) -> Result<Self> {
        let max = max_sample(bit_depth) as f64;
        let samples = stack
            .values
            .iter()
            .map(|&v| v.round().clamp(0.0, max) as u16)
            .collect();
        Self::new(stack.width, stack.height, stack.planes, bit_depth, samples)
    }

    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Self> {
        if row + height > self.height || col + width > self.width {
            return Err(Error::Size(format!(
                "crop {height}x{width} at ({row},{col}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        let out = Self::from_fn(width, height, self.bands, self.bit_depth, |b, y, x| {
            self.get(b, row + y, col + x)
        })?;
        Ok(Self {
            band_wavelengths: self.band_wavelengths.clone(),
            ..out
        })
    }
}

pub fn max_sample(bit_depth: u8) -> u16 {
    ((1u32 << bit_depth) - 1) as u16
}

/// Four `256×256` crops anchored at the cube corners, in the order
/// top-left, top-right, bottom-left, bottom-right.
pub fn crop_quadrants(cube: &SpectralCube) -> Result<[SpectralCube; 4]> {
    if cube.width < CROP_EDGE || cube.height < CROP_EDGE {
        return Err(Error::Size(format!(
            "{}x{} cube is smaller than {CROP_EDGE}x{CROP_EDGE}",
            cube.height, cube.width
        )));
    }
    let [a, b, c, d] = quadrant_offsets(cube.width, cube.height)
        .map(|(row, col)| cube.crop(row, col, CROP_EDGE, CROP_EDGE));
    Ok([a?, b?, c?, d?])
}

/// Row/column offsets used by [`crop_quadrants`].
pub fn quadrant_offsets(width: usize, height: usize) -> [(usize, usize); 4] {
    let r1 = height.saturating_sub(CROP_EDGE);
    let c1 = width.saturating_sub(CROP_EDGE);
    [(0, 0), (0, c1), (r1, 0), (r1, c1)]
}

/// Linear rescale between bit depths: `round(s · (2^t − 1) / (2^s − 1))`.
pub fn requantize(cube: &SpectralCube, target_depth: u8) -> Result<SpectralCube> {
    for d in [cube.bit_depth, target_depth] {
        if !(8..=16).contains(&d) {
            return Err(Error::InvalidParameter(format!(
                "bit depth {d} outside [8, 16]"
            )));
        }
    }
    if target_depth == cube.bit_depth {
        return Ok(cube.clone());
    }
    let src = max_sample(cube.bit_depth) as f64;
    let dst = max_sample(target_depth) as f64;
    let samples = cube
        .samples
        .iter()
        .map(|&s| (s as f64 * dst / src).round().clamp(0.0, dst) as u16)
        .collect();
    Ok(SpectralCube {
        bit_depth: target_depth,
        samples,
        ..cube.clone()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealPlaneStack {
    pub width: usize,
    pub height: usize,
    pub planes: usize,
    pub values: Vec<f64>,
}

impl RealPlaneStack {
    pub fn zeros(width: usize, height: usize, planes: usize) -> Self {
        Self {
            width,
            height,
            planes,
            values: vec![0.0; width * height * planes],
        }
    }

    pub fn from_planes(width: usize, height: usize, planes: Vec<Vec<f64>>) -> Result<Self> {
        let n = width * height;
        let count = planes.len();
        let mut values = Vec::with_capacity(n * count);
        for (i, p) in planes.into_iter().enumerate() {
            if p.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "plane {i} has {} values, expected {n}",
                    p.len()
                )));
            }
            values.extend(p);
        }
        let stack = Self {
            width,
            height,
            planes: count,
            values,
        };
        stack.check_finite()?;
        Ok(stack)
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn plane(&self, i: usize) -> &[f64] {
        let n = self.pixels();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn plane_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.pixels();
        &mut self.values[i * n..(i + 1) * n]
    }

    pub fn plane_refs(&self) -> Vec<&[f64]> {
        (0..self.planes).map(|i| self.plane(i)).collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Degenerate("non-finite value in plane stack".into()))
        }
    }
}
