//! Linear RGB preview rendering from spectral cubes.

use super::{max_sample, SpectralCube};
use crate::error::{Error, Result};

pub const PREVIEW_DEPTH: u8 = 10;

/// CIE 1931 2° standard observer colour-matching functions (x̄, ȳ, z̄),
/// sampled 400–700 nm in 10 nm steps.
pub const CIE1931_2DEG_400_700: [[f64; 31]; 3] = [
    [
        0.01431, 0.04351, 0.13438, 0.28390, 0.34828, 0.33620, 0.29080, 0.19536, 0.09564, 0.03201,
        0.00490, 0.00930, 0.06327, 0.16550, 0.29040, 0.43345, 0.59450, 0.76210, 0.91630, 1.02630,
        1.06220, 1.00260, 0.85445, 0.64240, 0.44790, 0.28350, 0.16490, 0.08740, 0.04677, 0.02270,
        0.01136,
    ],
    [
        0.000396, 0.00121, 0.00400, 0.01160, 0.02300, 0.03800, 0.06000, 0.09098, 0.13902, 0.20802,
        0.32300, 0.50300, 0.71000, 0.86200, 0.95400, 0.99495, 0.99500, 0.95200, 0.87000, 0.75700,
        0.63100, 0.50300, 0.38100, 0.26500, 0.17500, 0.10700, 0.06100, 0.03200, 0.01700, 0.00821,
        0.00410,
    ],
    [
        0.06785, 0.20740, 0.64560, 1.38560, 1.74706, 1.77211, 1.66920, 1.28764, 0.81295, 0.46518,
        0.27200, 0.15820, 0.07825, 0.04216, 0.02030, 0.00875, 0.00390, 0.00210, 0.00165, 0.00110,
        0.00080, 0.00034, 0.00019, 0.00005, 0.00002, 0.00000, 0.00000, 0.00000, 0.00000, 0.00000,
        0.00000,
    ],
];

/// 3×B colour-matching weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CmfMatrix {
    bands: usize,
    rows: [Vec<f64>; 3],
    source: String,
}

impl CmfMatrix {
    pub fn new(rows: [Vec<f64>; 3], source: impl Into<String>) -> Result<Self> {
        let bands = rows[0].len();
        if bands == 0 || rows.iter().any(|r| r.len() != bands) {
            return Err(Error::DimensionMismatch(
                "CMF rows must share a non-zero length".into(),
            ));
        }
        if rows.iter().any(|r| r.iter().all(|&v| v == 0.0)) {
            return Err(Error::InvalidParameter("CMF row is all zero".into()));
        }
        Ok(Self {
            bands,
            rows,
            source: source.into(),
        })
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn row(&self, channel: usize) -> &[f64] {
        &self.rows[channel]
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

pub fn cie1931_cmf() -> CmfMatrix {
    CmfMatrix::new(
        CIE1931_2DEG_400_700.map(|r| r.to_vec()),
        "CIE-1931-2deg-400-700-10nm",
    )
    .expect("embedded table is valid")
}

/// Three-channel 10-bit image, channel-planar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u16>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, samples: Vec<u16>) -> Result<Self> {
        if samples.len() != 3 * width * height {
            return Err(Error::Length {
                expected: 3 * width * height,
                found: samples.len(),
            });
        }
        if samples.iter().any(|&s| s > 1023) {
            return Err(Error::Range {
                value: samples.iter().copied().max().unwrap_or(0) as u32,
                bit_depth: PREVIEW_DEPTH,
            });
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn channel(&self, c: usize) -> &[u16] {
        let n = self.width * self.height;
        &self.samples[c * n..(c + 1) * n]
    }

    /// Views the image as a three-band 10-bit cube, e.g. for PSNR.
    pub fn to_cube(&self) -> SpectralCube {
        SpectralCube::new(
            self.width,
            self.height,
            3,
            PREVIEW_DEPTH,
            self.samples.clone(),
        )
        .expect("RgbImage invariants match cube invariants")
    }
}

/// Renders a linear preview: `clamp(round(g · C · s), 0, 1023)` per pixel,
/// with `g` mapping the largest channel value of the image to 1023.
pub fn render_rgb(cube: &SpectralCube, cmf: &CmfMatrix) -> Result<RgbImage> {
    if cmf.bands() != cube.bands() {
        return Err(Error::DimensionMismatch(format!(
            "CMF has {} bands, cube has {}",
            cmf.bands(),
            cube.bands()
        )));
    }
    let n = cube.pixels();
    let mut linear = vec![0.0f64; 3 * n];
    for c in 0..3 {
        let out = &mut linear[c * n..(c + 1) * n];
        for (b, &w) in cmf.row(c).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &s) in out.iter_mut().zip(cube.band(b)) {
                *o += w * s as f64;
            }
        }
    }
    let peak = linear.iter().copied().fold(0.0f64, f64::max);
    let top = max_sample(PREVIEW_DEPTH) as f64;
    let gain = if peak > 0.0 { top / peak } else { 0.0 };
    let samples = linear
        .iter()
        .map(|&v| (gain * v).round().clamp(0.0, top) as u16)
        .collect();
    RgbImage::new(cube.width(), cube.height(), samples)
}
