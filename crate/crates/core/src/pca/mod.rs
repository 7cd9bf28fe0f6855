//! Principal component analysis along the spectral axis.
//!
//! [`fit_pca`] eigen-decomposes the band covariance of the pixel spectra;
//! [`truncate`] keeps the leading components; [`quantize_basis`] snaps the
//! mean and basis to the transmitted fixed-point grid; [`forward`] and
//! [`inverse`] move between band planes and PC planes.

mod jacobi;

pub use jacobi::{jacobi_eigen, SymmetricEigen, OFF_DIAGONAL_TOL};

use crate::bytes::{Reader, Writer};
use crate::cube::{RealPlaneStack, SpectralCube};
use crate::error::{Error, Result};
use crate::quant;

pub const BASIS_INDEX_BITS: u8 = 16;
pub const MEAN_INDEX_BITS: u8 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PcaOptions {
    /// Subtract (and transmit) the per-band mean before the eigen-analysis.
    pub center: bool,
}

impl Default for PcaOptions {
    fn default() -> Self {
        Self { center: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    bands: usize,
    n_components: usize,
    mean: Vec<f64>,
    /// Column-major `bands × n_components`.
    basis: Vec<f64>,
    /// Empty for bases parsed from a bitstream.
    eigenvalues: Vec<f64>,
    step_exponent: Option<i8>,
}

/// Fixed-point payload of a quantized vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedVectorBlock {
    pub step_exponent: i8,
    pub width_bits: u8,
    pub indices: Vec<i64>,
}

impl QuantizedVectorBlock {
    pub fn dequantized(&self) -> Vec<f64> {
        self.indices
            .iter()
            .map(|&i| quant::dequantize(i, self.step_exponent))
            .collect()
    }
}

impl PcaBasis {
    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.basis[j * self.bands..(j + 1) * self.bands]
    }

    pub fn is_quantized(&self) -> bool {
        self.step_exponent.is_some()
    }

    pub fn step_exponent(&self) -> Option<i8> {
        self.step_exponent
    }

    /// Serialized section: u16 bands, u16 components, i8 step exponent,
    /// i32 mean indices, i16 basis indices (column-major).
    pub fn to_section(&self) -> Result<Vec<u8>> {
        let exp = self.step_exponent.ok_or_else(|| {
            Error::InvalidParameter("only quantized bases can be serialized".into())
        })?;
        let mut w = Writer::new();
        w.u16(self.bands as u16)
            .u16(self.n_components as u16)
            .i8(exp);
        for &m in &self.mean {
            w.i32(quant::index_of(m, exp) as i32);
        }
        for &v in &self.basis {
            w.i16(quant::index_of(v, exp) as i16);
        }
        Ok(w.finish())
    }

    pub fn from_section(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "basis section");
        let bands = r.u16()? as usize;
        let n_components = r.u16()? as usize;
        let exp = r.i8()?;
        if bands == 0 || n_components == 0 || n_components > bands {
            return Err(Error::Decode(format!(
                "basis section declares {n_components} components over {bands} bands"
            )));
        }
        let mean = (0..bands)
            .map(|_| r.i32().map(|i| quant::dequantize(i as i64, exp)))
            .collect::<Result<Vec<_>>>()?;
        let basis = (0..bands * n_components)
            .map(|_| r.i16().map(|i| quant::dequantize(i as i64, exp)))
            .collect::<Result<Vec<_>>>()?;
        r.expect_end()?;
        Ok(Self {
            bands,
            n_components,
            mean,
            basis,
            eigenvalues: Vec::new(),
            step_exponent: Some(exp),
        })
    }
}

pub fn fit_pca(cube: &SpectralCube) -> Result<PcaBasis> {
    fit_pca_planes(&cube.to_planes(), PcaOptions::default())
}

/// Full-rank PCA of the spectral vectors of `stack` (one vector per pixel,
/// one entry per plane).
pub fn fit_pca_planes(stack: &RealPlaneStack, options: PcaOptions) -> Result<PcaBasis> {
    let n = stack.pixels();
    let b = stack.planes;
    if n < 2 {
        return Err(Error::Degenerate("PCA needs at least two pixels".into()));
    }
    let mean: Vec<f64> = if options.center {
        (0..b)
            .map(|i| stack.plane(i).iter().sum::<f64>() / n as f64)
            .collect()
    } else {
        vec![0.0; b]
    };

    let mut cov = vec![0.0; b * b];
    let planes = stack.plane_refs();
    let mut centered = vec![0.0; b];
    #[allow(clippy::needless_range_loop)]
    for p in 0..n {
        for (i, c) in centered.iter_mut().enumerate() {
            *c = planes[i][p] - mean[i];
        }
        for (i, row) in cov.chunks_exact_mut(b).enumerate() {
            let ci = centered[i];
            for (r, c) in row[i..].iter_mut().zip(&centered[i..]) {
                *r += ci * c;
            }
        }
    }
    let scale = 1.0 / (n - 1) as f64;
    for i in 0..b {
        for j in i..b {
            let v = cov[i * b + j] * scale;
            cov[i * b + j] = v;
            cov[j * b + i] = v;
        }
    }

    let eig = jacobi_eigen(&cov, b);
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&x, &y| {
        eig.values[y]
            .partial_cmp(&eig.values[x])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.cmp(&y))
    });

    let mut basis = Vec::with_capacity(b * b);
    let mut eigenvalues = Vec::with_capacity(b);
    for &j in &order {
        let mut col: Vec<f64> = (0..b).map(|i| eig.vectors[i * b + j]).collect();
        // sign: largest-magnitude entry positive, first index wins ties
        let mut pivot = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
        basis.extend(col);
        eigenvalues.push(eig.values[j].max(0.0));
    }

    Ok(PcaBasis {
        bands: b,
        n_components: b,
        mean,
        basis,
        eigenvalues,
        step_exponent: None,
    })
}

pub fn truncate(basis: &PcaBasis, n_c: usize) -> Result<PcaBasis> {
    if n_c == 0 || n_c > basis.n_components {
        return Err(Error::InvalidParameter(format!(
            "cannot keep {n_c} of {} components",
            basis.n_components
        )));
    }
    Ok(PcaBasis {
        n_components: n_c,
        basis: basis.basis[..n_c * basis.bands].to_vec(),
        eigenvalues: basis.eigenvalues[..n_c.min(basis.eigenvalues.len())].to_vec(),
        ..basis.clone()
    })
}

/// Snaps mean and basis to multiples of `2^step_exponent`. The mean uses
/// 32-bit indices, basis entries 16-bit.
pub fn quantize_basis(
    basis: &PcaBasis,
    step_exponent: i8,
) -> Result<(PcaBasis, QuantizedVectorBlock, QuantizedVectorBlock)> {
    if basis.is_quantized() {
        return Err(Error::InvalidParameter("basis is already quantized".into()));
    }
    let quantize = |values: &[f64], width_bits: u8| -> Result<QuantizedVectorBlock> {
        let indices = values
            .iter()
            .map(|&v| {
                let idx = quant::index_of(v, step_exponent);
                if quant::fits(idx, width_bits) {
                    Ok(idx)
                } else {
                    Err(Error::Overflow {
                        value: v,
                        width_bits,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(QuantizedVectorBlock {
            step_exponent,
            width_bits,
            indices,
        })
    };
    let mean = quantize(&basis.mean, MEAN_INDEX_BITS)?;
    let vectors = quantize(&basis.basis, BASIS_INDEX_BITS)?;
    let quantized = PcaBasis {
        mean: mean.dequantized(),
        basis: vectors.dequantized(),
        step_exponent: Some(step_exponent),
        ..basis.clone()
    };
    Ok((quantized, mean, vectors))
}

/// PC coefficients `Vᵀ(s − mean)` for every pixel.
pub fn forward(stack: &RealPlaneStack, basis: &PcaBasis) -> Result<RealPlaneStack> {
    if stack.planes != basis.bands {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} bands, input has {}",
            basis.bands, stack.planes
        )));
    }
    let n = stack.pixels();
    let mut out = RealPlaneStack::zeros(stack.width, stack.height, basis.n_components);
    for j in 0..basis.n_components {
        let col = basis.column(j);
        let dst = out.plane_mut(j);
        for (b, (&v, &m)) in col.iter().zip(&basis.mean).enumerate() {
            if v == 0.0 {
                continue;
            }
            for (d, &s) in dst.iter_mut().zip(&stack.values[b * n..(b + 1) * n]) {
                *d += v * (s - m);
            }
        }
    }
    Ok(out)
}

pub fn forward_cube(cube: &SpectralCube, basis: &PcaBasis) -> Result<RealPlaneStack> {
    forward(&cube.to_planes(), basis)
}

/// Band planes `V·c + mean`, real-valued.
pub fn inverse(planes: &RealPlaneStack, basis: &PcaBasis) -> Result<RealPlaneStack> {
    if planes.planes != basis.n_components {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} components, input has {} planes",
            basis.n_components, planes.planes
        )));
    }
    let mut out = RealPlaneStack::zeros(planes.width, planes.height, basis.bands);
    for b in 0..basis.bands {
        let dst = out.plane_mut(b);
        dst.iter_mut().for_each(|d| *d = basis.mean[b]);
        for j in 0..basis.n_components {
            let v = basis.basis[j * basis.bands + b];
            if v == 0.0 {
                continue;
            }
            for (d, &c) in dst.iter_mut().zip(planes.plane(j)) {
                *d += v * c;
            }
        }
    }
    Ok(out)
}
