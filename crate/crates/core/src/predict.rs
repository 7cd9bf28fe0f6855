//! Block-wise least-squares inter-band prediction.
//!
//! Each target plane is split into non-overlapping square blocks; per block an
//! affine model over the co-located regressor samples is fitted, quantized to
//! the transmitted fixed-point grid, and the residual is taken against the
//! prediction made with the quantized weights, exactly as a decoder would
//! form it.

use rayon::prelude::*;

use crate::bytes::{Reader, Writer};
use crate::error::{Error, Result};
use crate::quant;

pub const DEFAULT_BLOCK_EDGE: usize = 64;
pub const WEIGHT_INDEX_BITS: u8 = 16;
pub const WEIGHT_SECTION_HEADER: usize = 11;
const DAMPING: f64 = 1e-8;
const REFINE_STEPS: usize = 4;

/// Extent of one block in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockGrid {
    pub edge: usize,
    pub width: usize,
    pub height: usize,
}

impl BlockGrid {
    pub fn new(width: usize, height: usize, edge: usize) -> Result<Self> {
        if edge == 0 || width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "block grid {width}x{height} with edge {edge}"
            )));
        }
        Ok(Self {
            edge,
            width,
            height,
        })
    }

    pub fn blocks_x(&self) -> usize {
        self.width.div_ceil(self.edge)
    }

    pub fn blocks_y(&self) -> usize {
        self.height.div_ceil(self.edge)
    }

    pub fn len(&self) -> usize {
        self.blocks_x() * self.blocks_y()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Blocks in row-major order; edge blocks are clipped to the plane.
    pub fn blocks(&self) -> impl Iterator<Item = Block> + '_ {
        (0..self.blocks_y()).flat_map(move |by| {
            (0..self.blocks_x()).map(move |bx| {
                let (x0, y0) = (bx * self.edge, by * self.edge);
                Block {
                    x0,
                    y0,
                    width: self.edge.min(self.width - x0),
                    height: self.edge.min(self.height - y0),
                }
            })
        })
    }

    fn gather(&self, plane: &[f64], b: &Block) -> Vec<f64> {
        (b.y0..b.y0 + b.height)
            .flat_map(|y| plane[y * self.width + b.x0..y * self.width + b.x0 + b.width].iter())
            .copied()
            .collect()
    }
}

/// Solves the square system `a·x = rhs` by Gaussian elimination with partial
/// pivoting; unknowns with a vanishing pivot are set to zero.
fn solve(mut a: Vec<f64>, mut rhs: Vec<f64>, n: usize) -> Vec<f64> {
    let mut perm_ok = vec![true; n];
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i * n + col]
                    .abs()
                    .partial_cmp(&a[j * n + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(j.cmp(&i))
            })
            .expect("non-empty range");
        if a[pivot * n + col].abs() < 1e-300 {
            perm_ok[col] = false;
            continue;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            rhs.swap(col, pivot);
        }
        let p = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        if !perm_ok[col] {
            continue;
        }
        let mut s = rhs[col];
        for k in col + 1..n {
            s -= a[col * n + k] * x[k];
        }
        x[col] = s / a[col * n + col];
    }
    x
}

/// Least-squares weights `[w_1 … w_R, intercept]` for `target ≈ Σ w_r·x_r + c`,
/// from damped normal equations (`λ = 1e-8·trace/(R+1)`) followed by a few
/// refinement steps against the undamped equations. With
/// `intercept == false` the last weight is fixed at zero.
pub fn fit_ls(target: &[f64], regressors: &[&[f64]], intercept: bool) -> Vec<f64> {
    let r = regressors.len();
    let n = if intercept { r + 1 } else { r };
    let column = |k: usize, i: usize| if k < r { regressors[k][i] } else { 1.0 };
    let mut a = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for (i, &t) in target.iter().enumerate() {
        for j in 0..n {
            let xj = column(j, i);
            rhs[j] += xj * t;
            for k in j..n {
                a[j * n + k] += xj * column(k, i);
            }
        }
    }
    for j in 0..n {
        for k in 0..j {
            a[j * n + k] = a[k * n + j];
        }
    }
    let trace: f64 = (0..n).map(|j| a[j * n + j]).sum();
    let lambda = DAMPING * trace / (r + 1) as f64;
    let mut damped = a.clone();
    for j in 0..n {
        damped[j * n + j] += lambda;
    }
    // iterated refinement against the undamped system removes the damping
    // bias wherever the normal matrix is well conditioned
    let mut w = solve(damped.clone(), rhs.clone(), n);
    for _ in 0..REFINE_STEPS {
        let resid: Vec<f64> = (0..n)
            .map(|j| rhs[j] - (0..n).map(|k| a[j * n + k] * w[k]).sum::<f64>())
            .collect();
        let dw = solve(damped.clone(), resid, n);
        for (x, d) in w.iter_mut().zip(dw) {
            *x += d;
        }
    }
    if !intercept {
        w.push(0.0);
    }
    w
}

/// Step exponents for weights and the intercept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightSteps {
    pub weight_exp: i8,
    pub intercept_exp: i8,
}

impl WeightSteps {
    /// `Δw = 2^weight_exp`; the intercept step is at least 2⁶ coarser and wide
    /// enough that 16-bit indices span `±2^(bit_depth+2)`.
    pub fn for_depth(weight_exp: i8, bit_depth: u8) -> Self {
        let intercept_exp = (weight_exp as i32 + 6).max(bit_depth as i32 - 13);
        Self {
            weight_exp,
            intercept_exp: intercept_exp as i8,
        }
    }
}

impl Default for WeightSteps {
    fn default() -> Self {
        Self::for_depth(quant::WEIGHT_STEP_EXP, 10)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedWeights {
    pub indices: Vec<i16>,
    pub dequantized: Vec<f64>,
    pub saturated: usize,
}

/// Round-to-nearest (ties away from zero) with saturation at the 16-bit
/// extremes. The last entry of `w` is the intercept.
pub fn quantize_weights(w: &[f64], steps: WeightSteps) -> QuantizedWeights {
    let mut saturated = 0;
    let last = w.len().saturating_sub(1);
    let indices: Vec<i16> = w
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let exp = if i == last {
                steps.intercept_exp
            } else {
                steps.weight_exp
            };
            let idx = quant::index_of(v, exp);
            let clamped = idx.clamp(i16::MIN as i64, i16::MAX as i64);
            if clamped != idx {
                saturated += 1;
            }
            clamped as i16
        })
        .collect();
    let dequantized = indices
        .iter()
        .enumerate()
        .map(|(i, &idx)| {
            let exp = if i == last {
                steps.intercept_exp
            } else {
                steps.weight_exp
            };
            quant::dequantize(idx as i64, exp)
        })
        .collect();
    QuantizedWeights {
        indices,
        dequantized,
        saturated,
    }
}

/// Quantized predictor weights for every (target, block) pair, stored
/// target-major, blocks row-major, regressors then intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub grid: BlockGrid,
    pub targets: usize,
    pub regressors: usize,
    pub steps: WeightSteps,
    pub indices: Vec<i16>,
    /// Count of weights clamped during quantization.
    pub saturated: usize,
}

impl WeightSet {
    fn stride(&self) -> usize {
        self.regressors + 1
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Dequantized weights of `target` in `block`.
    pub fn weights(&self, target: usize, block: usize) -> Vec<f64> {
        let start = (target * self.grid.len() + block) * self.stride();
        let idx = &self.indices[start..start + self.stride()];
        let last = self.regressors;
        idx.iter()
            .enumerate()
            .map(|(i, &v)| {
                let exp = if i == last {
                    self.steps.intercept_exp
                } else {
                    self.steps.weight_exp
                };
                quant::dequantize(v as i64, exp)
            })
            .collect()
    }

    /// Concatenates single- or multi-target sets sharing grid and layout.
    pub fn concat(sets: Vec<WeightSet>) -> Result<WeightSet> {
        let mut iter = sets.into_iter();
        let mut out = iter
            .next()
            .ok_or_else(|| Error::InvalidParameter("no weight sets to join".into()))?;
        for s in iter {
            if s.grid != out.grid || s.regressors != out.regressors || s.steps != out.steps {
                return Err(Error::DimensionMismatch("weight set layouts differ".into()));
            }
            out.targets += s.targets;
            out.saturated += s.saturated;
            out.indices.extend(s.indices);
        }
        Ok(out)
    }

    pub fn section_len(&self) -> usize {
        WEIGHT_SECTION_HEADER + 2 * self.indices.len()
    }

    /// u16 S_p, u16 blocks_x, u16 blocks_y, u16 targets, u8 regressors,
    /// i8 weight step exponent, i8 intercept step exponent, i16 indices.
    pub fn to_section(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u16(self.grid.edge as u16)
            .u16(self.grid.blocks_x() as u16)
            .u16(self.grid.blocks_y() as u16)
            .u16(self.targets as u16)
            .u8(self.regressors as u8)
            .i8(self.steps.weight_exp)
            .i8(self.steps.intercept_exp);
        for &i in &self.indices {
            w.i16(i);
        }
        w.finish()
    }

    /// Parses a weight section for a plane of `width × height`.
    pub fn from_section(bytes: &[u8], width: usize, height: usize) -> Result<Self> {
        let mut r = Reader::new(bytes, "weight section");
        let edge = r.u16()? as usize;
        let bx = r.u16()? as usize;
        let by = r.u16()? as usize;
        let targets = r.u16()? as usize;
        let regressors = r.u8()? as usize;
        let steps = WeightSteps {
            weight_exp: r.i8()?,
            intercept_exp: r.i8()?,
        };
        let grid = BlockGrid::new(width, height, edge)
            .map_err(|_| Error::Decode("weight section has zero block edge".into()))?;
        if grid.blocks_x() != bx || grid.blocks_y() != by {
            return Err(Error::Decode(format!(
                "weight grid {bx}x{by} does not match {width}x{height} at edge {edge}"
            )));
        }
        let count = targets * grid.len() * (regressors + 1);
        let indices = (0..count).map(|_| r.i16()).collect::<Result<Vec<_>>>()?;
        r.expect_end()?;
        Ok(Self {
            grid,
            targets,
            regressors,
            steps,
            indices,
            saturated: 0,
        })
    }
}

fn check_planes(grid: &BlockGrid, planes: &[&[f64]]) -> Result<()> {
    let n = grid.width * grid.height;
    if let Some(p) = planes.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "plane of {} samples on a {}x{} grid",
            p.len(),
            grid.width,
            grid.height
        )));
    }
    Ok(())
}

/// Per-block affine prediction of `target` from `regressors` with the
/// dequantized weights.
pub fn predict_plane(
    regressors: &[&[f64]],
    weights: &WeightSet,
    target: usize,
    grid: &BlockGrid,
) -> Result<Vec<f64>> {
    if *grid != weights.grid || regressors.len() != weights.regressors || target >= weights.targets
    {
        return Err(Error::DimensionMismatch(
            "weights do not match grid, regressors or target".into(),
        ));
    }
    check_planes(grid, regressors)?;
    let mut out = vec![0.0; grid.width * grid.height];
    for (k, b) in grid.blocks().enumerate() {
        let w = weights.weights(target, k);
        let (coef, intercept) = w.split_at(regressors.len());
        for y in b.y0..b.y0 + b.height {
            for x in b.x0..b.x0 + b.width {
                let i = y * grid.width + x;
                let mut v = intercept[0];
                for (r, &c) in regressors.iter().zip(coef) {
                    v += c * r[i];
                }
                out[i] = v;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictorConfig {
    pub steps: WeightSteps,
    pub intercept: bool,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            steps: WeightSteps::default(),
            intercept: true,
        }
    }
}

/// Fits, quantizes and applies the block predictor for one target plane.
/// The residual is `original − prediction(quantized weights)`.
pub fn closed_loop_residual(
    original: &[f64],
    regressors: &[&[f64]],
    grid: &BlockGrid,
    config: PredictorConfig,
) -> Result<(WeightSet, Vec<f64>)> {
    check_planes(grid, &[original])?;
    check_planes(grid, regressors)?;
    if regressors.len() > u8::MAX as usize {
        return Err(Error::InvalidParameter("too many regressors".into()));
    }
    let mut indices = Vec::with_capacity(grid.len() * (regressors.len() + 1));
    let mut saturated = 0;
    for b in grid.blocks() {
        let t = grid.gather(original, &b);
        let xs: Vec<Vec<f64>> = regressors.iter().map(|r| grid.gather(r, &b)).collect();
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let q = quantize_weights(&fit_ls(&t, &refs, config.intercept), config.steps);
        saturated += q.saturated;
        indices.extend(q.indices);
    }
    let set = WeightSet {
        grid: *grid,
        targets: 1,
        regressors: regressors.len(),
        steps: config.steps,
        indices,
        saturated,
    };
    let pred = predict_plane(regressors, &set, 0, grid)?;
    let residual = original.iter().zip(&pred).map(|(o, p)| o - p).collect();
    Ok((set, residual))
}

/// [`closed_loop_residual`] for several targets; weights are joined
/// target-major.
pub fn closed_loop_residuals(
    originals: &[&[f64]],
    regressors: &[&[f64]],
    grid: &BlockGrid,
    config: PredictorConfig,
) -> Result<(WeightSet, Vec<Vec<f64>>)> {
    let results = originals
        .par_iter()
        .map(|o| closed_loop_residual(o, regressors, grid, config))
        .collect::<Result<Vec<_>>>()?;
    let (sets, residuals): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((WeightSet::concat(sets)?, residuals))
}
