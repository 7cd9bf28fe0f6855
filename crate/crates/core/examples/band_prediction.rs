//! Block-wise least-squares prediction of spectral bands from a few
//! reference planes, with quantized weights and closed-loop residuals.

use msicodec::pca::{fit_pca, forward_cube, truncate};
use msicodec::predict::{closed_loop_residuals, BlockGrid, PredictorConfig};
use msicodec::synth;

fn energy(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cube = synth::natural_gradient(128, 96, 31, 5)?;
    let basis = truncate(&fit_pca(&cube)?, 2)?;
    let refs = forward_cube(&cube, &basis)?;
    let bands = cube.to_planes();
    let targets = bands.plane_refs();
    let grid = BlockGrid::new(cube.width(), cube.height(), 64)?;

    let (weights, residuals) = closed_loop_residuals(
        &targets,
        &refs.plane_refs(),
        &grid,
        PredictorConfig::default(),
    )?;
    println!(
        "{} blocks x {} targets x {} weights = {} indices, section {} bytes, {} saturated",
        grid.len(),
        weights.targets,
        weights.regressors + 1,
        weights.len(),
        weights.to_section().len(),
        weights.saturated
    );
    for b in [0, 10, 20, 30] {
        println!(
            "band {b:2}: mean square {:10.1} -> residual {:8.3}; block 0 weights {:.4?}",
            energy(targets[b]),
            energy(&residuals[b]),
            weights.weights(b, 0)
        );
    }
    Ok(())
}
