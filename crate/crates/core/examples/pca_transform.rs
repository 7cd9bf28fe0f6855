//! Spectral PCA: eigenvalues, energy compaction and basis quantization.

use msicodec::cube::mse;
use msicodec::cube::SpectralCube;
use msicodec::pca::{fit_pca, forward_cube, inverse, quantize_basis, truncate};
use msicodec::quant::BASIS_STEP_EXP;
use msicodec::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cube = synth::rank3_noise(64, 64, 31, 2.0, 7)?;
    let basis = fit_pca(&cube)?;
    let ev = basis.eigenvalues();
    let total: f64 = ev.iter().sum();
    println!("leading eigenvalues: {:.1?}", &ev[..5]);

    for n_c in [1, 2, 3, 4, 8] {
        let t = truncate(&basis, n_c)?;
        let (q, mean, vectors) = quantize_basis(&t, BASIS_STEP_EXP)?;
        let rec = inverse(&forward_cube(&cube, &q)?, &q)?;
        let rec = SpectralCube::from_planes_rounded(&rec, cube.bit_depth())?;
        let kept: f64 = ev[..n_c].iter().sum();
        println!(
            "n_c={n_c}: {:6.3}% energy kept, mse {:7.3}, basis payload {} + {} indices",
            100.0 * kept / total,
            mse(&cube, &rec)?,
            mean.indices.len(),
            vectors.indices.len()
        );
    }
    Ok(())
}
