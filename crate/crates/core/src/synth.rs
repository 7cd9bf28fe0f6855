//! Deterministic synthetic cubes for tests, examples and benchmarks.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cube::{max_sample, SpectralCube};
use crate::error::Result;

fn clamp_round(v: f64, depth: u8) -> u16 {
    v.round().clamp(0.0, max_sample(depth) as f64) as u16
}

/// Smooth positive spectrum: a Gaussian bump over the band axis.
fn bump(bands: usize, centre: f64, width: f64) -> Vec<f64> {
    (0..bands)
        .map(|b| {
            let t = (b as f64 - centre) / width;
            (-0.5 * t * t).exp()
        })
        .collect()
}

pub fn constant(
    width: usize,
    height: usize,
    bands: usize,
    depth: u8,
    value: u16,
) -> Result<SpectralCube> {
    SpectralCube::from_fn(width, height, bands, depth, |_, _, _| value)
}

/// `mean(b) + a(x, y) · v(b)` with a smooth spatial field `a`.
pub fn rank1(width: usize, height: usize, bands: usize, seed: u64) -> Result<SpectralCube> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase: f64 = rng.random_range(0.0..TAU);
    let v = bump(bands, bands as f64 * 0.4, bands as f64 * 0.3 + 1.0);
    SpectralCube::from_fn(width, height, bands, 10, |b, y, x| {
        let a = 250.0 * ((x as f64 * 0.13 + phase).sin() + (y as f64 * 0.09).cos());
        clamp_round(480.0 + 40.0 * b as f64 / bands as f64 + a * v[b], 10)
    })
}

/// Three smooth spatial fields mixed with three smooth spectra, plus
/// Gaussian noise of standard deviation `sigma`.
pub fn rank3_noise(
    width: usize,
    height: usize,
    bands: usize,
    sigma: f64,
    seed: u64,
) -> Result<SpectralCube> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spectra = [
        bump(bands, bands as f64 * 0.2, bands as f64 * 0.25 + 0.5),
        bump(bands, bands as f64 * 0.55, bands as f64 * 0.2 + 0.5),
        bump(bands, bands as f64 * 0.85, bands as f64 * 0.3 + 0.5),
    ];
    let freqs: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.02..0.15),
                rng.random_range(0.02..0.15),
                rng.random_range(0.0..TAU),
            )
        })
        .collect();
    let noise = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    let mut draws: Vec<f64> = (0..width * height * bands)
        .map(|_| noise.sample(&mut rng))
        .collect();
    if sigma == 0.0 {
        draws.iter_mut().for_each(|d| *d = 0.0);
    }
    SpectralCube::from_fn(width, height, bands, 10, |b, y, x| {
        let mut v = 200.0;
        for (k, &(fx, fy, ph)) in freqs.iter().enumerate() {
            let field = 1.0 + (x as f64 * fx + ph).sin() * (y as f64 * fy + ph).cos();
            v += 250.0 * field * spectra[k][b];
        }
        clamp_round(v + draws[(b * height + y) * width + x], 10)
    })
}

/// Independent uniform samples over the full range of `depth`.
pub fn random(
    width: usize,
    height: usize,
    bands: usize,
    depth: u8,
    seed: u64,
) -> Result<SpectralCube> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max = max_sample(depth);
    let samples = (0..width * height * bands)
        .map(|_| rng.random_range(0..=max))
        .collect();
    SpectralCube::new(width, height, bands, depth, samples)
}

/// A scene-like cube: four material spectra blended along spatial
/// gradients, with illumination falloff and mild texture.
pub fn natural_gradient(
    width: usize,
    height: usize,
    bands: usize,
    seed: u64,
) -> Result<SpectralCube> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let materials: Vec<Vec<f64>> = (0..4)
        .map(|_| {
            let c = rng.random_range(0.0..bands as f64);
            let w = rng.random_range(2.0..(bands as f64).max(3.0));
            let base = rng.random_range(0.05..0.3);
            bump(bands, c, w).into_iter().map(|v| base + v).collect()
        })
        .collect();
    let texture: Vec<f64> = (0..width * height)
        .map(|_| rng.random_range(-0.03..0.03))
        .collect();
    let (wf, hf) = (width.max(2) as f64 - 1.0, height.max(2) as f64 - 1.0);
    SpectralCube::from_fn(width, height, bands, 10, |b, y, x| {
        let (u, v) = (x as f64 / wf, y as f64 / hf);
        let weights = [(1.0 - u) * (1.0 - v), u * (1.0 - v), (1.0 - u) * v, u * v];
        let reflect: f64 = weights.iter().zip(&materials).map(|(w, m)| w * m[b]).sum();
        let light = 0.6 + 0.4 * (1.0 - ((u - 0.3).powi(2) + (v - 0.4).powi(2)).sqrt());
        clamp_round(800.0 * light * reflect * (1.0 + texture[y * width + x]), 10)
    })
}

/// The five cube kinds used by the closed-loop suites.
pub fn corpus(
    width: usize,
    height: usize,
    bands: usize,
) -> Result<Vec<(&'static str, SpectralCube)>> {
    Ok(vec![
        ("constant", constant(width, height, bands, 10, 417)?),
        ("rank1", rank1(width, height, bands, 1)?),
        ("rank3_noise", rank3_noise(width, height, bands, 2.0, 2)?),
        ("random", random(width, height, bands, 10, 3)?),
        (
            "natural_gradient",
            natural_gradient(width, height, bands, 4)?,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        for ((_, a), (_, b)) in corpus(12, 9, 7)
            .unwrap()
            .iter()
            .zip(corpus(12, 9, 7).unwrap().iter())
        {
            assert_eq!(a, b);
            assert!(a.max_value() <= 1023);
        }
    }

    #[test]
    fn rank1_has_one_dominant_component() {
        let c = rank1(32, 32, 8, 5).unwrap();
        let basis = crate::pca::fit_pca(&c).unwrap();
        let ev = basis.eigenvalues();
        assert!(ev[1] < 1e-3 * ev[0], "{ev:?}");
    }
}
