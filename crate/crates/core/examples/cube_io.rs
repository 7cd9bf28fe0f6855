//! Write a cube to MSRC, read it back, crop the corners and render a preview.
//!
//!     cargo run --example cube_io [cube.msrc]

use msicodec::cube::{cie1931_cmf, crop_quadrants, load_cube, psnr, render_rgb, store_cube};
use msicodec::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let cube = match std::env::args().nth(1) {
        Some(path) => load_cube(path)?,
        None => synth::natural_gradient(300, 280, 31, 1)?,
    };
    let path = dir.path().join("scene.msrc");
    let size = store_cube(&cube, &path)?;
    let back = load_cube(&path)?;
    assert_eq!(back, cube);
    println!(
        "{}x{}x{} at {} bits, {size} bytes on disk, max sample {}",
        cube.width(),
        cube.height(),
        cube.bands(),
        cube.bit_depth(),
        cube.max_value()
    );

    match crop_quadrants(&cube) {
        Ok(crops) => {
            for (tag, c) in ["tl", "tr", "bl", "br"].iter().zip(&crops) {
                println!("crop {tag}: {}x{}", c.width(), c.height());
            }
        }
        Err(e) => println!("no crops: {e}"),
    }

    let mut noisy = cube.samples().to_vec();
    for (i, s) in noisy.iter_mut().enumerate() {
        if i % 7 == 0 {
            *s = s.saturating_add(1).min(1023);
        }
    }
    let noisy = msicodec::cube::SpectralCube::new(
        cube.width(),
        cube.height(),
        cube.bands(),
        cube.bit_depth(),
        noisy,
    )?;
    println!("psnr(self) = {}", psnr(&cube, &cube)?);
    println!(
        "psnr(±1 on every 7th sample) = {:.2} dB",
        psnr(&cube, &noisy)?
    );

    if cube.bands() == 31 {
        let rgb = render_rgb(&cube, &cie1931_cmf())?;
        let mid = rgb.width * (rgb.height / 2) + rgb.width / 2;
        println!(
            "preview centre pixel rgb = ({}, {}, {})",
            rgb.channel(0)[mid],
            rgb.channel(1)[mid],
            rgb.channel(2)[mid]
        );
    }
    Ok(())
}
