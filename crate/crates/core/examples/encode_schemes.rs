//! Encode one cube with each scheme, round-trip the container through a
//! file and report rate and quality.
//!
//!     cargo run --release --example encode_schemes [cube.msrc]

use msicodec::cube::{load_cube, psnr};
use msicodec::pipeline::{self, CodedContainer, SchemeParams};
use msicodec::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cube = match std::env::args().nth(1) {
        Some(path) => load_cube(path)?,
        None => synth::natural_gradient(96, 96, 31, 2)?,
    };
    let dir = tempfile::tempdir()?;
    let configs = [
        SchemeParams::plain(30),
        SchemeParams::pca(4, 30),
        SchemeParams::hpcls(2, 25, 3, 35),
        SchemeParams::hpcls_rgb(2, 25, 3, 35, 30),
    ];
    for params in configs {
        let encoded = pipeline::encode(&cube, &params)?;
        let path = dir.path().join(format!("{}.msc", params.scheme));
        let bytes = encoded.container.write(&path)?;
        let decoded = pipeline::decode(&CodedContainer::read(&path)?)?;
        assert_eq!(decoded, encoded.reconstruction);
        let bpp = 8.0 * bytes as f64 / (cube.pixels() * cube.bands()) as f64;
        println!(
            "{:<45} {bytes:8} bytes  {bpp:.4} bit/sample  {:.2} dB",
            params.to_string(),
            psnr(&cube, &decoded)?
        );
    }
    Ok(())
}
