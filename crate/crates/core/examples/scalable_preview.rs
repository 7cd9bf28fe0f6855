//! The scalable scheme: an RGB preview layer that decodes on its own,
//! followed by an enhancement layer for the full spectral cube.

use msicodec::cli::write_ppm;
use msicodec::cube::{cie1931_cmf, psnr, render_rgb};
use msicodec::pipeline::{self, CodedContainer, Layer, SchemeParams};
use msicodec::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cube = synth::natural_gradient(96, 64, 31, 9)?;
    let params = SchemeParams::hpcls_rgb(2, 25, 3, 35, 30);
    let encoded = pipeline::encode(&cube, &params)?;
    let bytes = encoded.container.to_bytes()?;
    let preview_end =
        encoded.container.header_len() + encoded.container.layer_bytes(Layer::Preview);
    println!(
        "{} bytes total: header {}, preview layer {}, enhancement {}",
        bytes.len(),
        encoded.container.header_len(),
        encoded.container.layer_bytes(Layer::Preview),
        encoded.container.layer_bytes(Layer::Enhancement)
    );

    let truncated = CodedContainer::parse(&bytes[..preview_end])?;
    let preview = pipeline::decode_preview(&truncated)?;
    assert_eq!(Some(&preview), encoded.preview.as_ref());
    let ideal = render_rgb(&cube, &cie1931_cmf())?;
    println!(
        "preview from the first {preview_end} bytes: {:.2} dB against the ideal rendering",
        psnr(&ideal.to_cube(), &preview.to_cube())?
    );
    match pipeline::decode(&truncated) {
        Ok(_) => println!("unexpected: full decode from a truncated file"),
        Err(e) => println!("full decode of the truncated file: {e}"),
    }
    let full = pipeline::decode(&CodedContainer::parse(&bytes)?)?;
    println!("full file: {:.2} dB", psnr(&cube, &full)?);

    let dir = tempfile::tempdir()?;
    let ppm = dir.path().join("preview.ppm");
    write_ppm(&ppm, &preview)?;
    println!(
        "wrote {} ({} bytes)",
        ppm.display(),
        std::fs::metadata(&ppm)?.len()
    );
    Ok(())
}
