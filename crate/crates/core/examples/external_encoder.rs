//! Drive an external VTM-style encoder through the adapter. The config
//! file comes from the first argument or MSIC_ADAPTER_CONFIG; without one
//! the bundled stand-in script (copies input to output) is used.
//!
//!     cargo run --example external_encoder [adapter.cfg]

use std::path::Path;

use msicodec::codec::external::{external_encoder_run, AdapterConfig};
use msicodec::codec::Plane;
use msicodec::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let config = match std::env::args().nth(1) {
        Some(p) => AdapterConfig::load(p)?,
        None => match AdapterConfig::from_env()? {
            Some(c) => c,
            None => {
                let script = Path::new(env!("CARGO_MANIFEST_DIR"))
                    .join("tests/fixtures/identity_encoder.sh");
                println!("no adapter configured, using {}", script.display());
                AdapterConfig::parse(&format!(
                    "executable = {}\ntemplate = /dev/null\nworkdir = {}\n",
                    script.display(),
                    dir.path().display()
                ))?
            }
        },
    };
    let cube = synth::natural_gradient(64, 64, 31, 4)?;
    let planes: Vec<Plane> = (0..cube.bands())
        .map(|b| Plane::new(64, 64, cube.band(b).to_vec()))
        .collect::<Result<_, _>>()?;
    let run = external_encoder_run(&planes, 32, Some(&config))?;
    println!("{} pictures, {} bits", run.bits.len(), run.total_bits());
    for (poc, bits) in run.bits.iter().enumerate().take(4) {
        println!("  POC {poc}: {bits} bits");
    }
    Ok(())
}
