use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use msicodec::codec::external::{external_encoder_run, AdapterConfig};
use msicodec::codec::Plane;
use msicodec::cube::{load_cube, store_cube};
use msicodec::synth;
use msicodec::Error;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/identity_encoder.sh")
}

fn config_file(dir: &Path) -> PathBuf {
    let path = dir.join("adapter.cfg");
    fs::write(
        &path,
        format!(
            "executable = {}\ntemplate = /dev/null\nworkdir = {}\ntimeout = 30\n",
            fixture().display(),
            dir.join("work").display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn identity_encoder_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = AdapterConfig::load(config_file(dir.path())).unwrap();
    let planes: Vec<Plane> = (0..5)
        .map(|i| {
            Plane::new(
                8,
                6,
                (0..48).map(|v| (v * 13 + i * 7) as u16 % 1024).collect(),
            )
            .unwrap()
        })
        .collect();
    let run = external_encoder_run(&planes, 32, Some(&cfg)).unwrap();
    assert_eq!(run.reconstructions, planes);
    assert_eq!(run.bits, vec![480; 5]);
    assert_eq!(run.total_bits(), 2400);
}

#[test]
fn missing_executable_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = AdapterConfig::parse(&format!(
        "executable = {}\ntemplate = x\nworkdir = {}\n",
        dir.path().join("nope").display(),
        dir.path().display()
    ))
    .unwrap();
    let plane = Plane::filled(4, 4, 3).unwrap();
    assert!(matches!(
        external_encoder_run(&[plane], 30, Some(&cfg)),
        Err(Error::External(_))
    ));
}

#[test]
fn cli_external_plain_uses_env_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path());
    let input = dir.path().join("in.msrc");
    let output = dir.path().join("out.msrc");
    let cube = synth::rank1(8, 6, 4, 3).unwrap();
    store_cube(&cube, &input).unwrap();

    let o = Command::new(env!("CARGO_BIN_EXE_msic"))
        .args(["encode", "--scheme", "plain", "--qp", "30", "--external"])
        .arg(&input)
        .arg(&output)
        .env("MSIC_ADAPTER_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("total_bits 1920"), "{text}");
    assert!(text.contains("psnr inf"), "{text}");
    assert_eq!(load_cube(&output).unwrap(), cube);

    let o = Command::new(env!("CARGO_BIN_EXE_msic"))
        .args(["encode", "--scheme", "plain", "--qp", "30", "--external"])
        .arg(&input)
        .arg(&output)
        .env_remove("MSIC_ADAPTER_CONFIG")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
