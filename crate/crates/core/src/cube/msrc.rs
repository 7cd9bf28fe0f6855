//! MSRC raw cube files.
//!
//! Layout (little-endian): `"MSRC"`, u8 version (1), u8 bit depth, u16 bands,
//! u16 width, u16 height, u32 reserved (0), then band-planar u16 samples,
//! row-major within each band.

use std::fs;
use std::path::Path;

use super::SpectralCube;
use crate::error::{Error, Result};

pub const MSRC_MAGIC: &[u8; 4] = b"MSRC";
pub const MSRC_HEADER_LEN: usize = 16;
const MSRC_VERSION: u8 = 1;

pub fn parse_cube(bytes: &[u8]) -> Result<SpectralCube> {
    if bytes.len() < MSRC_HEADER_LEN {
        return Err(Error::Format(format!(
            "{} bytes is shorter than the MSRC header",
            bytes.len()
        )));
    }
    if &bytes[..4] != MSRC_MAGIC {
        return Err(Error::Format("missing MSRC magic".into()));
    }
    if bytes[4] != MSRC_VERSION {
        return Err(Error::Format(format!(
            "unsupported MSRC version {}",
            bytes[4]
        )));
    }
    let bit_depth = bytes[5];
    if !(1..=16).contains(&bit_depth) {
        return Err(Error::Format(format!("bit depth {bit_depth}")));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]) as usize;
    let (bands, width, height) = (u16_at(6), u16_at(8), u16_at(10));
    if bytes[12..16] != [0; 4] {
        return Err(Error::Format("reserved header field is non-zero".into()));
    }
    if bands == 0 || width == 0 || height == 0 {
        return Err(Error::Format(format!(
            "zero dimension in header ({width}x{height}x{bands})"
        )));
    }
    let expected = MSRC_HEADER_LEN + 2 * width * height * bands;
    if bytes.len() != expected {
        return Err(Error::Length {
            expected,
            found: bytes.len(),
        });
    }
    let samples = bytes[MSRC_HEADER_LEN..]
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    SpectralCube::new(width, height, bands, bit_depth, samples)
}

pub fn write_cube(cube: &SpectralCube) -> Result<Vec<u8>> {
    let dim = |v: usize, what: &str| {
        u16::try_from(v).map_err(|_| Error::Size(format!("{what} {v} exceeds u16")))
    };
    let (bands, width, height) = (
        dim(cube.bands(), "bands")?,
        dim(cube.width(), "width")?,
        dim(cube.height(), "height")?,
    );
    let mut out = Vec::with_capacity(MSRC_HEADER_LEN + 2 * cube.samples().len());
    out.extend_from_slice(MSRC_MAGIC);
    out.push(MSRC_VERSION);
    out.push(cube.bit_depth());
    out.extend_from_slice(&bands.to_le_bytes());
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for &s in cube.samples() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    Ok(out)
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<SpectralCube> {
    parse_cube(&fs::read(path)?)
}

/// Writes `cube` to `path`, returning the number of bytes written.
pub fn store_cube(cube: &SpectralCube, path: impl AsRef<Path>) -> Result<usize> {
    let bytes = write_cube(cube)?;
    fs::write(path, &bytes)?;
    Ok(bytes.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(bit_depth: u8, bands: u16, width: u16, height: u16) -> Vec<u8> {
        let mut h = b"MSRC".to_vec();
        h.push(1);
        h.push(bit_depth);
        h.extend_from_slice(&bands.to_le_bytes());
        h.extend_from_slice(&width.to_le_bytes());
        h.extend_from_slice(&height.to_le_bytes());
        h.extend_from_slice(&[0; 4]);
        h
    }

    #[test]
    fn single_sample_file() {
        let mut bytes = header(10, 1, 1, 1);
        bytes.extend_from_slice(&512u16.to_le_bytes());
        let cube = parse_cube(&bytes).unwrap();
        assert_eq!(cube.samples(), &[512]);
        assert_eq!(cube.bit_depth(), 10);
        // 16-byte header plus one 2-byte sample
        assert_eq!(write_cube(&cube).unwrap().len(), 18);
        assert_eq!(write_cube(&cube).unwrap(), bytes);
    }

    #[test]
    fn short_payload_is_length_error() {
        let mut bytes = header(10, 3, 2, 2);
        bytes.extend(std::iter::repeat_n(0u8, 22));
        assert!(matches!(
            parse_cube(&bytes),
            Err(Error::Length {
                expected: 40,
                found: 38
            })
        ));
    }

    #[test]
    fn bad_magic_and_range() {
        let mut bytes = header(10, 1, 1, 1);
        bytes.extend_from_slice(&2000u16.to_le_bytes());
        assert!(matches!(parse_cube(&bytes), Err(Error::Range { .. })));
        bytes[0] = b'X';
        assert!(matches!(parse_cube(&bytes), Err(Error::Format(_))));
        assert!(matches!(parse_cube(b"MSR"), Err(Error::Format(_))));
    }

    #[test]
    fn unwritable_path() {
        let cube = SpectralCube::new(1, 1, 1, 10, vec![3]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("cube.msrc");
        assert!(matches!(store_cube(&cube, path), Err(Error::Io(_))));
    }

    #[test]
    fn file_roundtrip() {
        let cube =
            SpectralCube::from_fn(3, 2, 4, 12, |b, y, x| (b * 1000 + y * 10 + x) as u16).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.msrc");
        let n = store_cube(&cube, &path).unwrap();
        assert_eq!(n, 16 + 2 * 24);
        assert_eq!(load_cube(&path).unwrap(), cube);
    }

    proptest! {
        #[test]
        fn valid_files_roundtrip_bytewise(
            depth in 1u8..=16,
            w in 1u16..5, h in 1u16..5, b in 1u16..4,
            seed in any::<u64>(),
        ) {
            let n = (w * h * b) as usize;
            let max = (1u32 << depth) - 1;
            let mut bytes = header(depth, b, w, h);
            let mut state = seed;
            for _ in 0..n {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let s = ((state >> 33) as u32 % (max + 1)) as u16;
                bytes.extend_from_slice(&s.to_le_bytes());
            }
            let cube = parse_cube(&bytes).unwrap();
            prop_assert_eq!(write_cube(&cube).unwrap(), bytes);
        }
    }
}
