//! Orthonormal 8×8 DCT-II and zig-zag scan.

use std::sync::OnceLock;

pub const N: usize = 8;
pub const AREA: usize = N * N;

fn basis() -> &'static [[f64; N]; N] {
    static BASIS: OnceLock<[[f64; N]; N]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut m = [[0.0; N]; N];
        for (k, row) in m.iter_mut().enumerate() {
            let c = if k == 0 {
                (1.0 / N as f64).sqrt()
            } else {
                (2.0 / N as f64).sqrt()
            };
            for (n, v) in row.iter_mut().enumerate() {
                *v = c
                    * ((2 * n + 1) as f64 * k as f64 * std::f64::consts::PI / (2 * N) as f64).cos();
            }
        }
        m
    })
}

/// Row-major block to row-major coefficients, `M·X·Mᵀ`.
pub fn forward(block: &[f64; AREA]) -> [f64; AREA] {
    let m = basis();
    let mut tmp = [0.0; AREA];
    for y in 0..N {
        for k in 0..N {
            tmp[y * N + k] = (0..N).map(|x| m[k][x] * block[y * N + x]).sum();
        }
    }
    let mut out = [0.0; AREA];
    for k in 0..N {
        for x in 0..N {
            out[k * N + x] = (0..N).map(|y| m[k][y] * tmp[y * N + x]).sum();
        }
    }
    out
}

pub fn inverse(coeffs: &[f64; AREA]) -> [f64; AREA] {
    let m = basis();
    let mut tmp = [0.0; AREA];
    for k in 0..N {
        for x in 0..N {
            tmp[k * N + x] = (0..N).map(|l| coeffs[k * N + l] * m[l][x]).sum();
        }
    }
    let mut out = [0.0; AREA];
    for y in 0..N {
        for x in 0..N {
            out[y * N + x] = (0..N).map(|k| m[k][y] * tmp[k * N + x]).sum();
        }
    }
    out
}

/// `ZIGZAG[i]` is the raster index of the i-th coefficient in scan order.
pub fn zigzag() -> &'static [usize; AREA] {
    static ORDER: OnceLock<[usize; AREA]> = OnceLock::new();
    ORDER.get_or_init(|| {
        let mut order = [0; AREA];
        let mut i = 0;
        for s in 0..(2 * N - 1) {
            let range: Vec<usize> = (0..N).filter(|&r| s >= r && s - r < N).collect();
            // even diagonals run bottom-left to top-right
            let rows: Vec<usize> = if s % 2 == 0 {
                range.into_iter().rev().collect()
            } else {
                range
            };
            for r in rows {
                order[i] = r * N + (s - r);
                i += 1;
            }
        }
        order
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_prefix_matches_jpeg() {
        assert_eq!(&zigzag()[..10], &[0, 1, 8, 16, 9, 2, 3, 10, 17, 24]);
        assert_eq!(zigzag()[63], 63);
        let mut seen = [false; AREA];
        for &i in zigzag() {
            seen[i] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn roundtrip_and_energy() {
        let mut block = [0.0; AREA];
        for (i, v) in block.iter_mut().enumerate() {
            *v = ((i * 37) % 101) as f64 - 50.0;
        }
        let c = forward(&block);
        let e_in: f64 = block.iter().map(|v| v * v).sum();
        let e_out: f64 = c.iter().map(|v| v * v).sum();
        assert!((e_in - e_out).abs() < 1e-8 * e_in);
        let back = inverse(&c);
        for (a, b) in back.iter().zip(&block) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_block_is_pure_dc() {
        let c = forward(&[3.0; AREA]);
        assert!((c[0] - 24.0).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }
}
