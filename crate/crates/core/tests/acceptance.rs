//! Acceptance criteria 1-10. Runs without the libtest harness so that each
//! criterion prints exactly one PASS/FAIL line; exits nonzero on any FAIL.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use msicodec::codec::external::{external_encoder_run, AdapterConfig};
use msicodec::codec::{
    encode_intra, gop_schedule, GopKind, Plane, PlaneCodingParams, PredMode, KEY_QP_OFFSET,
};
use msicodec::cube::{cie1931_cmf, psnr, render_rgb, SpectralCube};
use msicodec::pca::{fit_pca, forward_cube, inverse, truncate};
use msicodec::pipeline::{self, CodedContainer, Scheme, SchemeParams};
use msicodec::predict::{closed_loop_residual, fit_ls, BlockGrid, PredictorConfig};
use msicodec::rd::{self, convex_hull, simulcast_compose, RdCurve, RdPoint};
use msicodec::synth;

type Outcome = Result<String, String>;
type Criterion = (u8, &'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- 1

fn criterion_1() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/identity_encoder.sh");
    let cfg = ok(AdapterConfig::parse(&format!(
        "executable = {}\ntemplate = /dev/null\nworkdir = {}\n",
        fixture.display(),
        dir.path().display()
    )))?;
    let cube = ok(synth::rank1(16, 8, 31, 5))?;
    let planes = ok((0..cube.bands())
        .map(|b| Plane::new(16, 8, cube.band(b).to_vec()))
        .collect::<msicodec::Result<Vec<_>>>())?;
    let run = ok(external_encoder_run(&planes, 30, Some(&cfg)))?;
    ensure!(
        run.reconstructions == planes,
        "fixture reconstruction differs"
    );
    ensure!(
        run.total_bits() == 31 * 16 * 8 * 10,
        "bits {}",
        run.total_bits()
    );
    let mut detail = "full-scale RD curves need a real external encoder and image set; \
                      covered by criteria 2-10, adapter plumbing checked with a stand-in encoder"
        .to_string();
    if let Some(user) = ok(AdapterConfig::from_env())? {
        let cube = ok(synth::natural_gradient(64, 64, 31, 1))?;
        let planes = ok((0..31)
            .map(|b| Plane::new(64, 64, cube.band(b).to_vec()))
            .collect::<msicodec::Result<Vec<_>>>())?;
        let run = ok(external_encoder_run(&planes, 32, Some(&user)))?;
        detail += &format!(
            "; configured external encoder: {} bits at qp 32",
            run.total_bits()
        );
    }
    Ok(detail)
}

// ---------------------------------------------------------------- 2

fn closed_loop_params(scheme: Scheme, qp: u8) -> SchemeParams {
    match scheme {
        Scheme::Plain => SchemeParams::plain(qp),
        Scheme::Pca => SchemeParams::pca(3, qp),
        Scheme::Hpcls => SchemeParams::hpcls(2, qp, 3, qp),
        Scheme::HpclsRgb => SchemeParams::hpcls_rgb(2, qp, 3, qp, qp),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let cubes = ok(synth::corpus(24, 20, 31))?;
    let mut runs = 0;
    for (name, cube) in &cubes {
        for scheme in Scheme::ALL {
            for qp in [5, 25, 50] {
                let params = closed_loop_params(scheme, qp);
                let enc = ok(pipeline::encode(cube, &params))?;
                let bytes = ok(enc.container.to_bytes())?;
                let container = ok(CodedContainer::parse(&bytes))?;
                let dec = ok(pipeline::decode(&container))?;
                ensure!(
                    dec == enc.reconstruction,
                    "{name}, {params}: decoder differs"
                );
                if scheme == Scheme::HpclsRgb {
                    let preview = ok(pipeline::decode_preview(&container))?;
                    ensure!(
                        Some(preview) == enc.preview,
                        "{name}, {params}: preview differs"
                    );
                }
                runs += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!(
        "{runs} encode/decode pairs bit-exact in {secs:.1} s"
    ))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_val = 0.0f64;
    let mut worst_cos = 0.0f64;
    let mut worst_energy = 0.0f64;
    for case in 0..20 {
        let (w, h, b) = (
            rng.random_range(3..=8),
            rng.random_range(3..=8),
            rng.random_range(2..=6),
        );
        let cube = ok(synth::random(w, h, b, 10, 100 + case))?;
        let n = w * h;
        let x = DMatrix::from_fn(n, b, |p, k| cube.band(k)[p] as f64);
        let mean = x.row_mean();
        let centered = DMatrix::from_fn(n, b, |p, k| x[(p, k)] - mean[k]);
        let cov = centered.transpose() * &centered / (n as f64 - 1.0);
        let eig = SymmetricEigen::new(cov.clone());
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

        let basis = ok(fit_pca(&cube))?;
        let ev = basis.eigenvalues();
        let scale = eig.eigenvalues[order[0]].abs().max(f64::MIN_POSITIVE);
        for (k, &j) in order.iter().enumerate() {
            let rel = (ev[k] - eig.eigenvalues[j].max(0.0)).abs() / scale;
            worst_val = worst_val.max(rel);
            ensure!(rel <= 1e-8, "case {case}: eigenvalue {k} off by {rel:e}");
            let v = DVector::from_column_slice(basis.column(k));
            let cos = v.dot(&eig.eigenvectors.column(j)).abs();
            worst_cos = worst_cos.max(1.0 - cos);
            ensure!(cos >= 1.0 - 1e-8, "case {case}: vector {k} |cos| = {cos}");
        }
        for k in 0..b {
            ensure!(
                (basis.mean()[k] - mean[k]).abs() <= 1e-9 * mean[k].abs().max(1.0),
                "case {case}: mean"
            );
        }

        let total: f64 = ev.iter().sum();
        ensure!(
            (total - cov.trace()).abs() <= 1e-6 * cov.trace(),
            "case {case}: trace identity"
        );
        for n_c in 1..=b {
            let t = ok(truncate(&basis, n_c))?;
            let rec = ok(inverse(&ok(forward_cube(&cube, &t))?, &t))?;
            let mse: f64 = (0..b)
                .flat_map(|k| {
                    let orig = cube.band(k);
                    rec.plane(k)
                        .iter()
                        .zip(orig)
                        .map(|(&r, &o)| (r - o as f64).powi(2))
                        .collect::<Vec<_>>()
                })
                .sum::<f64>()
                / (n * b) as f64;
            let expect = ev[n_c..].iter().sum::<f64>() * (n as f64 - 1.0) / n as f64 / b as f64;
            let err = (mse - expect).abs();
            if expect > 1e-9 * total {
                worst_energy = worst_energy.max(err / expect);
            }
            ensure!(
                err <= 1e-6 * expect + 1e-12 * total,
                "case {case}, n_c {n_c}: mse {mse} vs {expect}"
            );
        }
    }
    Ok(format!(
        "20 cubes; worst eigenvalue rel err {worst_val:.1e}, worst 1-|cos| {worst_cos:.1e}, \
         worst energy-identity rel err {worst_energy:.1e}"
    ))
}

// ---------------------------------------------------------------- 4

const WEIGHT_EXP: i32 = -12;
/// Widened intercept step for 10-bit data, 2^max(-12+6, 10-13).
const INTERCEPT_EXP: i32 = -3;

fn oracle_quantize(v: f64, exp: i32) -> i16 {
    let idx = (v / 2f64.powi(exp)).round();
    idx.clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

fn oracle_fit(t: &[f64], xs: &[Vec<f64>]) -> Vec<f64> {
    let n = t.len();
    let r = xs.len();
    let a = DMatrix::from_fn(n, r + 1, |i, k| if k < r { xs[k][i] } else { 1.0 });
    let b = DVector::from_column_slice(t);
    let sol = a.svd(true, true).solve(&b, 1e-12).expect("svd solve");
    sol.iter().copied().collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn ls_residual(t: &[f64], xs: &[&[f64]], w: &[f64]) -> Vec<f64> {
    (0..t.len())
        .map(|i| t[i] - w[xs.len()] - xs.iter().zip(w).map(|(x, c)| c * x[i]).sum::<f64>())
        .collect()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = Normal::new(0.0, 5.0).unwrap();
    let mut blocks = 0;
    let mut worst_resid = 0.0f64;
    let mut worst_orth = 0.0f64;
    for case in 0..10 {
        let edge: usize = rng.random_range(6..=16);
        let (w, h) = (edge * 5 - rng.random_range(0..edge - 1), edge);
        let r: usize = rng.random_range(1..=3);
        let xs: Vec<Vec<f64>> = (0..r)
            .map(|_| {
                (0..w * h)
                    .map(|_| rng.random_range(0..1024) as f64)
                    .collect()
            })
            .collect();
        let coef: Vec<f64> = (0..r).map(|_| rng.random_range(-1.5..1.5)).collect();
        let c0: f64 = rng.random_range(-200.0..200.0);
        let t: Vec<f64> = (0..w * h)
            .map(|i| c0 + (0..r).map(|k| coef[k] * xs[k][i]).sum::<f64>() + noise.sample(&mut rng))
            .collect();
        let grid = ok(BlockGrid::new(w, h, edge))?;
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let (set, residual) = ok(closed_loop_residual(
            &t,
            &refs,
            &grid,
            PredictorConfig::default(),
        ))?;

        for (k, blk) in grid.blocks().enumerate() {
            blocks += 1;
            let pix: Vec<usize> = (blk.y0..blk.y0 + blk.height)
                .flat_map(|y| (blk.x0..blk.x0 + blk.width).map(move |x| y * w + x))
                .collect();
            let bt: Vec<f64> = pix.iter().map(|&i| t[i]).collect();
            let bx: Vec<Vec<f64>> = xs
                .iter()
                .map(|x| pix.iter().map(|&i| x[i]).collect())
                .collect();

            let wo = oracle_fit(&bt, &bx);
            let q: Vec<i16> = wo
                .iter()
                .enumerate()
                .map(|(j, &v)| oracle_quantize(v, if j == r { INTERCEPT_EXP } else { WEIGHT_EXP }))
                .collect();
            let start = k * (r + 1);
            ensure!(
                set.indices[start..start + r + 1] == q[..],
                "case {case} block {k}: indices {:?} vs oracle {:?}",
                &set.indices[start..start + r + 1],
                q
            );
            let wq: Vec<f64> = q
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    v as f64 * 2f64.powi(if j == r { INTERCEPT_EXP } else { WEIGHT_EXP })
                })
                .collect();
            let bref: Vec<&[f64]> = bx.iter().map(Vec::as_slice).collect();
            let expect = ls_residual(&bt, &bref, &wq);
            for (p, &i) in pix.iter().enumerate() {
                let d = (residual[i] - expect[p]).abs();
                worst_resid = worst_resid.max(d);
                ensure!(d <= 1e-9, "case {case} block {k}: residual off by {d:e}");
            }

            let wf = fit_ls(&bt, &bref, true);
            let e = ls_residual(&bt, &bref, &wf);
            let ones = vec![1.0; bt.len()];
            for col in bref.iter().copied().chain([ones.as_slice()]) {
                let dot: f64 = e.iter().zip(col).map(|(a, b)| a * b).sum();
                let rel = dot.abs() / (norm(&e) * norm(col)).max(f64::MIN_POSITIVE);
                worst_orth = worst_orth.max(rel);
                ensure!(rel <= 1e-6, "case {case} block {k}: orthogonality {rel:e}");
            }
            let mut prev = f64::INFINITY;
            for m in 0..=r {
                let sub = &bref[..m];
                let e = ls_residual(&bt, sub, &fit_ls(&bt, sub, true));
                let nm = norm(&e);
                ensure!(
                    nm <= prev * (1.0 + 1e-12),
                    "case {case} block {k}: nesting broke at {m} regressors"
                );
                prev = nm;
            }
        }
    }
    Ok(format!(
        "{blocks} blocks; worst residual diff {worst_resid:.1e}, worst orthogonality {worst_orth:.1e}"
    ))
}

// ---------------------------------------------------------------- 5

/// Exact sign of the cross product for `p` against the line `a → b`;
/// negative means `p` lies strictly below.
fn below(a: &RdPoint, b: &RdPoint, p: &RdPoint) -> bool {
    (b.bits - a.bits) * (p.psnr - a.psnr) - (b.psnr - a.psnr) * (p.bits - a.bits) < 0.0
}

fn brute_hull(points: &[RdPoint]) -> Vec<RdPoint> {
    let key = |p: &RdPoint| (p.image_id.clone(), p.params);
    let mut keep: Vec<RdPoint> = points
        .iter()
        .filter(|p| {
            !points.iter().any(|q| {
                (q.bits < p.bits && q.psnr >= p.psnr)
                    || (q.bits == p.bits && q.psnr > p.psnr)
                    || (q.bits == p.bits && q.psnr == p.psnr && key(q) < key(p))
            })
        })
        .filter(|p| {
            !points.iter().any(|a| {
                a.bits < p.bits && points.iter().any(|b| b.bits > p.bits && below(a, b, p))
            })
        })
        .cloned()
        .collect();
    keep.sort_by(|a, b| a.bits.total_cmp(&b.bits));
    keep
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut sizes = 0;
    for set in 0..200 {
        let n = if set < 10 {
            set + 1
        } else {
            rng.random_range(1..=500)
        };
        let integer = set % 2 == 1;
        let points: Vec<RdPoint> = (0..n)
            .map(|i| {
                let (bits, db) = if integer {
                    (
                        rng.random_range(0..40) as f64,
                        rng.random_range(0..30) as f64,
                    )
                } else {
                    (rng.random_range(1e3..1e6), rng.random_range(20.0..60.0))
                };
                RdPoint::new(format!("{i:04}"), SchemeParams::plain(5), bits, db)
            })
            .collect();
        let expect = brute_hull(&points);
        let got = convex_hull("h", &points).points;
        ensure!(
            got == expect,
            "set {set} (n = {n}): {} vs {} hull points",
            got.len(),
            expect.len()
        );
        let mut shuffled = points.clone();
        shuffled.shuffle(&mut rng);
        ensure!(
            convex_hull("h", &shuffled).points == got,
            "set {set}: order dependent"
        );
        sizes += n;
    }
    Ok(format!("200 sets, {sizes} points, shuffled copies agree"))
}

// ---------------------------------------------------------------- 6, 7

fn decorrelation_cube() -> msicodec::Result<SpectralCube> {
    synth::rank3_noise(64, 64, 31, 2.0, 11)
}

fn per_band_intra(cube: &SpectralCube, qp: u8) -> msicodec::Result<(u64, f64)> {
    let mut bits = 0;
    let mut samples = Vec::with_capacity(cube.samples().len());
    for b in 0..cube.bands() {
        let plane = Plane::new(cube.width(), cube.height(), cube.band(b).to_vec())?;
        let coded = encode_intra(&plane, PlaneCodingParams::new(qp)?)?;
        bits += coded.bits();
        samples.extend(coded.reconstruction.samples);
    }
    let rec = SpectralCube::new(
        cube.width(),
        cube.height(),
        cube.bands(),
        cube.bit_depth(),
        samples,
    )?;
    Ok((bits, psnr(cube, &rec)?))
}

const TARGET: std::ops::RangeInclusive<f64> = 44.0..=46.0;

fn cheapest(points: impl IntoIterator<Item = (u64, f64)>) -> Option<(u64, f64)> {
    points
        .into_iter()
        .filter(|(_, db)| TARGET.contains(db))
        .min_by_key(|&(b, _)| b)
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let cube = ok(decorrelation_cube())?;
    let qps = 30..=50u8;
    let pca = ok(qps
        .clone()
        .map(|qp| rd::measure(&cube, &SchemeParams::pca(4, qp)))
        .collect::<msicodec::Result<Vec<_>>>())?;
    let intra = ok(qps
        .map(|qp| per_band_intra(&cube, qp))
        .collect::<msicodec::Result<Vec<_>>>())?;
    let (pb, pp) = cheapest(pca).ok_or("PCA never lands in 45±1 dB")?;
    let (ib, ip) = cheapest(intra).ok_or("intra never lands in 45±1 dB")?;
    let ratio = pb as f64 / ib as f64;
    let secs = start.elapsed().as_secs_f64();
    ensure!(
        ratio <= 0.60,
        "PCA {pb} bits ({pp:.2} dB) vs intra {ib} ({ip:.2} dB): {ratio:.3}"
    );
    ensure!(secs < 30.0, "took {secs:.1} s");
    Ok(format!(
        "PCA n_c=4 {pb} bits @ {pp:.2} dB vs per-band intra {ib} @ {ip:.2} dB, ratio {ratio:.3}, {secs:.1} s"
    ))
}

fn criterion_7() -> Outcome {
    let cube = ok(decorrelation_cube())?;
    let cmf = cie1931_cmf();
    let ideal = ok(render_rgb(&cube, &cmf))?.to_cube();

    let mut hpcls = Vec::new();
    for n_ref in [1, 2] {
        for q_ref in [34, 38, 42, 46, 50] {
            for n_c in [1, 2, 3] {
                for qp in [42, 46, 50] {
                    hpcls.push(SchemeParams::hpcls(n_ref, q_ref, n_c, qp));
                }
            }
        }
    }
    let swept = ok(rd::sweep(&[("rank3".into(), cube.clone())], &hpcls, 1))?;
    ensure!(swept.failures.is_empty(), "HPCLS sweep failures");
    let preview = ok(rd::preview_curve(
        "rank3",
        &cube,
        &cmf,
        &(40..=50).collect::<Vec<_>>(),
    ))?;
    let simulcast = ok(simulcast_compose(
        &preview,
        &RdCurve::new("hpcls", swept.points),
        40.0,
    ))?;
    let (sb, sp) = cheapest(simulcast.points.iter().map(|p| (p.bits as u64, p.psnr)))
        .ok_or("simulcast never lands in 45±1 dB")?;

    // same shared grid, plus the preview-layer parameters
    let mut best: Option<(u64, f64, f64, SchemeParams)> = None;
    for base in &hpcls {
        for qp_rgb in [38, 41, 44, 47, 50] {
            for rgb_only in [false, true] {
                let mut p =
                    SchemeParams::hpcls_rgb(base.n_ref, base.q_ref, base.n_c, base.qp, qp_rgb);
                p.rgb_only = rgb_only;
                let bytes = ok(ok(pipeline::encode(&cube, &p))?.container.to_bytes())?;
                let c = ok(CodedContainer::parse(&bytes))?;
                let msi = ok(psnr(&cube, &ok(pipeline::decode(&c))?))?;
                let prev = ok(psnr(&ideal, &ok(pipeline::decode_preview(&c))?.to_cube()))?;
                let bits = 8 * bytes.len() as u64;
                if TARGET.contains(&msi) && prev >= 40.0 && best.is_none_or(|(b, ..)| bits < b) {
                    best = Some((bits, msi, prev, p));
                }
            }
        }
    }
    let (rb, rp, rprev, params) = best.ok_or("HPCLS-RGB never meets both targets")?;
    ensure!(
        rb < sb,
        "HPCLS-RGB {rb} bits ({params}) not below simulcast {sb}"
    );
    Ok(format!(
        "HPCLS-RGB {rb} bits @ {rp:.2} dB, preview {rprev:.2} dB ({params}) < simulcast {sb} @ {sp:.2} dB"
    ))
}

// ---------------------------------------------------------------- 8

fn table(bytes: &[u8]) -> Vec<(u8, u8, usize, usize)> {
    let count = u16::from_le_bytes([bytes[23], bytes[24]]) as usize;
    (0..count)
        .map(|i| {
            let e = &bytes[25 + 10 * i..35 + 10 * i];
            (
                e[0],
                e[1],
                u32::from_le_bytes([e[2], e[3], e[4], e[5]]) as usize,
                u32::from_le_bytes([e[6], e[7], e[8], e[9]]) as usize,
            )
        })
        .collect()
}

fn criterion_8() -> Outcome {
    let cube = ok(synth::natural_gradient(40, 32, 31, 8))?;
    let enc = ok(pipeline::encode(
        &cube,
        &SchemeParams::hpcls_rgb(2, 25, 3, 30, 25),
    ))?;
    let bytes = ok(enc.container.to_bytes())?;
    let entries = table(&bytes);
    let preview_end = entries
        .iter()
        .filter(|e| e.0 == 1)
        .map(|e| e.2 + e.3)
        .max()
        .ok_or("no preview sections")?;
    ensure!(
        entries
            .iter()
            .filter(|e| e.0 == 2)
            .all(|e| e.2 >= preview_end),
        "enhancement data interleaved with the preview layer"
    );
    let full = ok(pipeline::decode_preview(&ok(CodedContainer::parse(
        &bytes,
    ))?))?;
    ensure!(
        Some(&full) == enc.preview.as_ref(),
        "preview differs from encoder"
    );
    let mut cuts = vec![
        preview_end,
        preview_end + 1,
        (preview_end + bytes.len()) / 2,
        bytes.len() - 1,
    ];
    cuts.dedup();
    for cut in cuts {
        let c = ok(CodedContainer::parse(&bytes[..cut]))?;
        let p = ok(pipeline::decode_preview(&c))?;
        ensure!(p == full, "preview changed after truncation at {cut}");
        let attempt = catch_unwind(AssertUnwindSafe(|| pipeline::decode(&c)));
        match attempt {
            Ok(Err(_)) => {}
            Ok(Ok(_)) => return Err(format!("full decode succeeded after truncation at {cut}")),
            Err(_) => return Err(format!("full decode panicked after truncation at {cut}")),
        }
    }
    Ok(format!(
        "preview layer ends at byte {preview_end} of {}; truncated files keep the preview, enhancement fails cleanly",
        bytes.len()
    ))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let s = ok(gop_schedule(31, GopKind::Gop30))?;
    ok(s.validate())?;
    let mut order = s.coding_order();
    ensure!(order.len() == 31, "{} entries", order.len());
    order.sort_unstable();
    ensure!(order == (0..31).collect::<Vec<_>>(), "not a permutation");
    let mut coded = [false; 31];
    let mut keys = Vec::new();
    for e in s.entries() {
        match e.mode {
            PredMode::Key => {
                ensure!(
                    e.qp_offset == KEY_QP_OFFSET && e.qp_offset == -3,
                    "key offset {}",
                    e.qp_offset
                );
                keys.push(e.plane);
            }
            PredMode::Bi { ref_a, ref_b } => {
                ensure!(
                    coded[ref_a] && coded[ref_b],
                    "plane {} uses uncoded refs",
                    e.plane
                );
                ensure!(
                    ref_a < e.plane && e.plane < ref_b,
                    "plane {} not between refs",
                    e.plane
                );
                ensure!(e.qp_offset == 0, "B offset {}", e.qp_offset);
            }
        }
        coded[e.plane] = true;
    }
    keys.sort_unstable();
    ensure!(keys == [0, 30], "keys at {keys:?}");
    Ok("31 planes, keys {0, 30} at qp offset -3, references always decoded first".into())
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let cube = ok(synth::rank3_noise(32, 32, 31, 2.0, 10))?;
    let mut checked = 0;
    for params in [
        SchemeParams::pca(3, 30),
        SchemeParams::hpcls(2, 30, 3, 30),
        SchemeParams::hpcls_rgb(2, 30, 3, 30, 30),
    ] {
        let bytes = ok(ok(pipeline::encode(&cube, &params))?.container.to_bytes())?;
        let hdr_w = bytes[20] as i8;
        let hdr_b = bytes[21] as i8;
        ensure!(hdr_b == -13, "{params}: header basis exponent {hdr_b}");
        if params.scheme != Scheme::Pca {
            ensure!(hdr_w == -12, "{params}: header weight exponent {hdr_w}");
        }
        for (_, id, off, len) in table(&bytes) {
            let data = &bytes[off..off + len];
            match id {
                1 | 4 => {
                    ensure!(
                        data[4] as i8 == -13,
                        "{params}: basis section {id} exponent {}",
                        data[4] as i8
                    );
                    checked += 1;
                }
                3 | 6 => {
                    ensure!(
                        data[9] as i8 == -12,
                        "{params}: weight section {id} exponent {}",
                        data[9] as i8
                    );
                    checked += 1;
                }
                _ => {}
            }
        }
    }
    ensure!(checked >= 6, "only {checked} sections inspected");
    Ok(format!("{checked} basis/weight sections carry -13 / -12"))
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "full-scale RD substitute", criterion_1),
        (2, "closed loop, 4 schemes x 5 cubes x 3 qp", criterion_2),
        (3, "PCA against eigendecomposition oracle", criterion_3),
        (4, "block LS against step-by-step oracle", criterion_4),
        (5, "convex hull against brute force", criterion_5),
        (6, "spectral decorrelation benefit", criterion_6),
        (7, "scalable preview beats simulcast", criterion_7),
        (8, "preview separability under truncation", criterion_8),
        (9, "GOP-30 schedule", criterion_9),
        (10, "quantizer exponents in the bitstream", criterion_10),
    ];
    let mut failed = 0;
    for (id, title, f) in criteria {
        let start = Instant::now();
        let outcome = match catch_unwind(f) {
            Ok(r) => r,
            Err(e) => Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into())),
        };
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {title}: {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {title}: {why} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 10 criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
