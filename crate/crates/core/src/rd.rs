//! Rate-distortion sweeps, cross-image averaging and convex hulls.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::codec::{encode_gop, gop_schedule, GopKind, Plane};
use crate::cube::{psnr, render_rgb, CmfMatrix, SpectralCube};
use crate::error::{Error, Result};
use crate::pipeline::{self, CodedContainer, Scheme, SchemeParams};

/// Relative tolerance when testing a point against a hull chord.
pub const SLOPE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RdPoint {
    pub image_id: String,
    pub params: SchemeParams,
    pub bits: f64,
    pub psnr: f64,
}

impl RdPoint {
    pub fn new(image_id: impl Into<String>, params: SchemeParams, bits: f64, psnr: f64) -> Self {
        Self {
            image_id: image_id.into(),
            params,
            bits,
            psnr,
        }
    }

    fn tie_key(&self) -> (&str, &SchemeParams) {
        (&self.image_id, &self.params)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdCurve {
    pub label: String,
    pub points: Vec<RdPoint>,
}

impl RdCurve {
    /// Sorts the points by bits, then PSNR.
    pub fn new(label: impl Into<String>, mut points: Vec<RdPoint>) -> Self {
        points.sort_by(order);
        Self {
            label: label.into(),
            points,
        }
    }
}

fn order(a: &RdPoint, b: &RdPoint) -> std::cmp::Ordering {
    a.bits
        .total_cmp(&b.bits)
        .then(b.psnr.total_cmp(&a.psnr))
        .then_with(|| a.tie_key().cmp(&b.tie_key()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub image_id: String,
    pub params: SchemeParams,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    /// Sorted by (image id, params).
    pub points: Vec<RdPoint>,
    pub failures: Vec<SweepFailure>,
}

/// Encodes and decodes every image under every configuration. Failing
/// configurations are recorded, not fatal. `jobs == 0` uses all cores.
pub fn sweep(
    images: &[(String, SpectralCube)],
    configs: &[SchemeParams],
    jobs: usize,
) -> Result<SweepResult> {
    for c in configs {
        c.validate()?;
    }
    let tasks: Vec<(usize, SchemeParams)> = (0..images.len())
        .flat_map(|i| configs.iter().map(move |&c| (i, c)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let outcomes: Vec<std::result::Result<RdPoint, SweepFailure>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, params)| {
                let (id, cube) = &images[i];
                measure(cube, &params)
                    .map(|(bits, q)| RdPoint::new(id.clone(), params, bits as f64, q))
                    .map_err(|e| SweepFailure {
                        image_id: id.clone(),
                        params,
                        error: e.to_string(),
                    })
            })
            .collect()
    });
    let mut out = SweepResult::default();
    for o in outcomes {
        match o {
            Ok(p) => out.points.push(p),
            Err(f) => {
                log::warn!("{} {} failed: {}", f.image_id, f.params, f.error);
                out.failures.push(f);
            }
        }
    }
    out.points.sort_by(|a, b| a.tie_key().cmp(&b.tie_key()));
    out.failures
        .sort_by(|a, b| (&a.image_id, &a.params).cmp(&(&b.image_id, &b.params)));
    Ok(out)
}

/// Container bits and decoder-side PSNR of one configuration.
pub fn measure(cube: &SpectralCube, params: &SchemeParams) -> Result<(u64, f64)> {
    let encoded = pipeline::encode(cube, params)?;
    let bytes = encoded.container.to_bytes()?;
    let decoded = pipeline::decode(&CodedContainer::parse(&bytes)?)?;
    Ok((8 * bytes.len() as u64, psnr(cube, &decoded)?))
}

/// Bits and PSNR of a standalone preview: the rendered RGB image coded
/// with the internal codec, GOP-2 over its three channels. PSNR is against
/// the uncoded rendering.
pub fn measure_independent_preview(
    cube: &SpectralCube,
    cmf: &CmfMatrix,
    qp: u8,
) -> Result<(u64, f64)> {
    let rgb = render_rgb(cube, cmf)?;
    let planes = (0..3)
        .map(|c| Plane::new(rgb.width, rgb.height, rgb.channel(c).to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let coded = encode_gop(&planes, &gop_schedule(3, GopKind::Gop2)?, qp)?;
    let bits = coded.iter().map(|c| c.bits()).sum();
    let samples = coded
        .iter()
        .flat_map(|c| c.reconstruction.samples.iter().copied())
        .collect();
    let decoded = SpectralCube::new(rgb.width, rgb.height, 3, rgb.to_cube().bit_depth(), samples)?;
    Ok((bits, psnr(&rgb.to_cube(), &decoded)?))
}

/// Standalone preview points over `qps`, labelled `preview`; each point's
/// params record the qp as a plain configuration.
pub fn preview_curve(
    image_id: &str,
    cube: &SpectralCube,
    cmf: &CmfMatrix,
    qps: &[u8],
) -> Result<RdCurve> {
    let points = qps
        .par_iter()
        .map(|&qp| {
            let (bits, db) = measure_independent_preview(cube, cmf, qp)?;
            Ok(RdPoint::new(
                image_id,
                SchemeParams::plain(qp),
                bits as f64,
                db,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RdCurve::new("preview", points))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AverageMode {
    /// Mean over images per configuration.
    #[default]
    PerConfig,
    /// Keep only configurations on at least one per-image hull, then average.
    HullFirst,
}

/// Per-configuration arithmetic mean of bits and PSNR across images.
/// Infinite PSNR values are left out of the PSNR mean.
pub fn average_over_images(points: &[RdPoint]) -> Result<Vec<RdPoint>> {
    let images: BTreeSet<&str> = points.iter().map(|p| p.image_id.as_str()).collect();
    let mut by_config: BTreeMap<SchemeParams, BTreeMap<&str, &RdPoint>> = BTreeMap::new();
    for p in points {
        if by_config
            .entry(p.params)
            .or_default()
            .insert(&p.image_id, p)
            .is_some()
        {
            return Err(Error::InvalidParameter(format!(
                "duplicate point for {} {}",
                p.image_id, p.params
            )));
        }
    }
    let mut skipped = 0;
    let mut out = Vec::with_capacity(by_config.len());
    for (params, per_image) in by_config {
        if per_image.len() != images.len() {
            let missing: Vec<&str> = images
                .iter()
                .filter(|i| !per_image.contains_key(*i))
                .copied()
                .collect();
            return Err(Error::IncompleteGrid(format!(
                "{params} missing for {}",
                missing.join(", ")
            )));
        }
        let n = per_image.len() as f64;
        let bits = per_image.values().map(|p| p.bits).sum::<f64>() / n;
        let finite: Vec<f64> = per_image
            .values()
            .map(|p| p.psnr)
            .filter(|q| q.is_finite())
            .collect();
        skipped += per_image.len() - finite.len();
        let q = if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        out.push(RdPoint::new("mean", params, bits, q));
    }
    if skipped > 0 {
        log::info!("{skipped} infinite-PSNR points left out of the PSNR means");
    }
    Ok(out)
}

pub fn average_with(points: &[RdPoint], mode: AverageMode) -> Result<Vec<RdPoint>> {
    match mode {
        AverageMode::PerConfig => average_over_images(points),
        AverageMode::HullFirst => {
            let mut per_image: BTreeMap<&str, Vec<RdPoint>> = BTreeMap::new();
            for p in points {
                per_image.entry(&p.image_id).or_default().push(p.clone());
            }
            let keep: BTreeSet<SchemeParams> = per_image
                .into_values()
                .flat_map(|pts| convex_hull("", &pts).points)
                .map(|p| p.params)
                .collect();
            let kept: Vec<RdPoint> = points
                .iter()
                .filter(|p| keep.contains(&p.params))
                .cloned()
                .collect();
            average_over_images(&kept)
        }
    }
}

fn below_chord(a: &RdPoint, m: &RdPoint, b: &RdPoint) -> bool {
    let chord = a.psnr + (b.psnr - a.psnr) * (m.bits - a.bits) / (b.bits - a.bits);
    m.psnr < chord - SLOPE_TOL * chord.abs().max(1.0)
}

/// Upper-left concave envelope of the finite points. Collinear points are
/// kept; of identical points the one with the smaller (image, params) key
/// survives.
pub fn convex_hull(label: impl Into<String>, points: &[RdPoint]) -> RdCurve {
    let mut sorted: Vec<&RdPoint> = points
        .iter()
        .filter(|p| p.bits.is_finite() && p.psnr.is_finite())
        .collect();
    let dropped = points.len() - sorted.len();
    if dropped > 0 {
        log::info!("{dropped} non-finite points left out of the hull");
    }
    sorted.sort_by(|a, b| order(a, b));
    let mut front: Vec<&RdPoint> = Vec::with_capacity(sorted.len());
    for p in sorted {
        if front.last().is_none_or(|last| p.psnr > last.psnr) {
            front.push(p);
        }
    }
    let mut hull: Vec<&RdPoint> = Vec::with_capacity(front.len());
    for p in front {
        while hull.len() >= 2 && below_chord(hull[hull.len() - 2], hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(p);
    }
    RdCurve {
        label: label.into(),
        points: hull.into_iter().cloned().collect(),
    }
}

/// Adds the bits of the cheapest preview point reaching `target` dB to
/// every MSI point.
pub fn simulcast_compose(preview: &RdCurve, msi: &RdCurve, target: f64) -> Result<RdCurve> {
    let cheapest = preview
        .points
        .iter()
        .filter(|p| p.psnr >= target)
        .min_by(|a, b| order(a, b))
        .ok_or_else(|| Error::Unreachable(format!("no preview point reaches {target} dB")))?;
    Ok(RdCurve {
        label: format!("{}+preview", msi.label),
        points: msi
            .points
            .iter()
            .map(|p| RdPoint {
                bits: p.bits + cheapest.bits,
                ..p.clone()
            })
            .collect(),
    })
}

pub fn best_of(curves: &[RdCurve]) -> RdCurve {
    let label = curves
        .iter()
        .map(|c| c.label.as_str())
        .collect::<Vec<_>>()
        .join("/");
    let all: Vec<RdPoint> = curves
        .iter()
        .flat_map(|c| c.points.iter().cloned())
        .collect();
    convex_hull(label, &all)
}

/// CSV with columns `label,bits,psnr,params,hull`; `hull` marks points on
/// the curve's own convex hull.
pub fn write_csv<W: Write>(out: W, curves: &[RdCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["label", "bits", "psnr", "params", "hull"])
        .map_err(csv_err)?;
    for c in curves {
        let hull = convex_hull("", &c.points);
        for p in &c.points {
            let on = hull
                .points
                .iter()
                .any(|h| h.params == p.params && h.image_id == p.image_id);
            w.write_record([
                c.label.clone(),
                format!("{}", p.bits),
                format!("{}", p.psnr),
                p.params.to_string(),
                on.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(curves: &[RdCurve], path: impl AsRef<Path>) -> Result<()> {
    write_csv(fs::File::create(path)?, curves)
}

/// Parameter lists of a sweep; unused lists are ignored for a scheme.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParamGrid {
    pub qp: Vec<u8>,
    pub n_c: Vec<u8>,
    pub n_ref: Vec<u8>,
    pub q_ref: Vec<u8>,
    pub qp_rgb: Vec<u8>,
}

impl ParamGrid {
    pub fn configs(&self, scheme: Scheme) -> Result<Vec<SchemeParams>> {
        let need = |name: &str, v: &[u8]| -> Result<Vec<u8>> {
            if v.is_empty() {
                Err(Error::InvalidParameter(format!(
                    "{scheme} sweep needs `{name}`"
                )))
            } else {
                Ok(v.to_vec())
            }
        };
        let qp = need("qp", &self.qp)?;
        let mut out = Vec::new();
        match scheme {
            Scheme::Plain => out.extend(qp.iter().map(|&q| SchemeParams::plain(q))),
            Scheme::Pca => {
                for &n in &need("n_c", &self.n_c)? {
                    out.extend(qp.iter().map(|&q| SchemeParams::pca(n, q)));
                }
            }
            Scheme::Hpcls | Scheme::HpclsRgb => {
                let rgb = if scheme == Scheme::HpclsRgb {
                    need("qp_rgb", &self.qp_rgb)?
                } else {
                    vec![0]
                };
                for &r in &need("n_ref", &self.n_ref)? {
                    for &qr in &need("q_ref", &self.q_ref)? {
                        for &n in &need("n_c", &self.n_c)? {
                            for &q in &qp {
                                for &g in &rgb {
                                    out.push(if scheme == Scheme::Hpcls {
                                        SchemeParams::hpcls(r, qr, n, q)
                                    } else {
                                        SchemeParams::hpcls_rgb(r, qr, n, q, g)
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        for c in &out {
            c.validate()?;
        }
        Ok(out)
    }
}

/// `5`, `5,10,20` or `5:50:5` (inclusive), combinable with commas.
pub fn parse_values(text: &str) -> Result<Vec<u8>> {
    let bad = || Error::Format(format!("cannot parse value list {text:?}"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let nums = part
            .split(':')
            .map(|s| s.trim().parse::<u8>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        match nums[..] {
            [v] => out.push(v),
            [a, b] | [a, b, 1] => out.extend(a..=b),
            [a, b, s] if s > 0 => out.extend((a..=b).step_by(s as usize)),
            _ => return Err(bad()),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Sweep definition read from a `key = value` manifest:
///
/// ```text
/// label  = pca
/// scheme = pca
/// images = a.msrc, b.msrc
/// n_c    = 1:10
/// qp     = 5:50:5
/// average = per-config   # or hull-first
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub label: String,
    pub scheme: Scheme,
    pub images: Vec<PathBuf>,
    pub grid: ParamGrid,
    pub average: AverageMode,
}

impl Manifest {
    /// Image paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("manifest line {}: expected key=value", n + 1))
            })?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            kv.get(k)
                .ok_or_else(|| Error::Format(format!("manifest is missing `{k}`")))
        };
        let list = |k: &str| kv.get(k).map_or(Ok(Vec::new()), |v| parse_values(v));
        let scheme: Scheme = get("scheme")?.parse()?;
        let images: Vec<PathBuf> = get("images")?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| base.join(s))
            .collect();
        if images.is_empty() {
            return Err(Error::Format("manifest lists no images".into()));
        }
        let average = match kv.get("average").map(String::as_str) {
            None | Some("per-config") => AverageMode::PerConfig,
            Some("hull-first") => AverageMode::HullFirst,
            Some(other) => return Err(Error::Format(format!("unknown average mode {other:?}"))),
        };
        Ok(Self {
            label: kv
                .get("label")
                .cloned()
                .unwrap_or_else(|| scheme.to_string()),
            scheme,
            images,
            grid: ParamGrid {
                qp: list("qp")?,
                n_c: list("n_c")?,
                n_ref: list("n_ref")?,
                q_ref: list("q_ref")?,
                qp_rgb: list("qp_rgb")?,
            },
            average,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&fs::read_to_string(path)?, base)
    }

    pub fn configs(&self) -> Result<Vec<SchemeParams>> {
        self.grid.configs(self.scheme)
    }

    /// Fails if any listed image does not exist.
    pub fn check_images(&self) -> Result<()> {
        match self.images.iter().find(|p| !p.is_file()) {
            Some(p) => Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("image {} not found", p.display()),
            ))),
            None => Ok(()),
        }
    }
}
