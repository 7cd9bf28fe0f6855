//! Self-contained 2D plane codec: 8×8 DCT, uniform quantization and adaptive
//! binary range coding, plus bi-predictive residual coding and GOP
//! scheduling.
//!
//! Every encoder returns the reconstruction the decoder will produce, so
//! callers can build closed-loop predictions on top of it.

mod entropy;
pub mod external;
pub mod gop;
pub mod range;
pub mod transform;

pub use gop::{gop_schedule, GopEntry, GopKind, GopSchedule, PredMode, KEY_QP_OFFSET};

use crate::bytes::{Reader, Writer};
use crate::error::{Error, Result};
use entropy::Contexts;
use range::{RangeDecoder, RangeEncoder};
use transform::{AREA, N};

pub const SAMPLE_MAX: u16 = 1023;
pub const RESIDUAL_OFFSET: i32 = 512;
pub const MAX_QP: u8 = 63;
pub const BLOCK_SIZE: usize = N;
const PAYLOAD_HEADER: usize = 10;

/// Quantizer step for `qp`: `2^((qp − 4) / 6)`.
pub fn qp_to_step(qp: u8) -> f64 {
    2f64.powf((qp as f64 - 4.0) / 6.0)
}

/// A 10-bit monochrome picture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u16>,
}

impl Plane {
    pub fn new(width: usize, height: usize, samples: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 || width > u16::MAX as usize || height > u16::MAX as usize {
            return Err(Error::Size(format!("plane size {width}x{height}")));
        }
        if samples.len() != width * height {
            return Err(Error::Length {
                expected: width * height,
                found: samples.len(),
            });
        }
        if let Some(&bad) = samples.iter().find(|&&s| s > SAMPLE_MAX) {
            return Err(Error::Range {
                value: bad as u32,
                bit_depth: 10,
            });
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    fn at_clamped(&self, y: usize, x: usize) -> u16 {
        self.samples[y.min(self.height - 1) * self.width + x.min(self.width - 1)]
    }
}

/// Affine map between a real-valued plane and codec samples:
/// `real = offset + scale · sample`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub offset: f32,
    pub scale: f32,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            offset: 0.0,
            scale: 1.0,
        }
    }
}

impl Normalization {
    /// Min/max map of `values` onto `[0, 1023]`.
    pub fn fit(values: &[f64]) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() || hi <= lo {
            return Self {
                offset: if lo.is_finite() { lo as f32 } else { 0.0 },
                scale: 1.0,
            };
        }
        let mut scale = ((hi - lo) / SAMPLE_MAX as f64) as f32;
        if scale <= 0.0 || !scale.is_finite() {
            scale = f32::MIN_POSITIVE;
        }
        Self {
            offset: lo as f32,
            scale,
        }
    }

    pub fn to_samples(&self, values: &[f64]) -> Vec<u16> {
        let (o, s) = (self.offset as f64, self.scale as f64);
        values
            .iter()
            .map(|&v| ((v - o) / s).round().clamp(0.0, SAMPLE_MAX as f64) as u16)
            .collect()
    }

    pub fn to_real(&self, samples: &[u16]) -> Vec<f64> {
        let (o, s) = (self.offset as f64, self.scale as f64);
        samples.iter().map(|&v| o + s * v as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneCodingParams {
    pub qp: u8,
    pub block_size: usize,
    pub normalization: Normalization,
}

impl PlaneCodingParams {
    pub fn new(qp: u8) -> Result<Self> {
        if qp > MAX_QP {
            return Err(Error::InvalidParameter(format!(
                "qp {qp} outside [0, {MAX_QP}]"
            )));
        }
        Ok(Self {
            qp,
            block_size: BLOCK_SIZE,
            normalization: Normalization::default(),
        })
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
enum PayloadKind {
    Intra = 0,
    BiResidual = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodedPlane {
    pub payload: Vec<u8>,
    pub params: PlaneCodingParams,
    pub reconstruction: Plane,
    /// Residual samples that had to be clamped into the offset-512 range.
    pub clipped: usize,
}

impl CodedPlane {
    pub fn bits(&self) -> u64 {
        8 * self.payload.len() as u64
    }
}

fn quantize_level(c: f64, step: f64) -> i32 {
    (c / step).round() as i32
}

/// Transform-codes `plane`; returns the body bytes and the reconstruction.
fn code_plane(plane: &Plane, qp: u8) -> (Vec<u8>, Vec<u16>) {
    let step = qp_to_step(qp);
    let (w, h) = (plane.width, plane.height);
    let mut recon = vec![0u16; w * h];
    let mut enc = RangeEncoder::new();
    let mut ctx = Contexts::default();
    for by in (0..h).step_by(N) {
        for bx in (0..w).step_by(N) {
            let mut block = [0.0; AREA];
            for y in 0..N {
                for x in 0..N {
                    block[y * N + x] =
                        plane.at_clamped(by + y, bx + x) as f64 - RESIDUAL_OFFSET as f64;
                }
            }
            let coeffs = transform::forward(&block);
            let mut levels = [0i32; AREA];
            for (l, &c) in levels.iter_mut().zip(&coeffs) {
                *l = quantize_level(c, step);
            }
            ctx.put_block(&mut enc, &levels);
            write_block(&levels, step, &mut recon, w, h, bx, by);
        }
    }
    (enc.finish(), recon)
}

fn write_block(
    levels: &[i32; AREA],
    step: f64,
    recon: &mut [u16],
    w: usize,
    h: usize,
    bx: usize,
    by: usize,
) {
    let mut deq = [0.0; AREA];
    for (d, &l) in deq.iter_mut().zip(levels) {
        *d = l as f64 * step;
    }
    let pixels = transform::inverse(&deq);
    for y in 0..N.min(h - by) {
        for x in 0..N.min(w - bx) {
            let v = (pixels[y * N + x] + RESIDUAL_OFFSET as f64)
                .round()
                .clamp(0.0, SAMPLE_MAX as f64);
            recon[(by + y) * w + bx + x] = v as u16;
        }
    }
}

fn decode_body(body: &[u8], w: usize, h: usize, qp: u8) -> Result<Vec<u16>> {
    let step = qp_to_step(qp);
    let mut recon = vec![0u16; w * h];
    let mut dec = RangeDecoder::new(body)?;
    let mut ctx = Contexts::default();
    for by in (0..h).step_by(N) {
        for bx in (0..w).step_by(N) {
            let levels = ctx.get_block(&mut dec)?;
            dec.check()?;
            write_block(&levels, step, &mut recon, w, h, bx, by);
        }
    }
    dec.check()?;
    Ok(recon)
}

fn wrap_payload(kind: PayloadKind, qp: u8, w: usize, h: usize, body: &[u8]) -> Vec<u8> {
    let mut out = Writer::new();
    out.u8(kind as u8)
        .u8(qp)
        .u16(w as u16)
        .u16(h as u16)
        .blob(body);
    out.finish()
}

struct PayloadHeader<'a> {
    kind: PayloadKind,
    qp: u8,
    width: usize,
    height: usize,
    body: &'a [u8],
}

fn parse_payload(payload: &[u8]) -> Result<PayloadHeader<'_>> {
    if payload.len() < PAYLOAD_HEADER {
        return Err(Error::Decode(format!(
            "plane payload of {} bytes has no header",
            payload.len()
        )));
    }
    let mut r = Reader::new(payload, "plane payload");
    let kind = match r.u8()? {
        0 => PayloadKind::Intra,
        1 => PayloadKind::BiResidual,
        k => return Err(Error::Decode(format!("unknown plane payload kind {k}"))),
    };
    let qp = r.u8()?;
    if qp > MAX_QP {
        return Err(Error::Decode(format!("qp {qp} out of range")));
    }
    let width = r.u16()? as usize;
    let height = r.u16()? as usize;
    if width == 0 || height == 0 {
        return Err(Error::Decode("zero plane dimension".into()));
    }
    let body = r.blob()?;
    r.expect_end()?;
    Ok(PayloadHeader {
        kind,
        qp,
        width,
        height,
        body,
    })
}

pub fn encode_intra(plane: &Plane, params: PlaneCodingParams) -> Result<CodedPlane> {
    PlaneCodingParams::new(params.qp)?;
    let plane = Plane::new(plane.width, plane.height, plane.samples.clone())?;
    let (body, recon) = code_plane(&plane, params.qp);
    Ok(CodedPlane {
        payload: wrap_payload(
            PayloadKind::Intra,
            params.qp,
            plane.width,
            plane.height,
            &body,
        ),
        params,
        reconstruction: Plane::new(plane.width, plane.height, recon)?,
        clipped: 0,
    })
}

pub fn decode_intra(payload: &[u8]) -> Result<Plane> {
    let p = parse_payload(payload)?;
    if p.kind != PayloadKind::Intra {
        return Err(Error::Decode("expected an intra plane payload".into()));
    }
    Plane::new(
        p.width,
        p.height,
        decode_body(p.body, p.width, p.height, p.qp)?,
    )
}

/// `(a + b + 1) >> 1`.
pub fn bi_prediction(ref_a: &Plane, ref_b: &Plane) -> Vec<u16> {
    ref_a
        .samples
        .iter()
        .zip(&ref_b.samples)
        .map(|(&a, &b)| ((a as u32 + b as u32 + 1) >> 1) as u16)
        .collect()
}

fn check_same_size(planes: &[&Plane]) -> Result<()> {
    let first = planes[0];
    for p in &planes[1..] {
        if p.width != first.width || p.height != first.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                first.width, first.height, p.width, p.height
            )));
        }
    }
    Ok(())
}

fn add_residual(pred: &[u16], residual: &[u16]) -> Vec<u16> {
    pred.iter()
        .zip(residual)
        .map(|(&p, &r)| (p as i32 + r as i32 - RESIDUAL_OFFSET).clamp(0, SAMPLE_MAX as i32) as u16)
        .collect()
}

/// Codes `plane` as an offset-512 residual against the rounded average of
/// two decoder-side reference reconstructions.
pub fn encode_inter_bi(
    plane: &Plane,
    ref_a: &Plane,
    ref_b: &Plane,
    params: PlaneCodingParams,
) -> Result<CodedPlane> {
    PlaneCodingParams::new(params.qp)?;
    check_same_size(&[plane, ref_a, ref_b])?;
    let pred = bi_prediction(ref_a, ref_b);
    let mut clipped = 0;
    let residual: Vec<u16> = plane
        .samples
        .iter()
        .zip(&pred)
        .map(|(&s, &p)| {
            let r = s as i32 - p as i32 + RESIDUAL_OFFSET;
            if !(0..=SAMPLE_MAX as i32).contains(&r) {
                clipped += 1;
            }
            r.clamp(0, SAMPLE_MAX as i32) as u16
        })
        .collect();
    let residual = Plane::new(plane.width, plane.height, residual)?;
    let (body, res_recon) = code_plane(&residual, params.qp);
    Ok(CodedPlane {
        payload: wrap_payload(
            PayloadKind::BiResidual,
            params.qp,
            plane.width,
            plane.height,
            &body,
        ),
        params,
        reconstruction: Plane::new(plane.width, plane.height, add_residual(&pred, &res_recon))?,
        clipped,
    })
}

pub fn decode_inter_bi(payload: &[u8], ref_a: &Plane, ref_b: &Plane) -> Result<Plane> {
    let p = parse_payload(payload)?;
    if p.kind != PayloadKind::BiResidual {
        return Err(Error::Decode(
            "expected a bi-predicted plane payload".into(),
        ));
    }
    check_same_size(&[ref_a, ref_b])?;
    if ref_a.width != p.width || ref_a.height != p.height {
        return Err(Error::DimensionMismatch(
            "reference planes do not match payload size".into(),
        ));
    }
    let residual = decode_body(p.body, p.width, p.height, p.qp)?;
    Plane::new(
        p.width,
        p.height,
        add_residual(&bi_prediction(ref_a, ref_b), &residual),
    )
}

/// Codes `planes` in GOP order: key pictures intra at `qp + KEY_QP_OFFSET`,
/// the rest bi-predicted at `qp`. Returns the coded planes indexed by plane
/// number.
pub fn encode_gop(planes: &[Plane], schedule: &GopSchedule, qp: u8) -> Result<Vec<CodedPlane>> {
    if schedule.len() != planes.len() {
        return Err(Error::DimensionMismatch(format!(
            "schedule for {} planes, got {}",
            schedule.len(),
            planes.len()
        )));
    }
    let mut coded: Vec<Option<CodedPlane>> = vec![None; planes.len()];
    for entry in schedule.entries() {
        let params = PlaneCodingParams::new(entry.qp(qp))?;
        let c = match entry.mode {
            PredMode::Key => encode_intra(&planes[entry.plane], params)?,
            PredMode::Bi { ref_a, ref_b } => {
                let a = &coded[ref_a]
                    .as_ref()
                    .expect("schedule order")
                    .reconstruction;
                let b = &coded[ref_b]
                    .as_ref()
                    .expect("schedule order")
                    .reconstruction;
                encode_inter_bi(&planes[entry.plane], a, b, params)?
            }
        };
        coded[entry.plane] = Some(c);
    }
    Ok(coded.into_iter().map(|c| c.expect("permutation")).collect())
}

/// Decodes payloads given in plane order with the same schedule.
pub fn decode_gop(payloads: &[&[u8]], schedule: &GopSchedule) -> Result<Vec<Plane>> {
    if schedule.len() != payloads.len() {
        return Err(Error::Decode(format!(
            "schedule for {} planes, got {} payloads",
            schedule.len(),
            payloads.len()
        )));
    }
    let mut out: Vec<Option<Plane>> = vec![None; payloads.len()];
    for entry in schedule.entries() {
        let plane = match entry.mode {
            PredMode::Key => decode_intra(payloads[entry.plane])?,
            PredMode::Bi { ref_a, ref_b } => {
                let a = out[ref_a].as_ref().expect("schedule order");
                let b = out[ref_b].as_ref().expect("schedule order");
                decode_inter_bi(payloads[entry.plane], a, b)?
            }
        };
        out[entry.plane] = Some(plane);
    }
    Ok(out.into_iter().map(|p| p.expect("permutation")).collect())
}
