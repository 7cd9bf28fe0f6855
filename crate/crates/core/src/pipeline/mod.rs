//! End-to-end coding schemes and their container.
//!
//! * PLAIN codes the bands as a GOP-30 plane sequence.
//! * PCA codes the leading principal-component planes intra.
//! * HPCLS codes a few PC planes as references, predicts every band from
//!   them with block-wise LS weights and codes the residual cube with PCA.
//! * HPCLS-RGB adds a separately decodable RGB preview layer and predicts
//!   bands from the decoded preview and references.
//!
//! Every encoder returns the reconstruction its decoder produces.

pub mod container;
pub mod params;

pub use container::{CodedContainer, Layer, Section, SectionId};
pub use params::{Scheme, SchemeParams};

use rayon::prelude::*;

use crate::codec::{
    decode_gop, decode_intra, encode_gop, encode_intra, gop_schedule, GopKind, Normalization,
    Plane, PlaneCodingParams, RESIDUAL_OFFSET, SAMPLE_MAX,
};
use crate::cube::{cie1931_cmf, render_rgb, CmfMatrix, RealPlaneStack, RgbImage, SpectralCube};
use crate::error::{Error, Result};
use crate::pca::{self, PcaBasis, PcaOptions};
use crate::predict::{self, BlockGrid, PredictorConfig, WeightSet, WeightSteps};
use container::{normalization_section, parse_plane_section, plane_section};

#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub container: CodedContainer,
    pub reconstruction: SpectralCube,
    /// Preview layer reconstruction (scalable scheme only).
    pub preview: Option<RgbImage>,
}

impl Encoded {
    pub fn total_bits(&self) -> Result<u64> {
        self.container.total_bits()
    }
}

pub fn encode(cube: &SpectralCube, params: &SchemeParams) -> Result<Encoded> {
    match params.scheme {
        Scheme::Plain => encode_plain(cube, params),
        Scheme::Pca => encode_pca(cube, params),
        Scheme::Hpcls => encode_hpcls(cube, params),
        Scheme::HpclsRgb => encode_hpcls_rgb(cube, params),
    }
}

pub fn decode(container: &CodedContainer) -> Result<SpectralCube> {
    match container.scheme {
        Scheme::Plain => decode_plain(container),
        Scheme::Pca => decode_pca(container),
        Scheme::Hpcls => decode_hpcls(container),
        Scheme::HpclsRgb => decode_hpcls_rgb(container),
    }
}

fn check_input(cube: &SpectralCube, params: &SchemeParams, expect: Scheme) -> Result<()> {
    if params.scheme != expect {
        return Err(Error::InvalidParameter(format!(
            "{} parameters passed to the {expect} encoder",
            params.scheme
        )));
    }
    params.validate()?;
    let limit = u16::MAX as usize;
    if cube.width() > limit || cube.height() > limit || cube.bands() > limit {
        return Err(Error::Size("cube dimensions exceed 16 bits".into()));
    }
    if expect != Scheme::Plain && params.n_c as usize > cube.bands() {
        return Err(Error::InvalidParameter(format!(
            "n_c = {} exceeds {} bands",
            params.n_c,
            cube.bands()
        )));
    }
    if matches!(expect, Scheme::Hpcls | Scheme::HpclsRgb) && params.n_ref as usize > cube.bands() {
        return Err(Error::InvalidParameter(format!(
            "n_ref = {} exceeds {} bands",
            params.n_ref,
            cube.bands()
        )));
    }
    Ok(())
}

fn expect_scheme(container: &CodedContainer, scheme: Scheme) -> Result<()> {
    if container.scheme != scheme {
        return Err(Error::InvalidParameter(format!(
            "container holds scheme {}, not {scheme}",
            container.scheme
        )));
    }
    Ok(())
}

// ---- PLAIN ----

pub fn encode_plain(cube: &SpectralCube, params: &SchemeParams) -> Result<Encoded> {
    check_input(cube, params, Scheme::Plain)?;
    if cube.max_value() > SAMPLE_MAX {
        return Err(Error::Capability(format!(
            "plain scheme codes samples up to {SAMPLE_MAX}, cube peaks at {}",
            cube.max_value()
        )));
    }
    let planes = (0..cube.bands())
        .map(|b| Plane::new(cube.width(), cube.height(), cube.band(b).to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let schedule = gop_schedule(cube.bands(), GopKind::Gop30)?;
    let coded = encode_gop(&planes, &schedule, params.qp)?;
    let payloads: Vec<&[u8]> = coded.iter().map(|c| c.payload.as_slice()).collect();
    let mut container = CodedContainer::new(
        cube.width(),
        cube.height(),
        cube.bands(),
        cube.bit_depth(),
        *params,
    );
    container.push(Layer::Single, SectionId::PlainGop, plane_section(&payloads));
    let samples = coded
        .iter()
        .flat_map(|c| c.reconstruction.samples.iter().copied())
        .collect();
    let reconstruction = SpectralCube::new(
        cube.width(),
        cube.height(),
        cube.bands(),
        cube.bit_depth(),
        samples,
    )?;
    Ok(Encoded {
        container,
        reconstruction,
        preview: None,
    })
}

pub fn decode_plain(container: &CodedContainer) -> Result<SpectralCube> {
    expect_scheme(container, Scheme::Plain)?;
    let payloads = parse_plane_section(container.section(Layer::Single, SectionId::PlainGop)?)?;
    let schedule = gop_schedule(container.bands, GopKind::Gop30)?;
    let planes = decode_gop(&payloads, &schedule)?;
    let samples = planes
        .iter()
        .map(|p| check_plane(p, container.width, container.height))
        .collect::<Result<Vec<_>>>()?
        .concat();
    SpectralCube::new(
        container.width,
        container.height,
        container.bands,
        container.bit_depth,
        samples,
    )
}

fn check_plane(p: &Plane, width: usize, height: usize) -> Result<Vec<u16>> {
    if p.width != width || p.height != height {
        return Err(Error::Decode(format!(
            "plane of {}x{} in a {width}x{height} container",
            p.width, p.height
        )));
    }
    Ok(p.samples.clone())
}

// ---- real-valued plane coding shared by the PCA paths ----

struct CodedStack {
    norms: Vec<Normalization>,
    payloads: Vec<Vec<u8>>,
    decoded: RealPlaneStack,
}

/// Normalizes every plane to the codec range and codes it intra at `qp`.
fn code_real_planes(stack: &RealPlaneStack, qp: u8) -> Result<CodedStack> {
    let coded = (0..stack.planes)
        .into_par_iter()
        .map(|i| {
            let values = stack.plane(i);
            let norm = Normalization::fit(values);
            let plane = Plane::new(stack.width, stack.height, norm.to_samples(values))?;
            let c = encode_intra(&plane, PlaneCodingParams::new(qp)?.with_normalization(norm))?;
            let real = norm.to_real(&c.reconstruction.samples);
            Ok((norm, c.payload, real))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut norms = Vec::with_capacity(coded.len());
    let mut payloads = Vec::with_capacity(coded.len());
    let mut planes = Vec::with_capacity(coded.len());
    for (n, p, r) in coded {
        norms.push(n);
        payloads.push(p);
        planes.push(r);
    }
    Ok(CodedStack {
        norms,
        payloads,
        decoded: RealPlaneStack::from_planes(stack.width, stack.height, planes)?,
    })
}

fn decode_real_planes(
    payloads: &[&[u8]],
    norms: &[Normalization],
    width: usize,
    height: usize,
) -> Result<RealPlaneStack> {
    if payloads.len() != norms.len() {
        return Err(Error::Decode(format!(
            "{} planes but {} normalization records",
            payloads.len(),
            norms.len()
        )));
    }
    let planes = payloads
        .par_iter()
        .zip(norms)
        .map(|(p, n)| {
            let plane = decode_intra(p)?;
            Ok(n.to_real(&check_plane(&plane, width, height)?))
        })
        .collect::<Result<Vec<_>>>()?;
    RealPlaneStack::from_planes(width, height, planes)
}

fn push_planes(container: &mut CodedContainer, layer: Layer, id: SectionId, coded: &CodedStack) {
    let payloads: Vec<&[u8]> = coded.payloads.iter().map(Vec::as_slice).collect();
    container.push(layer, id, plane_section(&payloads));
    container.push(
        layer,
        SectionId::Normalization,
        normalization_section(id, &coded.norms),
    );
}

fn read_planes(container: &CodedContainer, layer: Layer, id: SectionId) -> Result<RealPlaneStack> {
    let payloads = parse_plane_section(container.section(layer, id)?)?;
    let norms = container.normalization(layer, id)?;
    decode_real_planes(&payloads, &norms, container.width, container.height)
}

/// Quantized PCA of `stack` truncated to `n_c`, its coded PC planes and the
/// decoded band-domain reconstruction.
#[allow(clippy::too_many_arguments)]
fn pca_path_encode(
    stack: &RealPlaneStack,
    n_c: usize,
    qp: u8,
    basis_exp: i8,
    container: &mut CodedContainer,
    layer: Layer,
    basis_id: SectionId,
    planes_id: SectionId,
) -> Result<(PcaBasis, RealPlaneStack)> {
    let full = pca::fit_pca_planes(stack, PcaOptions::default())?;
    let (basis, _, _) = pca::quantize_basis(&pca::truncate(&full, n_c)?, basis_exp)?;
    let coefficients = pca::forward(stack, &basis)?;
    let coded = code_real_planes(&coefficients, qp)?;
    container.push(layer, basis_id, basis.to_section()?);
    push_planes(container, layer, planes_id, &coded);
    Ok((basis, coded.decoded))
}

fn read_basis(container: &CodedContainer, layer: Layer, id: SectionId) -> Result<PcaBasis> {
    PcaBasis::from_section(container.section(layer, id)?)
}

fn pca_path_decode(
    container: &CodedContainer,
    layer: Layer,
    basis_id: SectionId,
    planes_id: SectionId,
) -> Result<RealPlaneStack> {
    let basis = read_basis(container, layer, basis_id)?;
    if basis.bands() != container.bands {
        return Err(Error::Decode(format!(
            "residual basis over {} bands in a {}-band container",
            basis.bands(),
            container.bands
        )));
    }
    let planes = read_planes(container, layer, planes_id)?;
    pca::inverse(&planes, &basis)
}

// ---- PCA ----

pub fn encode_pca(cube: &SpectralCube, params: &SchemeParams) -> Result<Encoded> {
    check_input(cube, params, Scheme::Pca)?;
    let mut container = CodedContainer::new(
        cube.width(),
        cube.height(),
        cube.bands(),
        cube.bit_depth(),
        *params,
    );
    let (basis, decoded) = pca_path_encode(
        &cube.to_planes(),
        params.n_c as usize,
        params.qp,
        params.basis_exp,
        &mut container,
        Layer::Single,
        SectionId::ResidualBasis,
        SectionId::ResidualPlanes,
    )?;
    let recon = pca::inverse(&decoded, &basis)?;
    Ok(Encoded {
        container,
        reconstruction: SpectralCube::from_planes_rounded(&recon, cube.bit_depth())?,
        preview: None,
    })
}

pub fn decode_pca(container: &CodedContainer) -> Result<SpectralCube> {
    expect_scheme(container, Scheme::Pca)?;
    let recon = pca_path_decode(
        container,
        Layer::Single,
        SectionId::ResidualBasis,
        SectionId::ResidualPlanes,
    )?;
    SpectralCube::from_planes_rounded(&recon, container.bit_depth)
}

// ---- HPCLS ----

/// Codes the first `n_ref` PC planes of `cube` intra at `q_ref`; returns
/// their decoded values.
fn encode_references(
    cube: &SpectralCube,
    params: &SchemeParams,
    container: &mut CodedContainer,
    layer: Layer,
) -> Result<RealPlaneStack> {
    let full = pca::fit_pca(cube)?;
    let (basis, _, _) = pca::quantize_basis(
        &pca::truncate(&full, params.n_ref as usize)?,
        params.basis_exp,
    )?;
    let coefficients = pca::forward_cube(cube, &basis)?;
    let coded = code_real_planes(&coefficients, params.q_ref)?;
    container.push(layer, SectionId::RefBasis, basis.to_section()?);
    push_planes(container, layer, SectionId::RefPlanes, &coded);
    Ok(coded.decoded)
}

fn decode_references(container: &CodedContainer, layer: Layer) -> Result<RealPlaneStack> {
    // the basis is part of the layer even though prediction only needs the planes
    let basis = read_basis(container, layer, SectionId::RefBasis)?;
    let planes = read_planes(container, layer, SectionId::RefPlanes)?;
    if planes.planes != basis.n_components() {
        return Err(Error::Decode(
            "reference plane count differs from basis".into(),
        ));
    }
    Ok(planes)
}

fn predictor_config(params: &SchemeParams, bit_depth: u8) -> PredictorConfig {
    PredictorConfig {
        steps: WeightSteps::for_depth(params.weight_exp, bit_depth),
        intercept: params.intercept,
    }
}

/// Predicts every band and adds the decoded residual; rounds and clamps.
fn reconstruct_bands(
    regressors: &[&[f64]],
    weights: &WeightSet,
    residual: &RealPlaneStack,
    bit_depth: u8,
) -> Result<SpectralCube> {
    if weights.targets != residual.planes {
        return Err(Error::Decode(format!(
            "{} weight targets for {} residual planes",
            weights.targets, residual.planes
        )));
    }
    let grid = weights.grid;
    let bands = (0..residual.planes)
        .into_par_iter()
        .map(|b| {
            let pred = predict::predict_plane(regressors, weights, b, &grid)?;
            Ok(pred
                .iter()
                .zip(residual.plane(b))
                .map(|(p, r)| p + r)
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let stack = RealPlaneStack::from_planes(residual.width, residual.height, bands)?;
    SpectralCube::from_planes_rounded(&stack, bit_depth)
}

/// Fits band weights against `regressors`, codes the residual cube in
/// `layer` and returns the reconstruction.
fn encode_bands(
    cube: &SpectralCube,
    params: &SchemeParams,
    regressors: &[&[f64]],
    container: &mut CodedContainer,
    layer: Layer,
) -> Result<SpectralCube> {
    let grid = BlockGrid::new(cube.width(), cube.height(), params.block_edge as usize)?;
    let originals = cube.to_planes();
    let (weights, residuals) = predict::closed_loop_residuals(
        &originals.plane_refs(),
        regressors,
        &grid,
        predictor_config(params, cube.bit_depth()),
    )?;
    if weights.saturated > 0 {
        log::warn!("{} predictor weights saturated", weights.saturated);
    }
    container.push(layer, SectionId::Weights, weights.to_section());
    let residual = RealPlaneStack::from_planes(cube.width(), cube.height(), residuals)?;
    let (basis, decoded) = pca_path_encode(
        &residual,
        params.n_c as usize,
        params.qp,
        params.basis_exp,
        container,
        layer,
        SectionId::ResidualBasis,
        SectionId::ResidualPlanes,
    )?;
    let residual_recon = pca::inverse(&decoded, &basis)?;
    reconstruct_bands(regressors, &weights, &residual_recon, cube.bit_depth())
}

fn decode_bands(
    container: &CodedContainer,
    regressors: &[&[f64]],
    layer: Layer,
) -> Result<SpectralCube> {
    let weights = WeightSet::from_section(
        container.section(layer, SectionId::Weights)?,
        container.width,
        container.height,
    )?;
    let residual = pca_path_decode(
        container,
        layer,
        SectionId::ResidualBasis,
        SectionId::ResidualPlanes,
    )?;
    reconstruct_bands(regressors, &weights, &residual, container.bit_depth)
}

pub fn encode_hpcls(cube: &SpectralCube, params: &SchemeParams) -> Result<Encoded> {
    check_input(cube, params, Scheme::Hpcls)?;
    let mut container = CodedContainer::new(
        cube.width(),
        cube.height(),
        cube.bands(),
        cube.bit_depth(),
        *params,
    );
    let refs = encode_references(cube, params, &mut container, Layer::Single)?;
    let reconstruction = encode_bands(
        cube,
        params,
        &refs.plane_refs(),
        &mut container,
        Layer::Single,
    )?;
    Ok(Encoded {
        container,
        reconstruction,
        preview: None,
    })
}

pub fn decode_hpcls(container: &CodedContainer) -> Result<SpectralCube> {
    expect_scheme(container, Scheme::Hpcls)?;
    let refs = decode_references(container, Layer::Single)?;
    decode_bands(container, &refs.plane_refs(), Layer::Single)
}

// ---- HPCLS-RGB ----

fn rgb_gop() -> Result<crate::codec::GopSchedule> {
    gop_schedule(3, GopKind::Gop2)
}

/// `clamp(round(pred) + e − 512)` per channel.
fn preview_from(
    pred: &[Vec<f64>],
    errors: &[Plane],
    width: usize,
    height: usize,
) -> Result<RgbImage> {
    let mut samples = Vec::with_capacity(3 * width * height);
    for (p, e) in pred.iter().zip(errors) {
        let e = check_plane(e, width, height)?;
        samples.extend(p.iter().zip(&e).map(|(&p, &e)| {
            (p.round() + e as f64 - RESIDUAL_OFFSET as f64).clamp(0.0, SAMPLE_MAX as f64) as u16
        }));
    }
    RgbImage::new(width, height, samples)
}

fn rgb_predictions(refs: &[&[f64]], weights: &WeightSet) -> Result<Vec<Vec<f64>>> {
    if weights.targets != 3 {
        return Err(Error::Decode(format!(
            "{} RGB weight targets",
            weights.targets
        )));
    }
    (0..3)
        .map(|c| predict::predict_plane(refs, weights, c, &weights.grid))
        .collect()
}

fn band_regressors<'a>(
    preview: &'a [Vec<f64>],
    refs: &'a RealPlaneStack,
    rgb_only: bool,
) -> Vec<&'a [f64]> {
    let mut out: Vec<&[f64]> = preview.iter().map(Vec::as_slice).collect();
    if !rgb_only {
        out.extend(refs.plane_refs());
    }
    out
}

fn rgb_channels(img: &RgbImage) -> Vec<Vec<f64>> {
    (0..3)
        .map(|c| img.channel(c).iter().map(|&v| v as f64).collect())
        .collect()
}

pub fn encode_hpcls_rgb(cube: &SpectralCube, params: &SchemeParams) -> Result<Encoded> {
    encode_hpcls_rgb_with(cube, params, &cie1931_cmf())
}

/// HPCLS-RGB with an explicit colour-matching matrix for the preview.
pub fn encode_hpcls_rgb_with(
    cube: &SpectralCube,
    params: &SchemeParams,
    cmf: &CmfMatrix,
) -> Result<Encoded> {
    check_input(cube, params, Scheme::HpclsRgb)?;
    let (w, h) = (cube.width(), cube.height());
    let rgb = render_rgb(cube, cmf)?;
    let mut container = CodedContainer::new(w, h, cube.bands(), cube.bit_depth(), *params);

    let refs = encode_references(cube, params, &mut container, Layer::Preview)?;
    let grid = BlockGrid::new(w, h, params.block_edge as usize)?;
    let targets = rgb_channels(&rgb);
    let target_refs: Vec<&[f64]> = targets.iter().map(Vec::as_slice).collect();
    let (rgb_weights, _) = predict::closed_loop_residuals(
        &target_refs,
        &refs.plane_refs(),
        &grid,
        predictor_config(params, crate::cube::PREVIEW_DEPTH),
    )?;
    let pred = rgb_predictions(&refs.plane_refs(), &rgb_weights)?;
    let mut clipped = 0;
    let errors = (0..3)
        .map(|c| {
            let samples = targets[c]
                .iter()
                .zip(&pred[c])
                .map(|(&t, &p)| {
                    let e = (t - p.round()) as i32 + RESIDUAL_OFFSET;
                    if !(0..=SAMPLE_MAX as i32).contains(&e) {
                        clipped += 1;
                    }
                    e.clamp(0, SAMPLE_MAX as i32) as u16
                })
                .collect();
            Plane::new(w, h, samples)
        })
        .collect::<Result<Vec<_>>>()?;
    if clipped > 0 {
        log::warn!("{clipped} preview error samples clipped");
    }
    let coded = encode_gop(&errors, &rgb_gop()?, params.qp_rgb)?;
    let payloads: Vec<&[u8]> = coded.iter().map(|c| c.payload.as_slice()).collect();
    container.push(
        Layer::Preview,
        SectionId::RgbWeights,
        rgb_weights.to_section(),
    );
    container.push(
        Layer::Preview,
        SectionId::RgbError,
        plane_section(&payloads),
    );
    let decoded_errors: Vec<Plane> = coded.into_iter().map(|c| c.reconstruction).collect();
    let preview = preview_from(&pred, &decoded_errors, w, h)?;

    let channels = rgb_channels(&preview);
    let regressors = band_regressors(&channels, &refs, params.rgb_only);
    let reconstruction = encode_bands(
        cube,
        params,
        &regressors,
        &mut container,
        Layer::Enhancement,
    )?;
    Ok(Encoded {
        container,
        reconstruction,
        preview: Some(preview),
    })
}

fn decode_preview_parts(container: &CodedContainer) -> Result<(RgbImage, RealPlaneStack)> {
    expect_scheme(container, Scheme::HpclsRgb)?;
    let refs = decode_references(container, Layer::Preview)?;
    let weights = WeightSet::from_section(
        container.section(Layer::Preview, SectionId::RgbWeights)?,
        container.width,
        container.height,
    )?;
    let pred = rgb_predictions(&refs.plane_refs(), &weights)?;
    let payloads = parse_plane_section(container.section(Layer::Preview, SectionId::RgbError)?)?;
    let errors = decode_gop(&payloads, &rgb_gop()?)?;
    let preview = preview_from(&pred, &errors, container.width, container.height)?;
    Ok((preview, refs))
}

/// Decodes the RGB preview from the PREVIEW layer alone.
pub fn decode_hpcls_rgb_preview(container: &CodedContainer) -> Result<RgbImage> {
    decode_preview_parts(container).map(|(p, _)| p)
}

pub fn decode_hpcls_rgb(container: &CodedContainer) -> Result<SpectralCube> {
    let (preview, refs) = decode_preview_parts(container)?;
    let channels = rgb_channels(&preview);
    let regressors = band_regressors(&channels, &refs, container.params.rgb_only);
    decode_bands(container, &regressors, Layer::Enhancement)
}

/// Decoded preview of a scalable container, or a capability error for
/// single-layer schemes.
pub fn decode_preview(container: &CodedContainer) -> Result<RgbImage> {
    if container.scheme != Scheme::HpclsRgb {
        return Err(Error::Capability(format!(
            "scheme {} has no preview layer",
            container.scheme
        )));
    }
    decode_hpcls_rgb_preview(container)
}
