//! `msic` command line: encode, decode, crop, sweep, metrics.
//!
//! Exit codes: 0 success, 1 data or format error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::codec::external::{external_encoder_run, AdapterConfig};
use crate::codec::Plane;
use crate::cube::{
    crop_quadrants, load_cube, mse, psnr, psnr_with, store_cube, PeakMode, RgbImage, SpectralCube,
};
use crate::error::Error;
use crate::pipeline::{self, CodedContainer, Scheme, SchemeParams};
use crate::predict::DEFAULT_BLOCK_EDGE;
use crate::rd::{self, RdCurve};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "msic", version, about = "Multispectral image codec")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Encode an MSRC cube into a container.
    Encode(EncodeArgs),
    /// Decode a container to an MSRC cube and/or a PPM preview.
    Decode(DecodeArgs),
    /// Write the four corner crops of a cube.
    Crop(CropArgs),
    /// Run a parameter sweep from a manifest and write CSV.
    Sweep(SweepArgs),
    /// MSE and PSNR between two cubes.
    Metrics(MetricsArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SchemeArg {
    Plain,
    Pca,
    Hpcls,
    HpclsRgb,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Plain => Scheme::Plain,
            SchemeArg::Pca => Scheme::Pca,
            SchemeArg::Hpcls => Scheme::Hpcls,
            SchemeArg::HpclsRgb => Scheme::HpclsRgb,
        }
    }
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    #[arg(long, value_enum)]
    pub scheme: SchemeArg,
    #[arg(long)]
    pub qp: u8,
    #[arg(long = "n-c")]
    pub n_c: Option<u8>,
    #[arg(long = "n-ref")]
    pub n_ref: Option<u8>,
    #[arg(long = "q-ref")]
    pub q_ref: Option<u8>,
    #[arg(long = "qp-rgb")]
    pub qp_rgb: Option<u8>,
    /// Prediction block edge in pixels.
    #[arg(long = "block-edge", default_value_t = DEFAULT_BLOCK_EDGE as u16)]
    pub block_edge: u16,
    #[arg(long = "no-intercept")]
    pub no_intercept: bool,
    /// Predict bands from the RGB preview only (hpcls-rgb).
    #[arg(long = "rgb-only")]
    pub rgb_only: bool,
    /// Run the plain scheme through the configured external encoder; the
    /// output is then its reconstruction as MSRC.
    #[arg(long)]
    pub external: bool,
    #[arg(long = "adapter-config")]
    pub adapter_config: Option<PathBuf>,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    /// Write the preview layer as a 16-bit binary PPM.
    #[arg(long)]
    pub preview: Option<PathBuf>,
    /// Original cube; prints the PSNR of the decoded cube against it.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CropArgs {
    pub input: PathBuf,
    /// Directory for `<stem>_{tl,tr,bl,br}.msrc`.
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PeakArg {
    ImageMax,
    Nominal,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    pub original: PathBuf,
    pub reconstruction: PathBuf,
    #[arg(long, value_enum, default_value = "image-max")]
    pub peak: PeakArg,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(Error::Io(e))
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Encode(a) => encode(a, out),
        Command::Decode(a) => decode(a, out),
        Command::Crop(a) => crop(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Metrics(a) => metrics(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn required(v: Option<u8>, flag: &str, scheme: Scheme) -> std::result::Result<u8, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("--{flag} is required for scheme {scheme}")))
}

fn scheme_params(a: &EncodeArgs) -> std::result::Result<SchemeParams, Failure> {
    let scheme: Scheme = a.scheme.into();
    let mut p = match scheme {
        Scheme::Plain => SchemeParams::plain(a.qp),
        Scheme::Pca => SchemeParams::pca(required(a.n_c, "n-c", scheme)?, a.qp),
        Scheme::Hpcls => SchemeParams::hpcls(
            required(a.n_ref, "n-ref", scheme)?,
            required(a.q_ref, "q-ref", scheme)?,
            required(a.n_c, "n-c", scheme)?,
            a.qp,
        ),
        Scheme::HpclsRgb => SchemeParams::hpcls_rgb(
            required(a.n_ref, "n-ref", scheme)?,
            required(a.q_ref, "q-ref", scheme)?,
            required(a.n_c, "n-c", scheme)?,
            a.qp,
            required(a.qp_rgb, "qp-rgb", scheme)?,
        ),
    };
    if matches!(scheme, Scheme::Hpcls | Scheme::HpclsRgb) {
        p.block_edge = a.block_edge;
        p.intercept = !a.no_intercept;
    }
    if a.rgb_only {
        if scheme != Scheme::HpclsRgb {
            return Err(Failure::Usage("--rgb-only needs scheme hpcls-rgb".into()));
        }
        p.rgb_only = true;
    }
    p.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(p)
}

fn encode(a: EncodeArgs, out: &mut dyn Write) -> CliResult {
    let params = scheme_params(&a)?;
    if a.external {
        if params.scheme != Scheme::Plain {
            return Err(Failure::Usage(
                "--external only drives the plain scheme".into(),
            ));
        }
        return encode_external(&a, out);
    }
    let cube = load_cube(&a.input)?;
    let encoded = pipeline::encode(&cube, &params)?;
    let bits = encoded.container.write(&a.output)? * 8;
    writeln!(out, "total_bits {bits}")?;
    writeln!(out, "psnr {}", psnr(&cube, &encoded.reconstruction)?)?;
    Ok(())
}

fn encode_external(a: &EncodeArgs, out: &mut dyn Write) -> CliResult {
    let config = match &a.adapter_config {
        Some(p) => Some(AdapterConfig::load(p)?),
        None => AdapterConfig::from_env()?,
    };
    let cube = load_cube(&a.input)?;
    let planes = (0..cube.bands())
        .map(|b| Plane::new(cube.width(), cube.height(), cube.band(b).to_vec()))
        .collect::<crate::Result<Vec<_>>>()?;
    let run = external_encoder_run(&planes, a.qp, config.as_ref())?;
    let samples = run
        .reconstructions
        .iter()
        .flat_map(|p| p.samples.iter().copied())
        .collect();
    let recon = SpectralCube::new(
        cube.width(),
        cube.height(),
        cube.bands(),
        cube.bit_depth(),
        samples,
    )?;
    store_cube(&recon, &a.output)?;
    writeln!(out, "total_bits {}", run.total_bits())?;
    writeln!(out, "psnr {}", psnr(&cube, &recon)?)?;
    Ok(())
}

/// Binary PPM (P6, maxval 65535) with 10-bit samples scaled to 16 bits.
pub fn write_ppm(path: &Path, img: &RgbImage) -> crate::Result<()> {
    let mut data = format!("P6\n{} {}\n65535\n", img.width, img.height).into_bytes();
    let n = img.width * img.height;
    for i in 0..n {
        for c in 0..3 {
            let v = img.channel(c)[i] as u32;
            let scaled = ((v * 65535 + 511) / 1023) as u16;
            data.extend_from_slice(&scaled.to_be_bytes());
        }
    }
    fs::write(path, data)?;
    Ok(())
}

fn decode(a: DecodeArgs, out: &mut dyn Write) -> CliResult {
    if a.output.is_none() && a.preview.is_none() {
        return Err(Failure::Usage(
            "nothing to do: give an output path and/or --preview".into(),
        ));
    }
    let container = CodedContainer::read(&a.input)?;
    if let Some(p) = &a.preview {
        write_ppm(p, &pipeline::decode_preview(&container)?)?;
    }
    if let Some(o) = &a.output {
        let cube = pipeline::decode(&container)?;
        store_cube(&cube, o)?;
        if let Some(r) = &a.reference {
            writeln!(out, "psnr {}", psnr(&load_cube(r)?, &cube)?)?;
        }
    }
    Ok(())
}

fn crop(a: CropArgs, out: &mut dyn Write) -> CliResult {
    let cube = load_cube(&a.input)?;
    let stem = a
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cube".into());
    fs::create_dir_all(&a.out_dir)?;
    for (crop, tag) in crop_quadrants(&cube)?.iter().zip(["tl", "tr", "bl", "br"]) {
        let path = a.out_dir.join(format!("{stem}_{tag}.msrc"));
        store_cube(crop, &path)?;
        writeln!(out, "{}", path.display())?;
    }
    Ok(())
}

fn sweep(a: SweepArgs, out: &mut dyn Write) -> CliResult {
    let manifest = rd::Manifest::load(&a.manifest)?;
    let configs = manifest
        .configs()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    manifest.check_images()?;
    let images = manifest
        .images
        .iter()
        .map(|p| Ok((p.display().to_string(), load_cube(p)?)))
        .collect::<crate::Result<Vec<_>>>()?;
    let result = rd::sweep(&images, &configs, a.jobs)?;
    for f in &result.failures {
        writeln!(out, "failed {} {}: {}", f.image_id, f.params, f.error)?;
    }
    if !result.failures.is_empty() {
        return Err(Failure::Data(Error::IncompleteGrid(format!(
            "{} of {} encodings failed",
            result.failures.len(),
            result.failures.len() + result.points.len()
        ))));
    }
    let averaged = rd::average_with(&result.points, manifest.average)?;
    rd::emit_csv(&[RdCurve::new(manifest.label.clone(), averaged)], &a.out)?;
    writeln!(out, "{} points", result.points.len())?;
    Ok(())
}

fn metrics(a: MetricsArgs, out: &mut dyn Write) -> CliResult {
    let x = load_cube(&a.original)?;
    let y = load_cube(&a.reconstruction)?;
    let peak = match a.peak {
        PeakArg::ImageMax => PeakMode::ImageMax,
        PeakArg::Nominal => PeakMode::Nominal,
    };
    writeln!(out, "mse {}", mse(&x, &y)?)?;
    writeln!(out, "psnr {}", psnr_with(&x, &y, peak)?)?;
    Ok(())
}
