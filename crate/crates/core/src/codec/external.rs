//! Adapter for running an external (VTM-style) encoder over a plane sequence.
//!
//! The adapter writes the planes as raw 10-bit little-endian monochrome
//! pictures plus a one-line sidecar, runs the executable with VTM-like
//! arguments and collects per-picture bit counts from its log
//! (`POC <n> ... <bits> bits`) together with the reconstructed sequence.
//!
//! Config file (key=value, `#` comments):
//!
//! ```text
//! executable = /opt/vtm/EncoderAppStatic
//! template   = /opt/vtm/cfg/encoder_randomaccess_vtm_gop30.cfg
//! workdir    = /tmp/msic-vtm
//! threads    = 4
//! timeout    = 600
//! dimension_multiple = 2
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::Plane;
use crate::error::{Error, Result};

pub const ADAPTER_ENV: &str = "MSIC_ADAPTER_CONFIG";

static RUN_LOCK: Mutex<()> = Mutex::new(());

#[derive(Debug, Clone, PartialEq)]
pub struct AdapterConfig {
    pub executable: PathBuf,
    pub template: PathBuf,
    pub workdir: PathBuf,
    pub threads: u32,
    pub timeout: Duration,
    pub dimension_multiple: usize,
    pub enabled: bool,
}

impl AdapterConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("adapter config line {}: expected key=value", n + 1))
            })?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let path = |key: &str| -> Result<PathBuf> {
            kv.get(key)
                .map(PathBuf::from)
                .ok_or_else(|| Error::Format(format!("adapter config is missing `{key}`")))
        };
        let number = |key: &str, default: u64| -> Result<u64> {
            kv.get(key).map_or(Ok(default), |v| {
                v.parse()
                    .map_err(|_| Error::Format(format!("adapter config `{key}` = {v:?}")))
            })
        };
        let enabled = match kv.get("enabled").map(String::as_str) {
            None | Some("true") | Some("1") | Some("yes") => true,
            Some("false") | Some("0") | Some("no") => false,
            Some(other) => {
                return Err(Error::Format(format!(
                    "adapter config `enabled` = {other:?}"
                )))
            }
        };
        Ok(Self {
            executable: path("executable")?,
            template: path("template")?,
            workdir: path("workdir")?,
            threads: number("threads", 1)? as u32,
            timeout: Duration::from_secs(number("timeout", 3600)?),
            dimension_multiple: number("dimension_multiple", 2)?.max(1) as usize,
            enabled,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Config named by `MSIC_ADAPTER_CONFIG`, if set.
    pub fn from_env() -> Result<Option<Self>> {
        match std::env::var_os(ADAPTER_ENV) {
            Some(p) => Self::load(p).map(Some),
            None => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalRun {
    /// Bits per picture, indexed by picture order.
    pub bits: Vec<u64>,
    pub reconstructions: Vec<Plane>,
}

impl ExternalRun {
    pub fn total_bits(&self) -> u64 {
        self.bits.iter().sum()
    }
}

/// Integer before `bits` on every line starting with `POC <n>`.
pub fn parse_bit_counts(log: &str) -> BTreeMap<usize, u64> {
    let mut out = BTreeMap::new();
    for line in log.lines() {
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some("POC") {
            continue;
        }
        let Some(poc) = tokens.next().and_then(|t| t.parse().ok()) else {
            continue;
        };
        let rest: Vec<&str> = tokens.collect();
        if let Some(i) = rest.iter().position(|&t| t == "bits") {
            if let Some(bits) = i.checked_sub(1).and_then(|j| rest[j].parse().ok()) {
                out.insert(poc, bits);
            }
        }
    }
    out
}

pub fn external_encoder_run(
    planes: &[Plane],
    qp: u8,
    config: Option<&AdapterConfig>,
) -> Result<ExternalRun> {
    let config = match config {
        Some(c) if c.enabled => c,
        _ => {
            return Err(Error::Capability(
                "external encoder adapter is not configured".into(),
            ))
        }
    };
    let first = planes
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty plane sequence".into()))?;
    let (w, h) = (first.width, first.height);
    if planes.iter().any(|p| p.width != w || p.height != h) {
        return Err(Error::DimensionMismatch("planes differ in size".into()));
    }
    let m = config.dimension_multiple;
    if w % m != 0 || h % m != 0 {
        return Err(Error::InvalidParameter(format!(
            "{w}x{h} is not a multiple of {m} as the encoder requires"
        )));
    }
    if !config.executable.exists() {
        return Err(Error::External(format!(
            "executable {} not found",
            config.executable.display()
        )));
    }

    let _guard = RUN_LOCK.lock().unwrap_or_else(|e| e.into_inner());
    fs::create_dir_all(&config.workdir)?;
    let input = config.workdir.join("input.yuv");
    let recon = config.workdir.join("recon.yuv");
    let stream = config.workdir.join("stream.bin");
    let sidecar = config.workdir.join("input.json");
    let _ = fs::remove_file(&recon);

    let mut raw = Vec::with_capacity(planes.len() * w * h * 2);
    for p in planes {
        for &s in &p.samples {
            raw.extend_from_slice(&s.to_le_bytes());
        }
    }
    fs::write(&input, raw)?;
    fs::write(
        &sidecar,
        format!(
            "{{\"width\": {w}, \"height\": {h}, \"count\": {}}}\n",
            planes.len()
        ),
    )?;

    let mut child = Command::new(&config.executable)
        .arg("-c")
        .arg(&config.template)
        .arg("-i")
        .arg(&input)
        .arg("-o")
        .arg(&recon)
        .arg("-b")
        .arg(&stream)
        .args(["-wdt", &w.to_string(), "-hgt", &h.to_string()])
        .args([
            "-f",
            &planes.len().to_string(),
            "-q",
            &qp.to_string(),
            "-fr",
            "1",
        ])
        .args([
            "--InputBitDepth=10",
            "--InternalBitDepth=10",
            "--OutputBitDepth=10",
            "--InputChromaFormat=400",
        ])
        .env("MSIC_ENCODER_THREADS", config.threads.to_string())
        .current_dir(&config.workdir)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::External(format!("failed to start encoder: {e}")))?;

    let start = Instant::now();
    loop {
        if child.try_wait()?.is_some() {
            break;
        }
        if start.elapsed() > config.timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(Error::External(format!(
                "encoder timed out after {:?}",
                config.timeout
            )));
        }
        std::thread::sleep(Duration::from_millis(10));
    }
    let output = child.wait_with_output()?;
    if !output.status.success() {
        return Err(Error::External(format!(
            "encoder exited with {}: {}",
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }

    let counts = parse_bit_counts(&String::from_utf8_lossy(&output.stdout));
    let bits = (0..planes.len())
        .map(|poc| {
            counts.get(&poc).copied().ok_or_else(|| {
                Error::External(format!("no bit count for POC {poc} in encoder output"))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let data = fs::read(&recon)
        .map_err(|e| Error::External(format!("reconstruction not readable: {e}")))?;
    if data.len() != planes.len() * w * h * 2 {
        return Err(Error::External(format!(
            "reconstruction has {} bytes, expected {}",
            data.len(),
            planes.len() * w * h * 2
        )));
    }
    let reconstructions = data
        .chunks_exact(w * h * 2)
        .map(|chunk| {
            let samples = chunk
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]))
                .collect();
            Plane::new(w, h, samples)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExternalRun {
        bits,
        reconstructions,
    })
}
