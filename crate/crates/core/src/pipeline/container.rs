//! Sectioned container holding every layer of a coded cube.
//!
//! ```text
//! "MSC1" u8 version u8 scheme u16 width u16 height u16 bands u8 bit_depth
//! params (10 bytes, see SchemeParams)
//! u16 section count, then per section: u8 layer u8 id u32 offset u32 length
//! section payloads
//! ```
//!
//! Parsing tolerates a truncated file: sections that do not fit are marked
//! missing and only fail when they are asked for.

use std::fs;
use std::path::Path;

use super::params::{Scheme, SchemeParams, PARAMS_LEN};
use crate::bytes::{Reader, Writer};
use crate::codec::Normalization;
use crate::error::{Error, Result};

pub const CONTAINER_MAGIC: &[u8; 4] = b"MSC1";
pub const CONTAINER_VERSION: u8 = 1;
const FIXED_HEADER: usize = 13 + PARAMS_LEN + 2;
const TABLE_ENTRY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Layer {
    Single = 0,
    Preview = 1,
    Enhancement = 2,
}

impl Layer {
    fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Layer::Single),
            1 => Ok(Layer::Preview),
            2 => Ok(Layer::Enhancement),
            _ => Err(Error::Format(format!("unknown layer id {v}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum SectionId {
    RefBasis = 1,
    RefPlanes = 2,
    Weights = 3,
    ResidualBasis = 4,
    ResidualPlanes = 5,
    RgbWeights = 6,
    RgbError = 7,
    Normalization = 8,
    PlainGop = 9,
}

impl SectionId {
    fn from_u8(v: u8) -> Result<Self> {
        Ok(match v {
            1 => SectionId::RefBasis,
            2 => SectionId::RefPlanes,
            3 => SectionId::Weights,
            4 => SectionId::ResidualBasis,
            5 => SectionId::ResidualPlanes,
            6 => SectionId::RgbWeights,
            7 => SectionId::RgbError,
            8 => SectionId::Normalization,
            9 => SectionId::PlainGop,
            _ => return Err(Error::Format(format!("unknown section id {v}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub layer: Layer,
    pub id: SectionId,
    /// `None` when the section lies beyond the end of a truncated file.
    pub data: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodedContainer {
    pub scheme: Scheme,
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub bit_depth: u8,
    pub params: SchemeParams,
    pub sections: Vec<Section>,
}

impl CodedContainer {
    pub fn new(
        width: usize,
        height: usize,
        bands: usize,
        bit_depth: u8,
        params: SchemeParams,
    ) -> Self {
        Self {
            scheme: params.scheme(),
            width,
            height,
            bands,
            bit_depth,
            params,
            sections: Vec::new(),
        }
    }

    pub fn push(&mut self, layer: Layer, id: SectionId, data: Vec<u8>) {
        self.sections.push(Section {
            layer,
            id,
            data: Some(data),
        });
    }

    /// First section with this layer and id.
    pub fn section(&self, layer: Layer, id: SectionId) -> Result<&[u8]> {
        self.sections
            .iter()
            .find(|s| s.layer == layer && s.id == id)
            .and_then(|s| s.data.as_deref())
            .ok_or(Error::MissingSection {
                layer: layer as u8,
                section: id as u8,
            })
    }

    /// Normalization records attached to the planes of section `target`.
    pub fn normalization(&self, layer: Layer, target: SectionId) -> Result<Vec<Normalization>> {
        for s in &self.sections {
            if s.layer != layer || s.id != SectionId::Normalization {
                continue;
            }
            let data = s.data.as_deref().ok_or(Error::MissingSection {
                layer: layer as u8,
                section: SectionId::Normalization as u8,
            })?;
            let (t, norms) = parse_normalization(data)?;
            if t == target as u8 {
                return Ok(norms);
            }
        }
        Err(Error::MissingSection {
            layer: layer as u8,
            section: SectionId::Normalization as u8,
        })
    }

    pub fn layer_bytes(&self, layer: Layer) -> usize {
        self.sections
            .iter()
            .filter(|s| s.layer == layer)
            .filter_map(|s| s.data.as_ref().map(Vec::len))
            .sum()
    }

    pub fn header_len(&self) -> usize {
        FIXED_HEADER + TABLE_ENTRY * self.sections.len()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new();
        w.bytes(CONTAINER_MAGIC)
            .u8(CONTAINER_VERSION)
            .u8(self.scheme as u8)
            .u16(self.width as u16)
            .u16(self.height as u16)
            .u16(self.bands as u16)
            .u8(self.bit_depth);
        self.params.write(&mut w);
        w.u16(self.sections.len() as u16);
        let mut offset = self.header_len();
        for s in &self.sections {
            let data = s.data.as_ref().ok_or_else(|| {
                Error::InvalidParameter("cannot serialize a container with missing sections".into())
            })?;
            w.u8(s.layer as u8)
                .u8(s.id as u8)
                .u32(offset as u32)
                .u32(data.len() as u32);
            offset += data.len();
        }
        for s in &self.sections {
            w.bytes(s.data.as_ref().expect("checked above"));
        }
        Ok(w.finish())
    }

    pub fn total_bits(&self) -> Result<u64> {
        Ok(8 * self.to_bytes()?.len() as u64)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != CONTAINER_MAGIC {
            return Err(Error::Format("not an MSC1 container".into()));
        }
        let mut r = Reader::new(bytes, "container header");
        r.take(4)?;
        let version = r.u8()?;
        if version != CONTAINER_VERSION {
            return Err(Error::Format(format!("container version {version}")));
        }
        let scheme = Scheme::from_u8(r.u8()?)?;
        let width = r.u16()? as usize;
        let height = r.u16()? as usize;
        let bands = r.u16()? as usize;
        let bit_depth = r.u8()?;
        let params = SchemeParams::read(scheme, &mut r)?;
        let count = r.u16()? as usize;
        let table_end = FIXED_HEADER + TABLE_ENTRY * count;
        let mut extents = Vec::with_capacity(count);
        for _ in 0..count {
            let layer = Layer::from_u8(r.u8()?)?;
            let id = SectionId::from_u8(r.u8()?)?;
            let offset = r.u32()? as usize;
            let len = r.u32()? as usize;
            extents.push((layer, id, offset, len));
        }
        let mut sorted: Vec<(usize, usize)> = extents.iter().map(|e| (e.2, e.3)).collect();
        sorted.sort_unstable();
        let mut cursor = table_end;
        for (offset, len) in sorted {
            if offset < cursor {
                return Err(Error::Validation(format!(
                    "section at byte {offset} overlaps the header or another section"
                )));
            }
            cursor = offset
                .checked_add(len)
                .ok_or_else(|| Error::Validation("section extent overflows".into()))?;
        }
        let sections = extents
            .into_iter()
            .map(|(layer, id, offset, len)| Section {
                layer,
                id,
                data: bytes.get(offset..offset + len).map(<[u8]>::to_vec),
            })
            .collect();
        Ok(Self {
            scheme,
            width,
            height,
            bands,
            bit_depth,
            params,
            sections,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<u64> {
        let bytes = self.to_bytes()?;
        fs::write(path, &bytes)?;
        Ok(bytes.len() as u64)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read(path)?)
    }
}

/// u8 target section, u16 count, then (f32 offset, f32 scale) per plane.
pub fn normalization_section(target: SectionId, norms: &[Normalization]) -> Vec<u8> {
    let mut w = Writer::new();
    w.u8(target as u8).u16(norms.len() as u16);
    for n in norms {
        w.f32(n.offset).f32(n.scale);
    }
    w.finish()
}

fn parse_normalization(data: &[u8]) -> Result<(u8, Vec<Normalization>)> {
    let mut r = Reader::new(data, "normalization section");
    let target = r.u8()?;
    let count = r.u16()? as usize;
    let norms = (0..count)
        .map(|_| {
            Ok(Normalization {
                offset: r.f32()?,
                scale: r.f32()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    r.expect_end()?;
    Ok((target, norms))
}

/// u16 count, then one u32-length-prefixed payload per plane.
pub fn plane_section(payloads: &[&[u8]]) -> Vec<u8> {
    let mut w = Writer::new();
    w.u16(payloads.len() as u16);
    for p in payloads {
        w.blob(p);
    }
    w.finish()
}

pub fn parse_plane_section(data: &[u8]) -> Result<Vec<&[u8]>> {
    let mut r = Reader::new(data, "plane section");
    let count = r.u16()? as usize;
    let planes = (0..count).map(|_| r.blob()).collect::<Result<Vec<_>>>()?;
    r.expect_end()?;
    Ok(planes)
}
