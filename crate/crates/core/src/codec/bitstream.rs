//! `.cbs` container: fixed header, component table, concatenated payloads.
//!
//! ```text
//! "CBS1" | version u8 | space u8 | block u8 | chroma_channels u8 | op_point u8
//! | width u32 BE | height u32 BE | count u8 | (id u8, length u32 BE)* | payloads
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::OperatingPoint;
use crate::imageio::ColorSpace;

pub const MAGIC: [u8; 4] = *b"CBS1";
pub const VERSION: u8 = 1;
/// Fixed header bytes before the component table.
const FIXED_HEADER: usize = 4 + 1 + 1 + 1 + 1 + 1 + 4 + 4 + 1;
const TABLE_ENTRY: usize = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitstreamError {
    #[error("not a chromabench stream (bad magic)")]
    BadMagic,
    #[error("unsupported stream version {0}")]
    UnsupportedVersion(u8),
    #[error("stream truncated: {0}")]
    Truncated(String),
    #[error("{0} unexpected bytes after the last component")]
    TrailingBytes(usize),
    #[error("unknown color space code {0}")]
    UnknownSpace(u8),
    #[error("unknown component id {0}")]
    UnknownComponent(u8),
    #[error("unknown operating point code {0}")]
    UnknownOperatingPoint(u8),
    #[error("invalid component layout: {0}")]
    ComponentLayout(String),
    #[error("corrupt payload: {0}")]
    Payload(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentId {
    LumaSide = 0,
    LumaMain = 1,
    ChromaSide = 2,
    ChromaMain = 3,
    RgbSide = 4,
    RgbMain = 5,
}

impl ComponentId {
    pub const DUAL: [ComponentId; 4] = [Self::LumaSide, Self::LumaMain, Self::ChromaSide, Self::ChromaMain];
    pub const SINGLE: [ComponentId; 2] = [Self::RgbSide, Self::RgbMain];

    pub fn from_code(code: u8) -> Result<Self, BitstreamError> {
        Ok(match code {
            0 => Self::LumaSide,
            1 => Self::LumaMain,
            2 => Self::ChromaSide,
            3 => Self::ChromaMain,
            4 => Self::RgbSide,
            5 => Self::RgbMain,
            other => return Err(BitstreamError::UnknownComponent(other)),
        })
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::LumaSide => "luma_side",
            Self::LumaMain => "luma_main",
            Self::ChromaSide => "chroma_side",
            Self::ChromaMain => "chroma_main",
            Self::RgbSide => "rgb_side",
            Self::RgbMain => "rgb_main",
        }
    }

    pub fn is_side(self) -> bool {
        matches!(self, Self::LumaSide | Self::ChromaSide | Self::RgbSide)
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub(crate) fn space_code(space: ColorSpace) -> u8 {
    match space {
        ColorSpace::Yuv => 1,
        ColorSpace::Lab => 2,
        _ => 0,
    }
}

fn space_from_code(code: u8) -> Result<ColorSpace, BitstreamError> {
    match code {
        0 => Ok(ColorSpace::Srgb),
        1 => Ok(ColorSpace::Yuv),
        2 => Ok(ColorSpace::Lab),
        other => Err(BitstreamError::UnknownSpace(other)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub space: ColorSpace,
    pub block: u8,
    pub chroma_channels: u8,
    pub operating_point: OperatingPoint,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub id: ComponentId,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitstream {
    pub header: Header,
    pub components: Vec<Component>,
}

impl Bitstream {
    pub fn expected_components(space: ColorSpace) -> &'static [ComponentId] {
        if space == ColorSpace::Srgb {
            &ComponentId::SINGLE
        } else {
            &ComponentId::DUAL
        }
    }

    pub fn component(&self, id: ComponentId) -> Option<&Component> {
        self.components.iter().find(|c| c.id == id)
    }

    /// Header plus component table size in bytes.
    pub fn header_bytes(&self) -> usize {
        FIXED_HEADER + TABLE_ENTRY * self.components.len()
    }

    pub fn payload_bytes(&self) -> usize {
        self.components.iter().map(|c| c.payload.len()).sum()
    }

    pub fn pixels(&self) -> usize {
        self.header.width as usize * self.header.height as usize
    }

    /// Payload bits per pixel; the header is not counted.
    pub fn bpp(&self) -> f64 {
        (self.payload_bytes() * 8) as f64 / self.pixels() as f64
    }

    pub fn component_bpp(&self, id: ComponentId) -> f64 {
        self.component(id)
            .map_or(0.0, |c| (c.payload.len() * 8) as f64 / self.pixels() as f64)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.header_bytes() + self.payload_bytes());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(space_code(self.header.space));
        out.push(self.header.block);
        out.push(self.header.chroma_channels);
        out.push(self.header.operating_point.code());
        out.extend_from_slice(&self.header.width.to_be_bytes());
        out.extend_from_slice(&self.header.height.to_be_bytes());
        out.push(self.components.len() as u8);
        for c in &self.components {
            out.push(c.id.code());
            out.extend_from_slice(&(c.payload.len() as u32).to_be_bytes());
        }
        for c in &self.components {
            out.extend_from_slice(&c.payload);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BitstreamError> {
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(BitstreamError::BadMagic);
        }
        if bytes.len() < FIXED_HEADER {
            return Err(BitstreamError::Truncated("header".into()));
        }
        if bytes[4] != VERSION {
            return Err(BitstreamError::UnsupportedVersion(bytes[4]));
        }
        let space = space_from_code(bytes[5])?;
        let operating_point =
            OperatingPoint::from_code(bytes[8]).ok_or(BitstreamError::UnknownOperatingPoint(bytes[8]))?;
        let be32 = |at: usize| u32::from_be_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]);
        let header = Header {
            space,
            block: bytes[6],
            chroma_channels: bytes[7],
            operating_point,
            width: be32(9),
            height: be32(13),
        };
        if header.width == 0 || header.height == 0 {
            return Err(BitstreamError::ComponentLayout("zero image dimension".into()));
        }
        let count = bytes[17] as usize;
        let table_end = FIXED_HEADER + TABLE_ENTRY * count;
        if bytes.len() < table_end {
            return Err(BitstreamError::Truncated("component table".into()));
        }
        let expected = Self::expected_components(space);
        if count != expected.len() {
            return Err(BitstreamError::ComponentLayout(format!(
                "expected {} components, found {count}",
                expected.len()
            )));
        }
        let mut entries = Vec::with_capacity(count);
        for (k, want) in expected.iter().enumerate() {
            let at = FIXED_HEADER + TABLE_ENTRY * k;
            let id = ComponentId::from_code(bytes[at])?;
            if id != *want {
                return Err(BitstreamError::ComponentLayout(format!(
                    "component {k} is {id}, expected {want}"
                )));
            }
            entries.push((id, be32(at + 1) as usize));
        }
        let mut pos = table_end;
        let mut components = Vec::with_capacity(count);
        for (id, len) in entries {
            let end = pos
                .checked_add(len)
                .filter(|&e| e <= bytes.len())
                .ok_or_else(|| BitstreamError::Truncated(format!("component {id}")))?;
            components.push(Component {
                id,
                payload: bytes[pos..end].to_vec(),
            });
            pos = end;
        }
        if pos != bytes.len() {
            return Err(BitstreamError::TrailingBytes(bytes.len() - pos));
        }
        Ok(Self { header, components })
    }
}
