use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::imageio::ColorSpace;
use crate::{Error, Result};

pub const DEFAULT_BLOCK: usize = 8;
/// Luma quantization steps of q1..q4 on a [0,1] sample scale.
pub const LUMA_STEPS: [f64; 4] = [64.0 / 255.0, 32.0 / 255.0, 16.0 / 255.0, 8.0 / 255.0];
/// Chroma step relative to the luma step in dual-branch mode.
pub const CHROMA_STEP_FACTOR: f64 = 2.0;
/// Step of the log2-domain scale quantizer.
pub const DEFAULT_SIDE_STEP: f64 = 0.25;
/// Chroma channel counts of the channel-reduction study.
pub const CHROMA_CHANNEL_CHOICES: [usize; 4] = [64, 32, 16, 8];

const MAX_BLOCK: usize = 15;
const SIDE_STEP_RANGE: (f64, f64) = (0.01, 4.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatingPoint {
    Q1,
    Q2,
    Q3,
    Q4,
    Custom,
}

impl OperatingPoint {
    pub const PRESETS: [OperatingPoint; 4] = [Self::Q1, Self::Q2, Self::Q3, Self::Q4];

    /// Header code: 1..=4 for q1..q4, 0 for custom steps.
    pub fn code(self) -> u8 {
        match self {
            Self::Custom => 0,
            Self::Q1 => 1,
            Self::Q2 => 2,
            Self::Q3 => 3,
            Self::Q4 => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::Custom),
            1 => Some(Self::Q1),
            2 => Some(Self::Q2),
            3 => Some(Self::Q3),
            4 => Some(Self::Q4),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Q1 => "q1",
            Self::Q2 => "q2",
            Self::Q3 => "q3",
            Self::Q4 => "q4",
            Self::Custom => "custom",
        }
    }

    fn luma_step(self) -> Option<f64> {
        match self {
            Self::Custom => None,
            p => Some(LUMA_STEPS[p.code() as usize - 1]),
        }
    }
}

impl fmt::Display for OperatingPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for OperatingPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "q1" => Ok(Self::Q1),
            "q2" => Ok(Self::Q2),
            "q3" => Ok(Self::Q3),
            "q4" => Ok(Self::Q4),
            "custom" => Ok(Self::Custom),
            other => Err(Error::InvalidConfig(format!("unknown operating point {other:?} (expected q1..q4)"))),
        }
    }
}

/// Quantization steps: luma (or RGB) coefficients, chroma coefficients and
/// the log2-domain step of the transmitted scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantSteps {
    pub luma: f64,
    pub chroma: f64,
    pub side: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    /// `Srgb` selects the single-branch codec; `Yuv` and `Lab` the dual-branch one.
    pub space: ColorSpace,
    pub block: usize,
    pub chroma_channels: usize,
    pub steps: QuantSteps,
    pub operating_point: OperatingPoint,
}

impl CodecConfig {
    /// Frozen q1..q4 configuration with all chroma channels kept.
    pub fn preset(space: ColorSpace, point: OperatingPoint) -> Result<Self> {
        let luma = point
            .luma_step()
            .ok_or_else(|| Error::InvalidConfig("custom operating point has no preset steps".into()))?;
        let chroma = if space == ColorSpace::Srgb { luma } else { luma * CHROMA_STEP_FACTOR };
        let cfg = Self {
            space,
            block: DEFAULT_BLOCK,
            chroma_channels: DEFAULT_BLOCK * DEFAULT_BLOCK,
            steps: QuantSteps {
                luma,
                chroma,
                side: DEFAULT_SIDE_STEP,
            },
            operating_point: point,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration with explicit steps.
    pub fn custom(space: ColorSpace, block: usize, chroma_channels: usize, steps: QuantSteps) -> Result<Self> {
        let cfg = Self {
            space,
            block,
            chroma_channels,
            steps,
            operating_point: OperatingPoint::Custom,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_chroma_channels(mut self, c: usize) -> Result<Self> {
        self.chroma_channels = c;
        self.validate()?;
        Ok(self)
    }

    pub fn is_dual(&self) -> bool {
        self.space != ColorSpace::Srgb
    }

    pub fn channels_per_plane(&self) -> usize {
        self.block * self.block
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.space, ColorSpace::Srgb | ColorSpace::Yuv | ColorSpace::Lab) {
            return Err(Error::InvalidConfig(format!(
                "codec operates in srgb, yuv or lab, not {}",
                self.space.name()
            )));
        }
        if self.block < 1 || self.block > MAX_BLOCK {
            return Err(Error::InvalidConfig(format!("block size must be in 1..={MAX_BLOCK}, got {}", self.block)));
        }
        let n2 = self.channels_per_plane();
        if self.chroma_channels < 1 || self.chroma_channels > n2 {
            return Err(Error::InvalidConfig(format!(
                "chroma channels must be in 1..={n2}, got {}",
                self.chroma_channels
            )));
        }
        let QuantSteps { luma, chroma, side } = self.steps;
        for (name, s) in [("luma", luma), ("chroma", chroma)] {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} step must be > 0, got {s}")));
            }
        }
        if !(side >= SIDE_STEP_RANGE.0 && side <= SIDE_STEP_RANGE.1) {
            return Err(Error::InvalidConfig(format!(
                "side step must be in [{}, {}], got {side}",
                SIDE_STEP_RANGE.0, SIDE_STEP_RANGE.1
            )));
        }
        if !self.is_dual() {
            if self.chroma_channels != n2 {
                return Err(Error::InvalidConfig("single-branch mode keeps every channel".into()));
            }
            if luma != chroma {
                return Err(Error::InvalidConfig("single-branch mode uses one uniform step".into()));
            }
        }
        if let Some(step) = self.operating_point.luma_step() {
            let want_chroma = if self.is_dual() { step * CHROMA_STEP_FACTOR } else { step };
            if luma != step || chroma != want_chroma || side != DEFAULT_SIDE_STEP {
                return Err(Error::InvalidConfig(format!(
                    "steps do not match operating point {}",
                    self.operating_point
                )));
            }
        }
        Ok(())
    }
}
