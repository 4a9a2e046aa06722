//! Parameter and multiply-accumulate counts of convolutional layer stacks.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    Deconv,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_channels: u64,
    pub out_channels: u64,
    pub kernel_h: u64,
    pub kernel_w: u64,
    #[serde(default = "one")]
    pub stride: u64,
    /// Output resolution divisor relative to the source image.
    pub divisor: u64,
}

fn one() -> u64 {
    1
}

impl LayerSpec {
    pub fn conv(in_channels: u64, out_channels: u64, kernel: u64, divisor: u64) -> Self {
        Self {
            kind: LayerKind::Conv,
            in_channels,
            out_channels,
            kernel_h: kernel,
            kernel_w: kernel,
            stride: 1,
            divisor,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.divisor == 0 {
            return Err(Error::InvalidConfig("layer divisor must be positive".into()));
        }
        let fields = [self.in_channels, self.out_channels, self.kernel_h, self.kernel_w, self.stride];
        if fields.contains(&0) {
            return Err(Error::InvalidConfig(format!("layer fields must be positive: {self:?}")));
        }
        Ok(())
    }

    fn weights(&self) -> u64 {
        self.in_channels * self.out_channels * self.kernel_h * self.kernel_w
    }

    /// Weights plus one bias per output channel.
    pub fn params(&self) -> u64 {
        self.weights() + self.out_channels
    }

    /// Multiply-accumulates per source pixel.
    pub fn macs_per_pixel(&self) -> f64 {
        self.weights() as f64 / (self.divisor * self.divisor) as f64
    }
}

/// Architecture description as read from JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    #[serde(default)]
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complexity {
    pub params: u64,
    pub kmacs_per_pixel: f64,
}

pub fn complexity(layers: &[LayerSpec]) -> Result<Complexity> {
    if layers.is_empty() {
        return Err(Error::Empty("layer list".into()));
    }
    let mut params = 0u64;
    let mut macs = 0.0;
    for l in layers {
        l.validate()?;
        params += l.params();
        macs += l.macs_per_pixel();
    }
    Ok(Complexity {
        params,
        kmacs_per_pixel: macs / 1000.0,
    })
}
