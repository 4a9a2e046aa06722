//! Color-space and rate-distortion evaluation toolkit for learned image
//! compression experiments.
//!
//! The crate bundles the pieces needed to compare codecs operating in RGB,
//! YUV and CIELAB:
//!
//! - [`imageio`]: PPM/PNG ingestion into normalized planar images.
//! - [`color`]: sRGB, linear RGB, YUV (BT.709, full range) and CIELAB (D65).
//! - [`metrics`]: PSNR, MS-SSIM and CIEDE2000.
//! - [`rdo`]: the composite rate + MSE + MS-SSIM + ΔE00 objective.
//! - [`entropy`]: a 32-bit range coder with static and Gaussian-conditional models.
//! - [`codec`]: a block-DCT surrogate codec with single-branch (RGB) and
//!   luma/chroma dual-branch topologies.
//! - [`analysis`]: channel bit allocation, impulse responses, complexity counts.
//! - [`bd`]: Bjøntegaard delta rate and distortion.
//! - [`cli`]: the `chromabench` command-line harness.

pub mod analysis;
pub mod bd;
pub mod cli;
pub mod codec;
pub mod color;
pub mod entropy;
mod error;
pub mod imageio;
pub mod metrics;
pub mod plot;
pub mod rdo;
pub mod report;
pub mod synth;
mod util;

pub use error::{Error, Result};
pub use imageio::{ColorSpace, PlanarImage};
