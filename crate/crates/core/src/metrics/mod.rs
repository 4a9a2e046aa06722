//! Distortion metrics: MSE/PSNR, MS-SSIM and CIEDE2000.
//!
//! All sums run in row-major order with compensated summation, so results do
//! not depend on how callers parallelize across images.

mod ciede2000;
mod msssim;

pub use ciede2000::delta_e00;
pub use msssim::{ms_ssim, MsSsimConfig, CANONICAL_WEIGHTS};

use serde::{Deserialize, Serialize};

use crate::color;
use crate::imageio::{ColorSpace, PlanarImage};
use crate::util::{kahan_sum, KahanSum};
use crate::{Error, Result};

/// Reported value for PSNR and MS-SSIM dB when the error is exactly zero.
pub const DB_CAP: f64 = 100.0;

/// Offset turning ΔE00 into a higher-is-better quality score.
pub const CIEDE_QUALITY_OFFSET: f64 = 5.0;

fn check_pair(x: &PlanarImage, y: &PlanarImage) -> Result<()> {
    x.check_same_dims(y)?;
    if x.space() != y.space() {
        return Err(Error::WrongColorSpace {
            expected: x.space(),
            actual: y.space(),
        });
    }
    Ok(())
}

/// Mean squared error of one plane.
pub fn plane_mse(x: &[f32], y: &[f32]) -> f64 {
    let n = x.len() as f64;
    kahan_sum(x.iter().zip(y).map(|(&a, &b)| {
        let d = a as f64 - b as f64;
        d * d
    })) / n
}

/// MSE pooled over all 3·H·W samples.
pub fn mse(x: &PlanarImage, y: &PlanarImage) -> Result<f64> {
    check_pair(x, y)?;
    let mut acc = KahanSum::default();
    for c in 0..3 {
        for (&a, &b) in x.plane(c).iter().zip(y.plane(c)) {
            let d = a as f64 - b as f64;
            acc.add(d * d);
        }
    }
    Ok(acc.total() / (3 * x.len()) as f64)
}

/// `10·log10(peak² / mse)`; `+∞` for a zero error.
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

pub fn psnr(x: &PlanarImage, y: &PlanarImage, peak: f64) -> Result<f64> {
    Ok(psnr_from_mse(mse(x, y)?, peak))
}

pub fn psnr_per_channel(x: &PlanarImage, y: &PlanarImage, peak: f64) -> Result<[f64; 3]> {
    check_pair(x, y)?;
    Ok([0, 1, 2].map(|c| psnr_from_mse(plane_mse(x.plane(c), y.plane(c)), peak)))
}

/// Caps infinite or oversized dB values at [`DB_CAP`].
pub fn cap_db(v: f64) -> f64 {
    if v.is_nan() {
        v
    } else {
        v.min(DB_CAP)
    }
}

/// `−10·log10(1 − v)`, capped at [`DB_CAP`] when `v` reaches 1.
pub fn ms_ssim_db(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v >= 1.0 {
        return DB_CAP;
    }
    cap_db(-10.0 * (1.0 - v).log10())
}

pub fn ciede_quality(delta_e: f64) -> f64 {
    CIEDE_QUALITY_OFFSET - delta_e
}

fn to_lab(image: &PlanarImage) -> Result<PlanarImage> {
    match image.space() {
        ColorSpace::Lab => Ok(image.clone()),
        _ => color::convert(image, ColorSpace::Lab),
    }
}

/// Mean ΔE00 over all pixels. Non-LAB inputs are converted first.
pub fn ciede2000(x: &PlanarImage, y: &PlanarImage) -> Result<f64> {
    x.check_same_dims(y)?;
    let (lx, ly) = (to_lab(x)?, to_lab(y)?);
    let mut acc = KahanSum::default();
    for i in 0..lx.len() {
        let p = [0, 1, 2].map(|c| lx.plane(c)[i] as f64);
        let q = [0, 1, 2].map(|c| ly.plane(c)[i] as f64);
        acc.add(delta_e00(p, q));
    }
    Ok(acc.total() / lx.len() as f64)
}

/// Full metric suite for one (reference, distorted) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// RGB PSNR in dB, capped at 100.
    pub psnr_db: f64,
    pub psnr_r_db: f64,
    pub psnr_g_db: f64,
    pub psnr_b_db: f64,
    pub mse: f64,
    pub msssim: f64,
    pub msssim_db: f64,
    pub ciede2000: f64,
    /// `5.0 − ciede2000`.
    pub ciede_quality: f64,
}

impl MetricReport {
    pub fn compute(x: &PlanarImage, y: &PlanarImage) -> Result<Self> {
        Self::compute_with(x, y, &MsSsimConfig::default())
    }

    pub fn compute_with(x: &PlanarImage, y: &PlanarImage, cfg: &MsSsimConfig) -> Result<Self> {
        x.expect_space(ColorSpace::Srgb)?;
        y.expect_space(ColorSpace::Srgb)?;
        check_pair(x, y)?;
        let mse = mse(x, y)?;
        let per = psnr_per_channel(x, y, 1.0)?;
        let msssim = ms_ssim(x, y, cfg)?;
        let de = ciede2000(x, y)?;
        Ok(Self {
            psnr_db: cap_db(psnr_from_mse(mse, 1.0)),
            psnr_r_db: cap_db(per[0]),
            psnr_g_db: cap_db(per[1]),
            psnr_b_db: cap_db(per[2]),
            mse,
            msssim,
            msssim_db: ms_ssim_db(msssim),
            ciede2000: de,
            ciede_quality: ciede_quality(de),
        })
    }
}
