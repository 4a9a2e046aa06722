//! Multi-scale structural similarity.
//!
//! Each RGB channel is scored independently with an 11-tap Gaussian window
//! (σ = 1.5, valid region only) and the channel scores are averaged with
//! equal weights. Contrast·structure terms enter at every scale, luminance
//! only at the coarsest; scales are separated by a 2×2 mean and decimation.

use std::sync::atomic::{AtomicBool, Ordering};

use serde::Serialize;

use crate::imageio::PlanarImage;
use crate::util::kahan_sum;
use crate::{Error, Result};

static REDUCED_SCALES_WARNED: AtomicBool = AtomicBool::new(false);

/// Canonical five-scale exponents. They sum to 1.0001 as published and are
/// normalized by [`MsSsimConfig::default`].
pub const CANONICAL_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsSsimConfig {
    pub weights: Vec<f64>,
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for MsSsimConfig {
    fn default() -> Self {
        let total: f64 = CANONICAL_WEIGHTS.iter().sum();
        Self {
            weights: CANONICAL_WEIGHTS.iter().map(|w| w / total).collect(),
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl MsSsimConfig {
    pub fn scales(&self) -> usize {
        self.weights.len()
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// Scale count and renormalized weights usable for a `w`×`h` image.
    ///
    /// Requires `min(w, h) >= window · 2^(scales−1)`; otherwise coarser scales
    /// are dropped (with a warning) until it holds.
    pub fn effective_weights(&self, w: usize, h: usize) -> Result<Vec<f64>> {
        if self.weights.is_empty() {
            return Err(Error::InvalidConfig("ms-ssim needs at least one scale".into()));
        }
        let min_dim = w.min(h);
        if min_dim < self.window {
            return Err(Error::TooSmall(format!(
                "ms-ssim needs min dimension >= {}, got {w}x{h}",
                self.window
            )));
        }
        let mut scales = self.scales();
        while scales > 1 && min_dim < self.window << (scales - 1) {
            scales -= 1;
        }
        if scales < self.scales() && !REDUCED_SCALES_WARNED.swap(true, Ordering::Relaxed) {
            log::warn!(
                "ms-ssim: {w}x{h} image supports only {scales} of {} scales (reported once)",
                self.scales()
            );
        }
        let used = &self.weights[..scales];
        let total: f64 = used.iter().sum();
        Ok(used.iter().map(|w| w / total).collect())
    }

    fn kernel(&self) -> Vec<f64> {
        let half = (self.window / 2) as f64;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - half;
                (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }
}

/// Plane of `f64` samples with its dimensions.
#[derive(Debug, Clone)]
struct Plane {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Plane {
    fn from_f32(w: usize, h: usize, data: &[f32]) -> Self {
        Self {
            w,
            h,
            data: data.iter().map(|&v| v as f64).collect(),
        }
    }

    fn downsample(&self) -> Plane {
        let (w, h) = (self.w / 2, self.h / 2);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let i = 2 * y * self.w + 2 * x;
                let s = self.data[i] + self.data[i + 1] + self.data[i + self.w] + self.data[i + self.w + 1];
                data.push(s * 0.25);
            }
        }
        Plane { w, h, data }
    }

    /// Separable valid-mode filtering.
    fn filter_valid(&self, k: &[f64]) -> Plane {
        let n = k.len();
        let ow = self.w + 1 - n;
        let oh = self.h + 1 - n;
        let mut tmp = vec![0.0; ow * self.h];
        for y in 0..self.h {
            let row = &self.data[y * self.w..(y + 1) * self.w];
            for x in 0..ow {
                tmp[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
            }
        }
        let mut data = vec![0.0; ow * oh];
        for y in 0..oh {
            for x in 0..ow {
                data[y * ow + x] = (0..n).map(|j| k[j] * tmp[(y + j) * ow + x]).sum();
            }
        }
        Plane { w: ow, h: oh, data }
    }

    fn mul(&self, other: &Plane) -> Plane {
        Plane {
            w: self.w,
            h: self.h,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        }
    }
}

/// Mean luminance term and mean contrast·structure term at one scale.
fn ssim_terms(x: &Plane, y: &Plane, kernel: &[f64], c1: f64, c2: f64) -> (f64, f64) {
    let mu_x = x.filter_valid(kernel);
    let mu_y = y.filter_valid(kernel);
    let xx = x.mul(x).filter_valid(kernel);
    let yy = y.mul(y).filter_valid(kernel);
    let xy = x.mul(y).filter_valid(kernel);
    let n = mu_x.data.len();
    let mut lum = Vec::with_capacity(n);
    let mut cs = Vec::with_capacity(n);
    for i in 0..n {
        let (mx, my) = (mu_x.data[i], mu_y.data[i]);
        let vx = xx.data[i] - mx * mx;
        let vy = yy.data[i] - my * my;
        let cov = xy.data[i] - mx * my;
        lum.push((2.0 * mx * my + c1) / (mx * mx + my * my + c1));
        cs.push((2.0 * cov + c2) / (vx + vy + c2));
    }
    let l = kahan_sum(lum.iter().copied()) / n as f64;
    let c = kahan_sum(cs.iter().copied()) / n as f64;
    (l, c)
}

fn ms_ssim_plane(mut x: Plane, mut y: Plane, weights: &[f64], cfg: &MsSsimConfig) -> f64 {
    let kernel = cfg.kernel();
    let (c1, c2) = (cfg.c1(), cfg.c2());
    let mut value = 1.0;
    for (scale, &w) in weights.iter().enumerate() {
        let (l, cs) = ssim_terms(&x, &y, &kernel, c1, c2);
        let last = scale + 1 == weights.len();
        // negative terms would make the fractional power undefined
        let term = if last { (l * cs).max(0.0) } else { cs.max(0.0) };
        value *= term.powf(w);
        if !last {
            x = x.downsample();
            y = y.downsample();
        }
    }
    value
}

/// MS-SSIM of two images, averaged over the three channels with equal weight.
pub fn ms_ssim(x: &PlanarImage, y: &PlanarImage, cfg: &MsSsimConfig) -> Result<f64> {
    x.check_same_dims(y)?;
    if x.space() != y.space() {
        return Err(Error::WrongColorSpace {
            expected: x.space(),
            actual: y.space(),
        });
    }
    let weights = cfg.effective_weights(x.width(), x.height())?;
    let (w, h) = (x.width(), x.height());
    let per_channel: Vec<f64> = (0..3)
        .map(|c| {
            ms_ssim_plane(
                Plane::from_f32(w, h, x.plane(c)),
                Plane::from_f32(w, h, y.plane(c)),
                &weights,
                cfg,
            )
        })
        .collect();
    Ok(per_channel.iter().sum::<f64>() / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::ColorSpace;
    use crate::synth;

    #[test]
    fn weights_normalized() {
        let cfg = MsSsimConfig::default();
        assert!((cfg.weights.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert_eq!(cfg.scales(), 5);
    }

    #[test]
    fn scale_reduction() {
        let cfg = MsSsimConfig::default();
        assert_eq!(cfg.effective_weights(176, 200).unwrap().len(), 5);
        assert_eq!(cfg.effective_weights(175, 200).unwrap().len(), 4);
        assert_eq!(cfg.effective_weights(64, 64).unwrap().len(), 3);
        let w = cfg.effective_weights(11, 11).unwrap();
        assert_eq!(w, vec![1.0]);
        assert!(matches!(cfg.effective_weights(10, 64), Err(Error::TooSmall(_))));
    }

    #[test]
    fn self_similarity_is_one() {
        let img = synth::natural_image(3, 96, 80);
        let v = ms_ssim(&img, &img, &MsSsimConfig::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn constant_images_reduce_to_luminance_term() {
        let (a, b) = (0.3f64, 0.6f64);
        let x = PlanarImage::filled(200, 200, [a as f32; 3], ColorSpace::Srgb);
        let y = PlanarImage::filled(200, 200, [b as f32; 3], ColorSpace::Srgb);
        let cfg = MsSsimConfig::default();
        let got = ms_ssim(&x, &y, &cfg).unwrap();
        // scalar SSIM luminance formula, raised to the coarsest-scale exponent
        let (a, b) = (a as f32 as f64, b as f32 as f64);
        let c1 = 0.0001;
        let lum = (2.0 * a * b + c1) / (a * a + b * b + c1);
        let want = lum.powf(cfg.weights[4]);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn ordering_sanity() {
        let x = synth::natural_image(11, 192, 192);
        let inverted = x.map_pixels(ColorSpace::Srgb, |p| p.map(|v| 1.0 - v));
        let noisy = synth::add_noise(&x, 0.01, 5);
        let cfg = MsSsimConfig::default();
        let bad = ms_ssim(&x, &inverted, &cfg).unwrap();
        let good = ms_ssim(&x, &noisy, &cfg).unwrap();
        assert!(bad < good, "{bad} vs {good}");
        assert!((0.0..=1.0).contains(&bad) && (0.0..=1.0).contains(&good));
    }

    #[test]
    fn rejects_mismatch() {
        let x = PlanarImage::filled(20, 20, [0.0; 3], ColorSpace::Srgb);
        let y = PlanarImage::filled(21, 20, [0.0; 3], ColorSpace::Srgb);
        assert!(ms_ssim(&x, &y, &MsSsimConfig::default()).is_err());
        let tiny = PlanarImage::filled(8, 8, [0.0; 3], ColorSpace::Srgb);
        assert!(ms_ssim(&tiny, &tiny, &MsSsimConfig::default()).is_err());
    }
}
