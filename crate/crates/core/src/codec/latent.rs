//! Block-transform latents: every DCT frequency of every plane is one channel.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dct::Dct;
use crate::{Error, Result};

/// Which side of the codec a latent belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Luma,
    Chroma,
    Rgb,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Luma => "luma",
            Branch::Chroma => "chroma",
            Branch::Rgb => "rgb",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "luma" => Ok(Branch::Luma),
            "chroma" => Ok(Branch::Chroma),
            "rgb" => Ok(Branch::Rgb),
            other => Err(Error::InvalidConfig(format!("unknown branch {other:?}"))),
        }
    }
}

/// Transform coefficients of one branch, grouped by frequency.
///
/// For each plane, channel `c` is the grid of coefficient `(c / N, c % N)`
/// over all `rows × cols` blocks in raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTensor {
    pub branch: Branch,
    block: usize,
    width: usize,
    height: usize,
    cols: usize,
    rows: usize,
    planes: Vec<Vec<f64>>,
}

impl LatentTensor {
    /// All-zero latent for `plane_count` planes of a `width × height` source.
    pub fn zeros(branch: Branch, block: usize, width: usize, height: usize, plane_count: usize) -> Self {
        let cols = width.div_ceil(block);
        let rows = height.div_ceil(block);
        Self {
            branch,
            block,
            width,
            height,
            cols,
            rows,
            planes: vec![vec![0.0; block * block * cols * rows]; plane_count],
        }
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn channels(&self) -> usize {
        self.block * self.block
    }

    pub fn plane_count(&self) -> usize {
        self.planes.len()
    }

    /// Source plane dimensions `(width, height)`.
    pub fn source_dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Block grid dimensions `(cols, rows)`.
    pub fn grid(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    pub fn blocks(&self) -> usize {
        self.cols * self.rows
    }

    pub fn channel(&self, plane: usize, channel: usize) -> &[f64] {
        let b = self.blocks();
        &self.planes[plane][channel * b..(channel + 1) * b]
    }

    pub fn channel_mut(&mut self, plane: usize, channel: usize) -> &mut [f64] {
        let b = self.blocks();
        &mut self.planes[plane][channel * b..(channel + 1) * b]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.block == other.block
            && self.width == other.width
            && self.height == other.height
            && self.planes.len() == other.planes.len()
    }

    /// Element-wise sum of two latents of the same shape.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(Error::InvalidConfig("latent shapes differ".into()));
        }
        let mut out = self.clone();
        for (p, q) in out.planes.iter_mut().zip(&other.planes) {
            for (a, b) in p.iter_mut().zip(q) {
                *a += b;
            }
        }
        Ok(out)
    }

    /// Copy with every channel outside `keep` set to zero.
    pub fn keep_channels(&self, keep: &[usize]) -> Self {
        let mut out = self.clone();
        for p in 0..out.plane_count() {
            for c in 0..out.channels() {
                if !keep.contains(&c) {
                    out.channel_mut(p, c).fill(0.0);
                }
            }
        }
        out
    }

    /// Sum of squares of one channel.
    pub fn channel_energy(&self, plane: usize, channel: usize) -> f64 {
        self.channel(plane, channel).iter().map(|v| v * v).sum()
    }
}

/// Forward block DCT of each plane; edges are padded by replication.
pub fn analysis(planes: &[&[f32]], width: usize, height: usize, block: usize, branch: Branch) -> Result<LatentTensor> {
    if width == 0 || height == 0 {
        return Err(Error::TooSmall(format!("{width}x{height} plane")));
    }
    if block == 0 {
        return Err(Error::InvalidConfig("block size must be positive".into()));
    }
    for p in planes {
        if p.len() != width * height {
            return Err(Error::InvalidConfig(format!(
                "plane has {} samples, expected {}",
                p.len(),
                width * height
            )));
        }
    }
    let dct = Dct::new(block);
    let mut latent = LatentTensor::zeros(branch, block, width, height, planes.len());
    let n = block;
    let nb = latent.blocks();
    let mut buf = vec![0.0; n * n];
    let mut coeffs = vec![0.0; n * n];
    for (pi, plane) in planes.iter().enumerate() {
        for by in 0..latent.rows {
            for bx in 0..latent.cols {
                for y in 0..n {
                    let sy = (by * n + y).min(height - 1);
                    for x in 0..n {
                        let sx = (bx * n + x).min(width - 1);
                        buf[y * n + x] = plane[sy * width + sx] as f64;
                    }
                }
                dct.forward(&buf, &mut coeffs);
                let bi = by * latent.cols + bx;
                for (c, &v) in coeffs.iter().enumerate() {
                    latent.planes[pi][c * nb + bi] = v;
                }
            }
        }
    }
    Ok(latent)
}

/// Inverse block DCT, cropped to the source dimensions.
pub fn synthesis(latent: &LatentTensor) -> Vec<Vec<f32>> {
    synthesis_f64(latent)
        .into_iter()
        .map(|p| p.into_iter().map(|v| v as f32).collect())
        .collect()
}

pub(crate) fn synthesis_f64(latent: &LatentTensor) -> Vec<Vec<f64>> {
    let n = latent.block;
    let dct = Dct::new(n);
    let nb = latent.blocks();
    let (w, h) = (latent.width, latent.height);
    let mut coeffs = vec![0.0; n * n];
    let mut buf = vec![0.0; n * n];
    let mut out = Vec::with_capacity(latent.plane_count());
    for plane in &latent.planes {
        let mut img = vec![0.0; w * h];
        for by in 0..latent.rows {
            for bx in 0..latent.cols {
                let bi = by * latent.cols + bx;
                for (c, slot) in coeffs.iter_mut().enumerate() {
                    *slot = plane[c * nb + bi];
                }
                dct.inverse(&coeffs, &mut buf);
                for y in 0..n {
                    let sy = by * n + y;
                    if sy >= h {
                        break;
                    }
                    for x in 0..n {
                        let sx = bx * n + x;
                        if sx >= w {
                            break;
                        }
                        img[sy * w + sx] = buf[y * n + x];
                    }
                }
            }
        }
        out.push(img);
    }
    out
}

/// Integer symbols of one latent channel set plus the step that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedLatent {
    pub branch: Branch,
    pub step: f64,
    block: usize,
    width: usize,
    height: usize,
    planes: Vec<Vec<i32>>,
}

impl QuantizedLatent {
    pub fn symbols(&self, plane: usize, channel: usize) -> &[i32] {
        let b = self.blocks();
        &self.planes[plane][channel * b..(channel + 1) * b]
    }

    pub(crate) fn symbols_mut(&mut self, plane: usize, channel: usize) -> &mut [i32] {
        let b = self.blocks();
        &mut self.planes[plane][channel * b..(channel + 1) * b]
    }

    pub fn blocks(&self) -> usize {
        self.width.div_ceil(self.block) * self.height.div_ceil(self.block)
    }

    pub fn plane_count(&self) -> usize {
        self.planes.len()
    }

    pub fn channels(&self) -> usize {
        self.block * self.block
    }

    pub(crate) fn zeros(branch: Branch, step: f64, block: usize, width: usize, height: usize, planes: usize) -> Self {
        let n = block * block * width.div_ceil(block) * height.div_ceil(block);
        Self {
            branch,
            step,
            block,
            width,
            height,
            planes: vec![vec![0; n]; planes],
        }
    }

    /// `symbol · step` for every coefficient.
    pub fn dequantize(&self) -> LatentTensor {
        let mut out = LatentTensor::zeros(self.branch, self.block, self.width, self.height, self.planes.len());
        for (dst, src) in out.planes.iter_mut().zip(&self.planes) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = s as f64 * self.step;
            }
        }
        out
    }
}

/// Uniform scalar quantization, rounding half away from zero.
pub fn quantize(latent: &LatentTensor, step: f64) -> Result<QuantizedLatent> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidConfig(format!("quantization step must be > 0, got {step}")));
    }
    let planes = latent
        .planes
        .iter()
        .map(|p| {
            p.iter()
                .map(|&v| {
                    let q = (v / step).round();
                    if q.abs() > i32::MAX as f64 {
                        Err(Error::InvalidConfig(format!("coefficient {v} overflows at step {step}")))
                    } else {
                        Ok(q as i32)
                    }
                })
                .collect::<Result<Vec<i32>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QuantizedLatent {
        branch: latent.branch,
        step,
        block: latent.block,
        width: latent.width,
        height: latent.height,
        planes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_plane(seed: u64, w: usize, h: usize) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..w * h).map(|_| rng.gen::<f32>()).collect()
    }

    #[test]
    fn constant_plane_is_dc_only() {
        let p = vec![0.25f32; 24 * 16];
        let l = analysis(&[&p], 24, 16, 8, Branch::Luma).unwrap();
        assert_eq!(l.grid(), (3, 2));
        assert!(l.channel(0, 0).iter().all(|&v| (v - 8.0 * 0.25).abs() < 1e-9));
        for c in 1..64 {
            assert!(l.channel(0, c).iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn roundtrip_random_plane() {
        let p = random_plane(1, 16, 16);
        let l = analysis(&[&p], 16, 16, 8, Branch::Luma).unwrap();
        let back = synthesis(&l);
        for (a, b) in p.iter().zip(&back[0]) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn odd_sizes_replicate_edges() {
        let p = random_plane(2, 13, 10);
        let l = analysis(&[&p], 13, 10, 8, Branch::Chroma).unwrap();
        assert_eq!(l.grid(), (2, 2));
        let back = synthesis(&l);
        assert_eq!(back[0].len(), 130);
        for (a, b) in p.iter().zip(&back[0]) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn synthesis_examples() {
        let zero = LatentTensor::zeros(Branch::Rgb, 8, 16, 16, 3);
        assert!(synthesis(&zero).iter().flatten().all(|&v| v == 0.0));
        let mut dc = zero.clone();
        dc.channel_mut(1, 0).fill(8.0 * 0.7);
        let img = synthesis(&dc);
        assert!(img[1].iter().all(|&v| (v - 0.7).abs() < 1e-6));
        assert!(img[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn synthesis_is_linear() {
        let a = analysis(&[&random_plane(3, 16, 8)], 16, 8, 8, Branch::Luma).unwrap();
        let b = analysis(&[&random_plane(4, 16, 8)], 16, 8, 8, Branch::Luma).unwrap();
        let sum = synthesis(&a.add(&b).unwrap());
        let (sa, sb) = (synthesis(&a), synthesis(&b));
        for i in 0..sum[0].len() {
            assert!((sum[0][i] - sa[0][i] - sb[0][i]).abs() < 1e-6);
        }
    }

    #[test]
    fn quantization_error_bound() {
        let p = random_plane(5, 16, 16);
        let l = analysis(&[&p], 16, 16, 8, Branch::Luma).unwrap();
        let step = 0.13;
        let q = quantize(&l, step).unwrap();
        let d = q.dequantize();
        for c in 0..64 {
            for (a, b) in l.channel(0, c).iter().zip(d.channel(0, c)) {
                assert!((a - b).abs() <= step / 2.0 + 1e-12);
            }
        }
        assert!(quantize(&l, 0.0).is_err());
    }

    #[test]
    fn rounds_half_away_from_zero() {
        let mut l = LatentTensor::zeros(Branch::Luma, 1, 4, 1, 1);
        l.channel_mut(0, 0).copy_from_slice(&[0.5, -0.5, 1.5, -2.5]);
        let q = quantize(&l, 1.0).unwrap();
        assert_eq!(q.symbols(0, 0), &[1, -1, 2, -3]);
    }
}
