//! Latent-channel inspection: bit allocation ranking, impulse responses,
//! single-channel reconstructions and layer complexity counts.

mod complexity;

pub use complexity::{complexity, Architecture, Complexity, LayerKind, LayerSpec};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::codec::{
    chroma_channel_mask, operating_to_srgb_px, synthesis, to_operating_planes, Branch, CodecConfig, EncodeTrace,
    ImageLatents, LatentTensor,
};
use crate::imageio::{ColorSpace, PlanarImage};
use crate::util::KahanSum;
use crate::{Error, Result};

/// Side length of a rendered impulse patch.
pub const PATCH_SIZE: usize = 16;
/// Mosaic composition: luma and chroma patches in dual-branch mode.
pub const MOSAIC_LUMA: usize = 32;
pub const MOSAIC_CHROMA: usize = 16;
/// Patches in a single-branch mosaic.
pub const MOSAIC_SINGLE: usize = 48;
const MOSAIC_COLUMNS: usize = 8;
const MOSAIC_GAP: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRank {
    pub branch: Branch,
    pub channel: usize,
    pub bits: f64,
    /// 1 = most bits.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub channels: Vec<ChannelRank>,
    pub total_bits: f64,
}

impl ChannelReport {
    /// Highest-ranked channels of one branch, best first.
    pub fn top(&self, branch: Branch, n: usize) -> Vec<&ChannelRank> {
        self.channels.iter().filter(|c| c.branch == branch).take(n).collect()
    }

    pub fn find(&self, branch: Branch, channel: usize) -> Option<&ChannelRank> {
        self.channels.iter().find(|c| c.branch == branch && c.channel == channel)
    }

    /// CSV with columns `branch,channel,bits,rank`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["branch", "channel", "bits", "rank"])?;
        for c in &self.channels {
            w.write_record([
                c.branch.name().to_string(),
                c.channel.to_string(),
                format!("{:.6}", c.bits),
                c.rank.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Ranks coded channels by their ideal main-component bits.
///
/// Ties are broken by `(branch, channel)` ascending.
pub fn channel_bit_allocation(trace: &EncodeTrace) -> Result<ChannelReport> {
    if trace.channels.is_empty() {
        return Err(Error::Empty("encode trace has no channels".into()));
    }
    let mut channels: Vec<ChannelRank> = trace
        .channels
        .iter()
        .map(|c| ChannelRank {
            branch: c.branch,
            channel: c.channel,
            bits: c.ideal_bits,
            rank: 0,
        })
        .collect();
    let mut total = KahanSum::default();
    for c in &trace.channels {
        total.add(c.ideal_bits);
    }
    channels.sort_by(|a, b| {
        b.bits
            .total_cmp(&a.bits)
            .then(a.branch.cmp(&b.branch))
            .then(a.channel.cmp(&b.channel))
    });
    for (i, c) in channels.iter_mut().enumerate() {
        c.rank = i + 1;
    }
    Ok(ChannelReport {
        channels,
        total_bits: total.total(),
    })
}

/// Response of one latent channel, before display normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub branch: Branch,
    pub channel: usize,
    pub block: usize,
    /// `N×N` response in each operating-space plane (one plane is non-zero).
    pub operating: [Vec<f64>; 3],
    /// `N×N` sRGB change relative to a mid-gray background.
    pub srgb_delta: [Vec<f64>; 3],
}

impl ImpulseResponse {
    /// Inner product of the operating-space responses.
    pub fn dot(&self, other: &ImpulseResponse) -> f64 {
        self.operating
            .iter()
            .zip(&other.operating)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y))
            .sum()
    }

    /// `PATCH_SIZE²` display patch: `0.5 + r / (2·max|r|)`, nearest-neighbor upscaled.
    pub fn display_patch(&self) -> [Vec<f32>; 3] {
        let n = self.block;
        let peak = self
            .srgb_delta
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let mut out: [Vec<f32>; 3] = Default::default();
        for (c, plane) in out.iter_mut().enumerate() {
            *plane = (0..PATCH_SIZE * PATCH_SIZE)
                .map(|i| {
                    let (y, x) = (i / PATCH_SIZE, i % PATCH_SIZE);
                    let r = self.srgb_delta[c][(y * n / PATCH_SIZE) * n + x * n / PATCH_SIZE];
                    if peak > 0.0 {
                        (0.5 + r / (2.0 * peak)) as f32
                    } else {
                        0.5
                    }
                })
                .collect();
        }
        out
    }
}

/// Operating plane and subband addressed by a branch-wide channel index.
fn locate(cfg: &CodecConfig, branch: Branch, channel: usize) -> Result<(usize, usize)> {
    let n2 = cfg.channels_per_plane();
    let (planes, first_plane) = match (cfg.is_dual(), branch) {
        (true, Branch::Luma) => (1, 0),
        (true, Branch::Chroma) => (2, 1),
        (false, Branch::Rgb) => (3, 0),
        _ => {
            return Err(Error::InvalidConfig(format!(
                "branch {branch} does not exist in {} mode",
                cfg.space.name()
            )))
        }
    };
    if channel >= planes * n2 {
        return Err(Error::InvalidConfig(format!(
            "channel {channel} out of range for the {branch} branch (0..{})",
            planes * n2
        )));
    }
    let subband = channel % n2;
    if branch == Branch::Chroma && !chroma_channel_mask(cfg.block, cfg.chroma_channels)?.contains(&subband) {
        return Err(Error::InvalidConfig(format!(
            "chroma subband {subband} is not kept with {} channels",
            cfg.chroma_channels
        )));
    }
    Ok((first_plane + channel / n2, subband))
}

/// Synthesizes a single-block impulse of `amplitude` in one latent channel.
pub fn impulse_response(cfg: &CodecConfig, branch: Branch, channel: usize, amplitude: f64) -> Result<ImpulseResponse> {
    cfg.validate()?;
    let (plane, subband) = locate(cfg, branch, channel)?;
    let n = cfg.block;
    let mut latent = LatentTensor::zeros(branch, n, n, n, 1);
    latent.channel_mut(0, subband)[0] = amplitude;
    let response: Vec<f64> = synthesis(&latent).remove(0).into_iter().map(f64::from).collect();
    let mut operating: [Vec<f64>; 3] = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
    operating[plane] = response;

    let gray = PlanarImage::filled(1, 1, [0.5; 3], ColorSpace::Srgb);
    let bg = to_operating_planes(&gray, cfg.space)?.map(|p| p[0] as f64);
    let bg_rgb = operating_to_srgb_px(cfg.space, bg);
    let mut srgb_delta: [Vec<f64>; 3] = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
    for i in 0..n * n {
        let px = [bg[0] + operating[0][i], bg[1] + operating[1][i], bg[2] + operating[2][i]];
        let rgb = operating_to_srgb_px(cfg.space, px);
        for c in 0..3 {
            srgb_delta[c][i] = rgb[c] - bg_rgb[c];
        }
    }
    Ok(ImpulseResponse {
        branch,
        channel,
        block: n,
        operating,
        srgb_delta,
    })
}

/// Tiles display patches row-major, [`MOSAIC_COLUMNS`] per row.
pub fn mosaic(responses: &[ImpulseResponse]) -> Result<PlanarImage> {
    if responses.is_empty() {
        return Err(Error::Empty("no impulse responses to tile".into()));
    }
    let cols = MOSAIC_COLUMNS.min(responses.len());
    let rows = responses.len().div_ceil(cols);
    let cell = PATCH_SIZE + MOSAIC_GAP;
    let (w, h) = (cols * cell + MOSAIC_GAP, rows * cell + MOSAIC_GAP);
    let mut planes: [Vec<f32>; 3] = [vec![1.0; w * h], vec![1.0; w * h], vec![1.0; w * h]];
    for (i, r) in responses.iter().enumerate() {
        let patch = r.display_patch();
        let (ox, oy) = (MOSAIC_GAP + (i % cols) * cell, MOSAIC_GAP + (i / cols) * cell);
        for c in 0..3 {
            for y in 0..PATCH_SIZE {
                for x in 0..PATCH_SIZE {
                    planes[c][(oy + y) * w + ox + x] = patch[c][y * PATCH_SIZE + x];
                }
            }
        }
    }
    PlanarImage::new(w, h, planes, ColorSpace::Srgb)
}

/// Channels shown in a mosaic: the 32 luma + 16 chroma (dual) or 48
/// (single) highest-ranked channels.
pub fn mosaic_channels(cfg: &CodecConfig, report: &ChannelReport) -> Vec<(Branch, usize)> {
    let pick = |b: Branch, n: usize| report.top(b, n).into_iter().map(move |c| (b, c.channel));
    if cfg.is_dual() {
        pick(Branch::Luma, MOSAIC_LUMA).chain(pick(Branch::Chroma, MOSAIC_CHROMA)).collect()
    } else {
        pick(Branch::Rgb, MOSAIC_SINGLE).collect()
    }
}

/// Impulse-response mosaic of the highest-ranked channels.
pub fn impulse_mosaic(cfg: &CodecConfig, report: &ChannelReport, amplitude: f64) -> Result<PlanarImage> {
    let responses = mosaic_channels(cfg, report)
        .into_iter()
        .map(|(b, c)| impulse_response(cfg, b, c, amplitude))
        .collect::<Result<Vec<_>>>()?;
    mosaic(&responses)
}

/// Synthesis from subband `k` alone (in every plane), converted to sRGB.
pub fn single_channel_reconstruction(latents: &ImageLatents, k: usize) -> Result<PlanarImage> {
    let n2 = latents.branches.first().map_or(0, |b| b.channels());
    if k >= n2 {
        return Err(Error::InvalidConfig(format!("subband {k} out of range (0..{n2})")));
    }
    latents.keep_only(k).to_image()
}
