//! Block-DCT surrogate codec with single-branch (RGB) and dual-branch
//! (luma/chroma) topologies.
//!
//! Each N×N DCT frequency of each plane acts as one latent channel. Channels
//! are quantized with a uniform step, each coded channel gets a zero-mean
//! Gaussian scale (plus a mean for DC) transmitted as side information, and
//! symbols are range coded under those Gaussians. A dual-branch stream holds
//! four components (luma side/main, chroma side/main), a single-branch stream
//! two (side, main).
//!
//! The 64 luma subbands, up to 64 subbands per chroma plane and 192 RGB
//! subbands stand in for learned latent channels; they are an analogy, not a
//! learned transform.

mod bitstream;
mod config;
mod dct;
mod latent;

pub use bitstream::{Bitstream, BitstreamError, Component, ComponentId, Header, MAGIC, VERSION};
pub use config::{
    CodecConfig, OperatingPoint, QuantSteps, CHROMA_CHANNEL_CHOICES, CHROMA_STEP_FACTOR, DEFAULT_BLOCK,
    DEFAULT_SIDE_STEP, LUMA_STEPS,
};
pub use dct::{chroma_channel_mask, zigzag_order, Dct};
pub use latent::{analysis, quantize, synthesis, Branch, LatentTensor, QuantizedLatent};

use serde::{Deserialize, Serialize};

use crate::color;
use crate::entropy::{
    decode_raw_u32, encode_raw_u32, CdfTable, GaussianModel, GaussianParams, RangeDecoder, RangeEncoder, SIGMA_MAX,
    SIGMA_MIN,
};
use crate::imageio::{ColorSpace, PlanarImage};
use crate::util::KahanSum;
use crate::{Error, Result};

/// Bytes of the two big-endian f64 steps that open every side payload.
const SIDE_PREFIX: usize = 16;

/// Converts an sRGB image to the codec's planes for `space`.
///
/// YUV chroma stays centered on zero; LAB is rescaled to nominal [0,1] as
/// `L/100, (a+128)/255, (b+128)/255`.
pub fn to_operating_planes(image: &PlanarImage, space: ColorSpace) -> Result<[Vec<f32>; 3]> {
    image.expect_space(ColorSpace::Srgb)?;
    let converted = match space {
        ColorSpace::Srgb => return Ok(image.planes().clone()),
        ColorSpace::Yuv => image.map_pixels(ColorSpace::Yuv, color::rgb_to_yuv_px),
        ColorSpace::Lab => image.map_pixels(ColorSpace::Lab, |p| lab_to_nominal(color::rgb_to_lab_px(p))),
        ColorSpace::LinearRgb => {
            return Err(Error::InvalidConfig("the codec does not operate in linear RGB".into()));
        }
    };
    Ok(converted.into_planes())
}

fn lab_to_nominal(lab: [f64; 3]) -> [f64; 3] {
    [lab[0] / 100.0, (lab[1] + 128.0) / 255.0, (lab[2] + 128.0) / 255.0]
}

fn nominal_to_lab(p: [f64; 3]) -> [f64; 3] {
    [p[0] * 100.0, p[1] * 255.0 - 128.0, p[2] * 255.0 - 128.0]
}

/// Operating-space sample triple to sRGB, without clamping.
pub fn operating_to_srgb_px(space: ColorSpace, p: [f64; 3]) -> [f64; 3] {
    match space {
        ColorSpace::Yuv => color::yuv_to_rgb_px(p),
        ColorSpace::Lab => color::lab_to_rgb_px_unclamped(nominal_to_lab(p)),
        ColorSpace::LinearRgb => p.map(color::linear_to_srgb_sample),
        ColorSpace::Srgb => p,
    }
}

/// Assembles operating-space planes into an sRGB image, clamped to [0,1].
pub fn from_operating_planes(space: ColorSpace, width: usize, height: usize, planes: &[Vec<f64>]) -> Result<PlanarImage> {
    if planes.len() != 3 || planes.iter().any(|p| p.len() != width * height) {
        return Err(Error::InvalidConfig("expected three planes of matching size".into()));
    }
    let n = width * height;
    let mut out: [Vec<f32>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let rgb = operating_to_srgb_px(space, [planes[0][i], planes[1][i], planes[2][i]]);
        for c in 0..3 {
            let v = rgb[c];
            out[c][i] = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) } as f32;
        }
    }
    PlanarImage::new(width, height, out, ColorSpace::Srgb)
}

/// Latents of a whole image: one tensor per branch.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageLatents {
    pub space: ColorSpace,
    pub width: usize,
    pub height: usize,
    /// `[luma, chroma]` in dual-branch mode, `[rgb]` otherwise.
    pub branches: Vec<LatentTensor>,
}

impl ImageLatents {
    /// Unquantized analysis of `image` under `cfg` (chroma mask applied).
    pub fn analyze(image: &PlanarImage, cfg: &CodecConfig) -> Result<Self> {
        cfg.validate()?;
        let planes = to_operating_planes(image, cfg.space)?;
        let (w, h) = (image.width(), image.height());
        let branches = if cfg.is_dual() {
            let luma = analysis(&[&planes[0]], w, h, cfg.block, Branch::Luma)?;
            let chroma = analysis(&[&planes[1], &planes[2]], w, h, cfg.block, Branch::Chroma)?;
            let mask = chroma_channel_mask(cfg.block, cfg.chroma_channels)?;
            vec![luma, chroma.keep_channels(&mask)]
        } else {
            vec![analysis(&[&planes[0], &planes[1], &planes[2]], w, h, cfg.block, Branch::Rgb)?]
        };
        Ok(Self {
            space: cfg.space,
            width: w,
            height: h,
            branches,
        })
    }

    /// Operating-space planes after synthesis.
    pub fn synthesize_planes(&self) -> Vec<Vec<f64>> {
        self.branches.iter().flat_map(latent::synthesis_f64).collect()
    }

    /// Synthesized and converted to a clamped sRGB image.
    pub fn to_image(&self) -> Result<PlanarImage> {
        from_operating_planes(self.space, self.width, self.height, &self.synthesize_planes())
    }

    /// Copy keeping only subband `channel` in every plane of every branch.
    pub fn keep_only(&self, channel: usize) -> Self {
        Self {
            branches: self.branches.iter().map(|b| b.keep_channels(&[channel])).collect(),
            ..self.clone()
        }
    }

    pub fn branch(&self, branch: Branch) -> Option<&LatentTensor> {
        self.branches.iter().find(|b| b.branch == branch)
    }
}

/// Ideal cost of one coded channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTrace {
    pub branch: Branch,
    pub plane: usize,
    /// Subband index within the plane.
    pub subband: usize,
    /// Branch-wide channel index: `plane · N² + subband`.
    pub channel: usize,
    pub symbols: usize,
    pub ideal_bits: f64,
    pub sigma: f64,
    pub mean: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTrace {
    pub id: ComponentId,
    pub bytes: usize,
    pub ideal_bits: f64,
}

/// Per-component and per-channel rate accounting of one encode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeTrace {
    pub width: usize,
    pub height: usize,
    pub components: Vec<ComponentTrace>,
    pub channels: Vec<ChannelTrace>,
}

impl EncodeTrace {
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    /// Actual payload bits (header excluded).
    pub fn total_bits(&self) -> usize {
        self.components.iter().map(|c| c.bytes * 8).sum()
    }

    pub fn bpp(&self) -> f64 {
        self.total_bits() as f64 / self.pixels() as f64
    }

    pub fn component(&self, id: ComponentId) -> Option<&ComponentTrace> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn component_bpp(&self, id: ComponentId) -> f64 {
        self.component(id).map_or(0.0, |c| (c.bytes * 8) as f64 / self.pixels() as f64)
    }
}

#[derive(Debug, Clone)]
pub struct Encoded {
    pub bitstream: Bitstream,
    pub trace: EncodeTrace,
    /// Quantized latents in branch order.
    pub latents: Vec<QuantizedLatent>,
}

impl Encoded {
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bitstream.to_bytes()
    }
}

/// Inclusive index range of the log2-domain scale quantizer.
fn sigma_index_range(side_step: f64) -> (i32, i32) {
    let lo = (libm::log2(SIGMA_MIN) / side_step).ceil() as i32;
    let hi = (libm::log2(SIGMA_MAX) / side_step).floor() as i32;
    (lo, hi)
}

fn sigma_table(side_step: f64) -> Result<CdfTable> {
    let (lo, hi) = sigma_index_range(side_step);
    Ok(CdfTable::uniform((hi - lo + 1) as usize, lo)?)
}

fn sigma_from_index(k: i32, side_step: f64) -> f64 {
    libm::exp2(k as f64 * side_step)
}

fn sigma_index(sigma: f64, side_step: f64) -> i32 {
    let (lo, hi) = sigma_index_range(side_step);
    if !(sigma > 0.0) {
        return lo;
    }
    ((libm::log2(sigma) / side_step).round() as i32).clamp(lo, hi)
}

/// `round(sum / n)` with ties away from zero, in integers.
fn rounded_mean(values: &[i32]) -> i32 {
    let n = values.len() as i64;
    let sum: i64 = values.iter().map(|&v| v as i64).sum();
    let q = (2 * sum.abs() + n) / (2 * n);
    (sum.signum() * q) as i32
}

fn zigzag_encode(v: i32) -> u32 {
    ((v << 1) ^ (v >> 31)) as u32
}

fn zigzag_decode(u: u32) -> i32 {
    ((u >> 1) as i32) ^ -((u & 1) as i32)
}

/// Maximum-likelihood scale of `values` around `mean`.
fn fit_sigma(values: &[i32], mean: i32) -> f64 {
    let mut acc = KahanSum::default();
    for &v in values {
        let d = v as f64 - mean as f64;
        acc.add(d * d);
    }
    (acc.total() / values.len() as f64).sqrt()
}

/// Scale and mean of one channel as transmitted.
#[derive(Debug, Clone, Copy)]
struct ChannelParams {
    sigma_index: i32,
    mean: i32,
}

fn coded_channels(cfg_block: usize, branch: Branch, chroma_channels: usize) -> Result<Vec<usize>> {
    let mut keep = if branch == Branch::Chroma {
        chroma_channel_mask(cfg_block, chroma_channels)?
    } else {
        (0..cfg_block * cfg_block).collect()
    };
    keep.sort_unstable();
    Ok(keep)
}

fn side_and_main_ids(branch: Branch) -> (ComponentId, ComponentId) {
    match branch {
        Branch::Luma => (ComponentId::LumaSide, ComponentId::LumaMain),
        Branch::Chroma => (ComponentId::ChromaSide, ComponentId::ChromaMain),
        Branch::Rgb => (ComponentId::RgbSide, ComponentId::RgbMain),
    }
}

struct BranchOutput {
    side: Vec<u8>,
    side_bits: f64,
    main: Vec<u8>,
    channels: Vec<ChannelTrace>,
}

fn encode_branch(q: &QuantizedLatent, keep: &[usize], side_step: f64) -> Result<BranchOutput> {
    let n2 = q.channels();
    let table = sigma_table(side_step)?;
    let mut params = Vec::with_capacity(q.plane_count() * keep.len());
    let mut side_enc = RangeEncoder::new();
    let mut side_bits = KahanSum::default();
    side_bits.add((SIDE_PREFIX * 8) as f64);
    for p in 0..q.plane_count() {
        for &c in keep {
            let symbols = q.symbols(p, c);
            let mean = if c == 0 { rounded_mean(symbols) } else { 0 };
            let k = sigma_index(fit_sigma(symbols, mean), side_step);
            side_enc.encode(&table, k)?;
            side_bits.add(table.bits(k)?);
            if c == 0 {
                let z = zigzag_encode(mean);
                encode_raw_u32(&mut side_enc, z);
                side_bits.add((6 + (32 - z.leading_zeros())) as f64);
            }
            params.push(ChannelParams { sigma_index: k, mean });
        }
    }
    let mut side = Vec::new();
    side.extend_from_slice(&q.step.to_be_bytes());
    side.extend_from_slice(&side_step.to_be_bytes());
    side.extend_from_slice(&side_enc.finish());

    let mut main_enc = RangeEncoder::new();
    let mut channels = Vec::with_capacity(params.len());
    let mut pi = params.iter();
    for p in 0..q.plane_count() {
        for &c in keep {
            let cp = pi.next().expect("one parameter set per coded channel");
            let sigma = sigma_from_index(cp.sigma_index, side_step);
            let model = GaussianModel::new(GaussianParams::new(cp.mean as f64, sigma))?;
            let mut bits = KahanSum::default();
            let symbols = q.symbols(p, c);
            for &s in symbols {
                model.encode(&mut main_enc, s);
                bits.add(model.cost_bits(s));
            }
            channels.push(ChannelTrace {
                branch: q.branch,
                plane: p,
                subband: c,
                channel: p * n2 + c,
                symbols: symbols.len(),
                ideal_bits: bits.total(),
                sigma,
                mean: cp.mean,
            });
        }
    }
    Ok(BranchOutput {
        side,
        side_bits: side_bits.total(),
        main: main_enc.finish(),
        channels,
    })
}

/// Encodes an sRGB image.
pub fn encode_image(image: &PlanarImage, cfg: &CodecConfig) -> Result<Encoded> {
    cfg.validate()?;
    image.expect_space(ColorSpace::Srgb)?;
    let (w, h) = (image.width(), image.height());
    if w > u32::MAX as usize || h > u32::MAX as usize || w == 0 || h == 0 {
        return Err(Error::InvalidConfig(format!("unsupported image size {w}x{h}")));
    }
    let latents = ImageLatents::analyze(image, cfg)?;
    let mut quantized = Vec::new();
    let mut components = Vec::new();
    let mut comp_traces = Vec::new();
    let mut channel_traces = Vec::new();
    for tensor in &latents.branches {
        let step = if tensor.branch == Branch::Chroma {
            cfg.steps.chroma
        } else {
            cfg.steps.luma
        };
        let keep = coded_channels(cfg.block, tensor.branch, cfg.chroma_channels)?;
        let q = quantize(tensor, step)?;
        let out = encode_branch(&q, &keep, cfg.steps.side)?;
        let (side_id, main_id) = side_and_main_ids(tensor.branch);
        let mut main_bits = KahanSum::default();
        for ch in &out.channels {
            main_bits.add(ch.ideal_bits);
        }
        comp_traces.push(ComponentTrace {
            id: side_id,
            bytes: out.side.len(),
            ideal_bits: out.side_bits,
        });
        comp_traces.push(ComponentTrace {
            id: main_id,
            bytes: out.main.len(),
            ideal_bits: main_bits.total(),
        });
        components.push(Component {
            id: side_id,
            payload: out.side,
        });
        components.push(Component {
            id: main_id,
            payload: out.main,
        });
        channel_traces.extend(out.channels);
        quantized.push(q);
    }
    let bitstream = Bitstream {
        header: Header {
            space: cfg.space,
            block: cfg.block as u8,
            chroma_channels: cfg.chroma_channels as u8,
            operating_point: cfg.operating_point,
            width: w as u32,
            height: h as u32,
        },
        components,
    };
    Ok(Encoded {
        bitstream,
        trace: EncodeTrace {
            width: w,
            height: h,
            components: comp_traces,
            channels: channel_traces,
        },
        latents: quantized,
    })
}

fn preset_step(point: OperatingPoint, branch: Branch) -> Option<f64> {
    let space = match branch {
        Branch::Rgb => ColorSpace::Srgb,
        _ => ColorSpace::Yuv,
    };
    let cfg = CodecConfig::preset(space, point).ok()?;
    Some(if branch == Branch::Chroma { cfg.steps.chroma } else { cfg.steps.luma })
}

fn payload_error(msg: impl Into<String>) -> Error {
    Error::Bitstream(BitstreamError::Payload(msg.into()))
}

fn decode_branch(
    branch: Branch,
    point: OperatingPoint,
    side: &[u8],
    main: &[u8],
    block: usize,
    chroma_channels: usize,
    width: usize,
    height: usize,
) -> Result<QuantizedLatent> {
    if side.len() < SIDE_PREFIX {
        return Err(Error::Bitstream(BitstreamError::Truncated(format!("{branch} side info"))));
    }
    let step = f64::from_be_bytes(side[0..8].try_into().expect("8 bytes"));
    let side_step = f64::from_be_bytes(side[8..16].try_into().expect("8 bytes"));
    if !(step.is_finite() && step > 0.0) {
        return Err(payload_error(format!("{branch} quantization step {step} is invalid")));
    }
    if !(0.01..=4.0).contains(&side_step) {
        return Err(payload_error(format!("{branch} side step {side_step} is invalid")));
    }
    if let Some(want) = preset_step(point, branch) {
        if step != want || side_step != DEFAULT_SIDE_STEP {
            return Err(payload_error(format!("{branch} steps do not match operating point {point}")));
        }
    }
    let planes = if branch == Branch::Chroma { 2 } else if branch == Branch::Luma { 1 } else { 3 };
    let keep = coded_channels(block, branch, chroma_channels)?;
    let table = sigma_table(side_step)?;
    let mut dec = RangeDecoder::new(&side[SIDE_PREFIX..])?;
    let mut params = Vec::with_capacity(planes * keep.len());
    for _ in 0..planes {
        for &c in &keep {
            let k = dec.decode(&table)?;
            let mean = if c == 0 { zigzag_decode(decode_raw_u32(&mut dec)?) } else { 0 };
            params.push(ChannelParams { sigma_index: k, mean });
        }
    }
    dec.finish()?;

    let mut q = QuantizedLatent::zeros(branch, step, block, width, height, planes);
    let mut dec = RangeDecoder::new(main)?;
    let mut pi = params.iter();
    for p in 0..planes {
        for &c in &keep {
            let cp = pi.next().expect("one parameter set per coded channel");
            let sigma = sigma_from_index(cp.sigma_index, side_step);
            let model = GaussianModel::new(GaussianParams::new(cp.mean as f64, sigma))?;
            for slot in q.symbols_mut(p, c) {
                *slot = model.decode(&mut dec)?;
            }
        }
    }
    dec.finish()?;
    Ok(q)
}

/// Decoded stream: reconstruction plus the dequantized latents behind it.
#[derive(Debug, Clone)]
pub struct Decoded {
    pub header: Header,
    pub image: PlanarImage,
    pub quantized: Vec<QuantizedLatent>,
    pub latents: ImageLatents,
}

pub fn decode_bitstream(bs: &Bitstream) -> Result<Decoded> {
    let h = bs.header;
    let block = h.block as usize;
    let (width, height) = (h.width as usize, h.height as usize);
    if block == 0 || block > 15 {
        return Err(payload_error(format!("block size {block} is invalid")));
    }
    let chroma_channels = h.chroma_channels as usize;
    if chroma_channels == 0 || chroma_channels > block * block {
        return Err(payload_error(format!("chroma channel count {chroma_channels} is invalid")));
    }
    let expected = Bitstream::expected_components(h.space);
    if bs.components.len() != expected.len() || bs.components.iter().zip(expected).any(|(c, e)| c.id != *e) {
        return Err(Error::Bitstream(BitstreamError::ComponentLayout("unexpected component set".into())));
    }
    let branches: &[Branch] = if h.space == ColorSpace::Srgb {
        &[Branch::Rgb]
    } else {
        &[Branch::Luma, Branch::Chroma]
    };
    let mut quantized = Vec::new();
    for (i, &b) in branches.iter().enumerate() {
        let side = &bs.components[2 * i].payload;
        let main = &bs.components[2 * i + 1].payload;
        quantized.push(decode_branch(b, h.operating_point, side, main, block, chroma_channels, width, height)?);
    }
    let latents = ImageLatents {
        space: h.space,
        width,
        height,
        branches: quantized.iter().map(|q| q.dequantize()).collect(),
    };
    let image = latents.to_image()?;
    Ok(Decoded {
        header: h,
        image,
        quantized,
        latents,
    })
}

/// Decodes a serialized stream to an sRGB image.
pub fn decode_image(bytes: &[u8]) -> Result<PlanarImage> {
    Ok(decode_bitstream(&Bitstream::from_bytes(bytes)?)?.image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use crate::synth;

    fn yuv_q(point: OperatingPoint) -> CodecConfig {
        CodecConfig::preset(ColorSpace::Yuv, point).unwrap()
    }

    #[test]
    fn helpers() {
        for v in [0, 1, -1, 17, -4000, i32::MAX, i32::MIN] {
            assert_eq!(zigzag_decode(zigzag_encode(v)), v);
        }
        assert_eq!(rounded_mean(&[1, 2]), 2);
        assert_eq!(rounded_mean(&[-1, -2]), -2);
        assert_eq!(rounded_mean(&[1, 1, 2]), 1);
        assert_eq!(sigma_index_range(0.25), (-12, 32));
        assert!(sigma_from_index(-12, 0.25) >= SIGMA_MIN);
        assert_eq!(sigma_index(0.0, 0.25), -12);
        assert_eq!(sigma_index(1e9, 0.25), 32);
        assert_eq!(sigma_index(1.0, 0.25), 0);
    }

    #[test]
    fn roundtrip_all_spaces() {
        let img = synth::natural_image(3, 40, 24);
        for space in [ColorSpace::Srgb, ColorSpace::Yuv, ColorSpace::Lab] {
            let cfg = CodecConfig::preset(space, OperatingPoint::Q3).unwrap();
            let enc = encode_image(&img, &cfg).unwrap();
            let bytes = enc.to_bytes();
            let dec = decode_bitstream(&Bitstream::from_bytes(&bytes).unwrap()).unwrap();
            assert_eq!((dec.image.width(), dec.image.height()), (40, 24));
            assert_eq!(dec.image.space(), ColorSpace::Srgb);
            assert_eq!(dec.quantized, enc.latents, "{space:?}");
            let want_components = if space == ColorSpace::Srgb { 2 } else { 4 };
            assert_eq!(enc.bitstream.components.len(), want_components);
            assert!(metrics::psnr(&img, &dec.image, 1.0).unwrap() > 25.0);
        }
    }

    #[test]
    fn accounting_matches_payload() {
        let img = synth::natural_image(8, 64, 64);
        let enc = encode_image(&img, &yuv_q(OperatingPoint::Q4)).unwrap();
        let payload_bits = enc.bitstream.payload_bytes() * 8;
        assert_eq!(enc.trace.total_bits(), payload_bits);
        assert!((enc.trace.bpp() - payload_bits as f64 / 4096.0).abs() < 1e-9);
        assert!((enc.bitstream.bpp() - enc.trace.bpp()).abs() < 1e-12);
        let sum: f64 = ComponentId::DUAL.iter().map(|&id| enc.trace.component_bpp(id)).sum();
        assert!((sum - enc.trace.bpp()).abs() < 1e-9);
        // ideal and actual rates agree up to the coder's flush overhead
        for c in &enc.trace.components {
            assert!((c.bytes * 8) as f64 <= c.ideal_bits + 32.0 + 0.001 * c.ideal_bits + 64.0, "{c:?}");
        }
    }

    #[test]
    fn constant_gray_is_cheap() {
        let img = PlanarImage::filled(64, 64, [0.5; 3], ColorSpace::Srgb);
        for space in [ColorSpace::Yuv, ColorSpace::Lab] {
            let cfg = CodecConfig::preset(space, OperatingPoint::Q4).unwrap();
            let enc = encode_image(&img, &cfg).unwrap();
            let chroma: Vec<&ChannelTrace> = enc.trace.channels.iter().filter(|c| c.branch == Branch::Chroma).collect();
            assert_eq!(chroma.len(), 128);
            for c in chroma {
                assert!(c.ideal_bits <= 2.0, "{c:?}");
            }
            let out = decode_image(&enc.to_bytes()).unwrap();
            for p in out.planes() {
                for &v in p {
                    assert!((v - 0.5).abs() <= (cfg.steps.luma / 2.0) as f32 + 1e-3, "{v}");
                }
            }
        }
    }

    #[test]
    fn near_lossless_limit() {
        let img = synth::natural_image(4, 24, 24);
        let steps = QuantSteps {
            luma: 1e-4,
            chroma: 1e-4,
            side: 0.25,
        };
        for space in [ColorSpace::Srgb, ColorSpace::Yuv, ColorSpace::Lab] {
            let cfg = CodecConfig::custom(space, 8, 64, steps).unwrap();
            let out = decode_image(&encode_image(&img, &cfg).unwrap().to_bytes()).unwrap();
            for c in 0..3 {
                for (a, b) in img.plane(c).iter().zip(out.plane(c)) {
                    assert!((a - b).abs() < 1e-3, "{space:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn chroma_changes_leave_luma_bytes_alone() {
        let img = synth::natural_image(5, 32, 32);
        // shift chroma only: adjust RGB so that Y is unchanged
        let yuv = color::rgb_to_yuv(&img).unwrap();
        let shifted = yuv.map_pixels(ColorSpace::Yuv, |p| [p[0], p[1] * 0.5, p[2] * 0.5]);
        let img2 = color::yuv_to_rgb(&shifted).unwrap();
        let cfg = yuv_q(OperatingPoint::Q2);
        let a = encode_image(&img, &cfg).unwrap();
        let b = encode_image(&img2, &cfg).unwrap();
        let luma = |e: &Encoded| e.bitstream.component(ComponentId::LumaMain).unwrap().payload.clone();
        assert_eq!(luma(&a), luma(&b));
        assert_ne!(
            a.bitstream.component(ComponentId::ChromaMain).unwrap().payload,
            b.bitstream.component(ComponentId::ChromaMain).unwrap().payload
        );
    }

    #[test]
    fn tampering_is_detected_or_changes_output() {
        let img = synth::natural_image(6, 32, 32);
        let enc = encode_image(&img, &yuv_q(OperatingPoint::Q3)).unwrap();
        let bytes = enc.to_bytes();
        let start = enc.bitstream.header_bytes();
        for pos in start..bytes.len() {
            let mut t = bytes.clone();
            t[pos] ^= 0x5A;
            if let Ok(dec) = decode_bitstream(&Bitstream::from_bytes(&t).unwrap()) {
                assert_ne!(dec.quantized, enc.latents, "flip at {pos} went unnoticed");
            }
        }
    }

    #[test]
    fn halving_steps_is_rd_monotone() {
        let img = synth::natural_image(7, 64, 64);
        let mut last: Option<(usize, f64)> = None;
        for point in OperatingPoint::PRESETS {
            let enc = encode_image(&img, &yuv_q(point)).unwrap();
            let out = decode_image(&enc.to_bytes()).unwrap();
            let mse = metrics::mse(&img, &out).unwrap();
            let bits = enc.trace.total_bits();
            if let Some((b, m)) = last {
                assert!(bits >= b && mse <= m, "{point}: {bits} {mse} vs {b} {m}");
            }
            last = Some((bits, mse));
        }
    }

    #[test]
    fn fewer_chroma_channels_cost_fewer_bits() {
        let img = synth::natural_image(9, 64, 64);
        let mut last = f64::INFINITY;
        for c in CHROMA_CHANNEL_CHOICES {
            let cfg = yuv_q(OperatingPoint::Q4).with_chroma_channels(c).unwrap();
            let enc = encode_image(&img, &cfg).unwrap();
            let bits = enc.trace.component_bpp(ComponentId::ChromaMain) + enc.trace.component_bpp(ComponentId::ChromaSide);
            assert!(bits <= last);
            last = bits;
            let coded = enc.trace.channels.iter().filter(|t| t.branch == Branch::Chroma).count();
            assert_eq!(coded, 2 * c);
        }
    }
}
