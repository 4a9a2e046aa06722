//! Raster ingestion and export.
//!
//! Images live in memory as three `f32` planes with a color-space tag.
//! Only 8-bit RGB storage is supported on disk: binary PPM (`P6`, maxval 255)
//! and truecolor PNG.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Color space tag carried by every [`PlanarImage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorSpace {
    Srgb,
    LinearRgb,
    Yuv,
    Lab,
}

/// Nominal value range of one plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneRange {
    pub name: &'static str,
    pub min: f32,
    pub max: f32,
}

impl ColorSpace {
    pub fn plane_ranges(self) -> [PlaneRange; 3] {
        let r = |name, min, max| PlaneRange { name, min, max };
        match self {
            ColorSpace::Srgb => [r("R", 0.0, 1.0), r("G", 0.0, 1.0), r("B", 0.0, 1.0)],
            ColorSpace::LinearRgb => [r("R", 0.0, 1.0), r("G", 0.0, 1.0), r("B", 0.0, 1.0)],
            ColorSpace::Yuv => [r("Y", 0.0, 1.0), r("U", -0.5, 0.5), r("V", -0.5, 0.5)],
            ColorSpace::Lab => [
                r("L", 0.0, 100.0),
                r("a", -128.0, 127.0),
                r("b", -128.0, 127.0),
            ],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorSpace::Srgb => "srgb",
            ColorSpace::LinearRgb => "linear_rgb",
            ColorSpace::Yuv => "yuv",
            ColorSpace::Lab => "lab",
        }
    }
}

impl std::str::FromStr for ColorSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "srgb" | "rgb" => Ok(ColorSpace::Srgb),
            "linear" | "linear_rgb" | "linear-rgb" => Ok(ColorSpace::LinearRgb),
            "yuv" => Ok(ColorSpace::Yuv),
            "lab" => Ok(ColorSpace::Lab),
            other => Err(Error::InvalidConfig(format!("unknown color space '{other}'"))),
        }
    }
}

/// An H×W image stored as three planes of `f32` samples.
///
/// Immutable once built; all planes have `width * height` samples in
/// row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarImage {
    width: usize,
    height: usize,
    planes: [Vec<f32>; 3],
    space: ColorSpace,
}

impl PlanarImage {
    pub fn new(
        width: usize,
        height: usize,
        planes: [Vec<f32>; 3],
        space: ColorSpace,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::TooSmall(format!("{width}x{height} image")));
        }
        let n = width * height;
        for (i, p) in planes.iter().enumerate() {
            if p.len() != n {
                return Err(Error::InvalidConfig(format!(
                    "plane {i} has {} samples, expected {n}",
                    p.len()
                )));
            }
        }
        Ok(Self {
            width,
            height,
            planes,
            space,
        })
    }

    /// Builds an image where every pixel has the same triple.
    pub fn filled(width: usize, height: usize, value: [f32; 3], space: ColorSpace) -> Self {
        let n = width * height;
        let planes = [vec![value[0]; n], vec![value[1]; n], vec![value[2]; n]];
        Self::new(width, height, planes, space).expect("valid dimensions")
    }

    /// Interleaved 8-bit RGB to an sRGB-tagged image (`v / 255`).
    pub fn from_rgb8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::Truncated(format!(
                "expected {} bytes of RGB data, got {}",
                width * height * 3,
                data.len()
            )));
        }
        let mut planes: [Vec<f32>; 3] = Default::default();
        for p in planes.iter_mut() {
            p.reserve_exact(width * height);
        }
        for px in data.chunks_exact(3) {
            for c in 0..3 {
                planes[c].push(px[c] as f32 / 255.0);
            }
        }
        Self::new(width, height, planes, ColorSpace::Srgb)
    }

    /// Interleaved 8-bit RGB; samples are clamped to [0,1] and rounded half away from zero.
    pub fn to_rgb8(&self) -> Result<Vec<u8>> {
        self.expect_space(ColorSpace::Srgb)?;
        let mut out = Vec::with_capacity(self.len() * 3);
        for i in 0..self.len() {
            for c in 0..3 {
                out.push(quantize_u8(self.planes[c][i]));
            }
        }
        Ok(out)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of pixels.
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        &self.planes[c]
    }

    pub fn planes(&self) -> &[Vec<f32>; 3] {
        &self.planes
    }

    pub fn into_planes(self) -> [Vec<f32>; 3] {
        self.planes
    }

    pub fn plane_ranges(&self) -> [PlaneRange; 3] {
        self.space.plane_ranges()
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = y * self.width + x;
        [self.planes[0][i], self.planes[1][i], self.planes[2][i]]
    }

    /// Applies `f` to every pixel triple, producing an image tagged `space`.
    pub fn map_pixels(&self, space: ColorSpace, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let n = self.len();
        let mut planes: [Vec<f32>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let out = f([
                self.planes[0][i] as f64,
                self.planes[1][i] as f64,
                self.planes[2][i] as f64,
            ]);
            for c in 0..3 {
                planes[c][i] = out[c] as f32;
            }
        }
        Self {
            width: self.width,
            height: self.height,
            planes,
            space,
        }
    }

    pub(crate) fn expect_space(&self, expected: ColorSpace) -> Result<()> {
        if self.space != expected {
            return Err(Error::WrongColorSpace {
                expected,
                actual: self.space,
            });
        }
        Ok(())
    }

    pub(crate) fn check_same_dims(&self, other: &PlanarImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }
}

/// `round(clamp(s, 0, 1) * 255)` with ties away from zero.
pub fn quantize_u8(s: f32) -> u8 {
    let s = if s.is_nan() { 0.0 } else { s.clamp(0.0, 1.0) };
    (s * 255.0).round() as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FileKind {
    Ppm,
    Png,
}

fn kind_from_extension(path: &Path) -> Result<FileKind> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("ppm") | Some("pnm") => Ok(FileKind::Ppm),
        Some("png") => Ok(FileKind::Png),
        _ => Err(Error::UnsupportedFormat(format!(
            "cannot infer image format from {}",
            path.display()
        ))),
    }
}

/// Reads a P6 PPM or 8-bit RGB PNG into an sRGB-tagged image.
///
/// The format is sniffed from the file's magic bytes, not its extension.
pub fn read_image(path: impl AsRef<Path>) -> Result<PlanarImage> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_image_bytes(&bytes)
}

/// Decodes an in-memory PPM or PNG file.
pub fn decode_image_bytes(bytes: &[u8]) -> Result<PlanarImage> {
    if bytes.starts_with(b"P6") {
        decode_ppm(bytes)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::UnsupportedFormat(format!(
            "netpbm variant P{} (only binary P6 is supported)",
            bytes[1] as char
        )))
    } else {
        Err(Error::UnsupportedFormat("unrecognized file signature".into()))
    }
}

/// Writes an sRGB image as PPM or PNG depending on the extension.
pub fn write_image(path: impl AsRef<Path>, image: &PlanarImage) -> Result<()> {
    let path = path.as_ref();
    image.expect_space(ColorSpace::Srgb)?;
    let kind = kind_from_extension(path)?;
    let bytes = match kind {
        FileKind::Ppm => encode_ppm(image)?,
        FileKind::Png => encode_png(image)?,
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn encode_ppm(image: &PlanarImage) -> Result<Vec<u8>> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.to_rgb8()?);
    Ok(out)
}

pub fn encode_png(image: &PlanarImage) -> Result<Vec<u8>> {
    let data = image.to_rgb8()?;
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, image.width as u32, image.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        writer
            .write_image_data(&data)
            .map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Writes a single-channel image (values in [0,1]) as a 16-bit grayscale PNG.
pub fn write_gray16_png(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    samples: &[f32],
) -> Result<()> {
    let path = path.as_ref();
    let mut data = Vec::with_capacity(samples.len() * 2);
    for &s in samples {
        let v = (s.clamp(0.0, 1.0) as f64 * 65535.0).round() as u16;
        data.extend_from_slice(&v.to_be_bytes());
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Sixteen);
    let mut writer = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
    writer
        .write_image_data(&data)
        .map_err(|e| Error::Png(e.to_string()))?;
    writer.finish().map_err(|e| Error::Png(e.to_string()))
}

/// Reads a 16-bit grayscale PNG back to samples in [0,1].
pub fn read_gray16_png(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f32>)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(std::io::Cursor::new(&bytes[..]));
    let mut reader = decoder.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::UnsupportedFormat(
            "expected a 16-bit grayscale PNG plane".into(),
        ));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(w * h * 2)];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Png(e.to_string()))?;
    let samples = buf[..frame.buffer_size()]
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]) as f32 / 65535.0)
        .collect();
    Ok((w, h, samples))
}

fn decode_png(bytes: &[u8]) -> Result<PlanarImage> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Rgb {
        return Err(Error::UnsupportedFormat(format!(
            "png color type {:?} (only truecolor RGB is supported)",
            info.color_type
        )));
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "png bit depth {:?} (only 8-bit is supported)",
            info.bit_depth
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(w * h * 3)];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Truncated(e.to_string()))?;
    PlanarImage::from_rgb8(w, h, &buf[..frame.buffer_size()])
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Truncated(format!("ppm header: missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::UnsupportedFormat(format!("ppm header: bad {what}")))
    }
}

fn decode_ppm(bytes: &[u8]) -> Result<PlanarImage> {
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "ppm maxval {maxval} (only 255 is supported)"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::Truncated("ppm header: missing raster".into())),
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Error::UnsupportedFormat("ppm dimensions overflow".into()))?;
    let raster = &bytes[cur.pos..];
    if raster.len() < need {
        return Err(Error::Truncated(format!(
            "ppm raster has {} of {need} bytes",
            raster.len()
        )));
    }
    PlanarImage::from_rgb8(width, height, &raster[..need])
}
