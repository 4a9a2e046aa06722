//! Color transforms between sRGB, linear RGB, YUV and CIELAB.
//!
//! YUV is the full-range BT.709 analog form applied to the nonlinear sRGB
//! samples (luma, not luminance). CIELAB uses the sRGB primaries, a D65
//! white point and the exact rational constants ε = 216/24389, κ = 24389/27.

use std::sync::OnceLock;

use serde::Serialize;

use crate::imageio::{ColorSpace, PlanarImage};
use crate::Result;

pub const KR: f64 = 0.2126;
pub const KG: f64 = 0.7152;
pub const KB: f64 = 0.0722;
/// Scale of B−Y into U: 2·(1−KB).
pub const U_SCALE: f64 = 1.8556;
/// Scale of R−Y into V: 2·(1−KR).
pub const V_SCALE: f64 = 1.5748;

pub const LAB_EPSILON: f64 = 216.0 / 24389.0;
pub const LAB_KAPPA: f64 = 24389.0 / 27.0;

/// Affine 3×3 transform `out = m · in + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ColorMatrix {
    pub m: [[f64; 3]; 3],
    pub offset: [f64; 3],
}

impl ColorMatrix {
    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2] + self.offset[0],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2] + self.offset[1],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2] + self.offset[2],
        ]
    }

    /// Inverse affine map. Panics on a singular matrix.
    pub fn inverse(&self) -> ColorMatrix {
        let m = &self.m;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let det = m[0][0] * cof(1, 2, 1, 2) - m[0][1] * cof(1, 2, 0, 2) + m[0][2] * cof(1, 2, 0, 1);
        assert!(det.abs() > 1e-12, "singular color matrix");
        let inv = [
            [cof(1, 2, 1, 2) / det, -cof(0, 2, 1, 2) / det, cof(0, 1, 1, 2) / det],
            [-cof(1, 2, 0, 2) / det, cof(0, 2, 0, 2) / det, -cof(0, 1, 0, 2) / det],
            [cof(1, 2, 0, 1) / det, -cof(0, 2, 0, 1) / det, cof(0, 1, 0, 1) / det],
        ];
        let lin = ColorMatrix {
            m: inv,
            offset: [0.0; 3],
        };
        let o = lin.apply(self.offset);
        ColorMatrix {
            m: inv,
            offset: [-o[0], -o[1], -o[2]],
        }
    }

    pub fn compose(&self, first: &ColorMatrix) -> ColorMatrix {
        let mut m = [[0.0; 3]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[r][k] * first.m[k][c]).sum();
            }
        }
        let lin = ColorMatrix {
            m: self.m,
            offset: self.offset,
        };
        ColorMatrix {
            m,
            offset: lin.apply(first.offset),
        }
    }
}

/// RGB → YUV (BT.709 full range, analog form).
pub fn yuv_matrix() -> &'static ColorMatrix {
    static M: OnceLock<ColorMatrix> = OnceLock::new();
    M.get_or_init(|| ColorMatrix {
        m: [
            [KR, KG, KB],
            [-KR / U_SCALE, -KG / U_SCALE, (1.0 - KB) / U_SCALE],
            [(1.0 - KR) / V_SCALE, -KG / V_SCALE, -KB / V_SCALE],
        ],
        offset: [0.0; 3],
    })
}

pub fn yuv_inverse_matrix() -> &'static ColorMatrix {
    static M: OnceLock<ColorMatrix> = OnceLock::new();
    M.get_or_init(|| yuv_matrix().inverse())
}

/// Constants for the sRGB ↔ CIELAB path.
#[derive(Debug, Clone, Serialize)]
pub struct LabContext {
    /// Reference white (X_n, Y_n, Z_n); the image of RGB (1,1,1) under `rgb_to_xyz`.
    pub white: [f64; 3],
    pub rgb_to_xyz: ColorMatrix,
    pub xyz_to_rgb: ColorMatrix,
    pub epsilon: f64,
    pub kappa: f64,
}

impl LabContext {
    pub fn d65() -> &'static LabContext {
        static CTX: OnceLock<LabContext> = OnceLock::new();
        CTX.get_or_init(|| {
            let rgb_to_xyz = ColorMatrix {
                m: [
                    [0.4124564, 0.3575761, 0.1804375],
                    [0.2126729, 0.7151522, 0.0721750],
                    [0.0193339, 0.1191920, 0.9503041],
                ],
                offset: [0.0; 3],
            };
            LabContext {
                white: rgb_to_xyz.apply([1.0, 1.0, 1.0]),
                xyz_to_rgb: rgb_to_xyz.inverse(),
                rgb_to_xyz,
                epsilon: LAB_EPSILON,
                kappa: LAB_KAPPA,
            }
        })
    }

    pub fn f(&self, t: f64) -> f64 {
        if t > self.epsilon {
            t.cbrt()
        } else {
            (self.kappa * t + 16.0) / 116.0
        }
    }

    pub fn f_inv(&self, ft: f64) -> f64 {
        let cube = ft * ft * ft;
        if cube > self.epsilon {
            cube
        } else {
            (116.0 * ft - 16.0) / self.kappa
        }
    }

    pub fn xyz_to_lab(&self, xyz: [f64; 3]) -> [f64; 3] {
        let fx = self.f(xyz[0] / self.white[0]);
        let fy = self.f(xyz[1] / self.white[1]);
        let fz = self.f(xyz[2] / self.white[2]);
        [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
    }

    pub fn lab_to_xyz(&self, lab: [f64; 3]) -> [f64; 3] {
        let fy = (lab[0] + 16.0) / 116.0;
        let fx = fy + lab[1] / 500.0;
        let fz = fy - lab[2] / 200.0;
        let yr = if lab[0] > self.kappa * self.epsilon {
            fy * fy * fy
        } else {
            lab[0] / self.kappa
        };
        [
            self.f_inv(fx) * self.white[0],
            yr * self.white[1],
            self.f_inv(fz) * self.white[2],
        ]
    }
}

/// IEC 61966-2-1 decoding transfer.
pub fn srgb_to_linear_sample(s: f64) -> f64 {
    if s <= 0.04045 {
        s / 12.92
    } else {
        ((s + 0.055) / 1.055).powf(2.4)
    }
}

/// IEC 61966-2-1 encoding transfer (no clamping).
pub fn linear_to_srgb_sample(l: f64) -> f64 {
    if l <= 0.0031308 {
        l * 12.92
    } else {
        1.055 * l.powf(1.0 / 2.4) - 0.055
    }
}

pub fn rgb_to_yuv_px(rgb: [f64; 3]) -> [f64; 3] {
    yuv_matrix().apply(rgb)
}

pub fn yuv_to_rgb_px(yuv: [f64; 3]) -> [f64; 3] {
    yuv_inverse_matrix().apply(yuv)
}

pub fn rgb_to_lab_px(rgb: [f64; 3]) -> [f64; 3] {
    let ctx = LabContext::d65();
    let lin = rgb.map(srgb_to_linear_sample);
    ctx.xyz_to_lab(ctx.rgb_to_xyz.apply(lin))
}

/// CIELAB → sRGB, clamping to [0,1] only after the final transfer.
pub fn lab_to_rgb_px(lab: [f64; 3]) -> [f64; 3] {
    let ctx = LabContext::d65();
    let lin = ctx.xyz_to_rgb.apply(ctx.lab_to_xyz(lab));
    lin.map(|l| linear_to_srgb_sample(l).clamp(0.0, 1.0))
}

/// Unclamped CIELAB → sRGB, for analysis of out-of-gamut responses.
pub fn lab_to_rgb_px_unclamped(lab: [f64; 3]) -> [f64; 3] {
    let ctx = LabContext::d65();
    let lin = ctx.xyz_to_rgb.apply(ctx.lab_to_xyz(lab));
    lin.map(linear_to_srgb_sample)
}

pub fn srgb_to_linear(image: &PlanarImage) -> Result<PlanarImage> {
    image.expect_space(ColorSpace::Srgb)?;
    Ok(image.map_pixels(ColorSpace::LinearRgb, |p| p.map(srgb_to_linear_sample)))
}

pub fn linear_to_srgb(image: &PlanarImage) -> Result<PlanarImage> {
    image.expect_space(ColorSpace::LinearRgb)?;
    Ok(image.map_pixels(ColorSpace::Srgb, |p| p.map(linear_to_srgb_sample)))
}

pub fn rgb_to_yuv(image: &PlanarImage) -> Result<PlanarImage> {
    image.expect_space(ColorSpace::Srgb)?;
    Ok(image.map_pixels(ColorSpace::Yuv, rgb_to_yuv_px))
}

pub fn yuv_to_rgb(image: &PlanarImage) -> Result<PlanarImage> {
    image.expect_space(ColorSpace::Yuv)?;
    Ok(image.map_pixels(ColorSpace::Srgb, yuv_to_rgb_px))
}

pub fn rgb_to_lab(image: &PlanarImage) -> Result<PlanarImage> {
    image.expect_space(ColorSpace::Srgb)?;
    Ok(image.map_pixels(ColorSpace::Lab, rgb_to_lab_px))
}

pub fn lab_to_rgb(image: &PlanarImage) -> Result<PlanarImage> {
    image.expect_space(ColorSpace::Lab)?;
    Ok(image.map_pixels(ColorSpace::Srgb, lab_to_rgb_px))
}

/// Converts between any two supported spaces, routing through sRGB.
pub fn convert(image: &PlanarImage, target: ColorSpace) -> Result<PlanarImage> {
    if image.space() == target {
        return Ok(image.clone());
    }
    let srgb = match image.space() {
        ColorSpace::Srgb => image.clone(),
        ColorSpace::LinearRgb => linear_to_srgb(image)?,
        ColorSpace::Yuv => yuv_to_rgb(image)?,
        ColorSpace::Lab => lab_to_rgb(image)?,
    };
    match target {
        ColorSpace::Srgb => Ok(srgb),
        ColorSpace::LinearRgb => srgb_to_linear(&srgb),
        ColorSpace::Yuv => rgb_to_yuv(&srgb),
        ColorSpace::Lab => rgb_to_lab(&srgb),
    }
}
