//! Deterministic procedural test images.
//!
//! `natural_image` mixes a smooth colored backdrop, hard-edged shapes and
//! multi-octave value noise, then quantizes to 8 bits so the result behaves
//! like an ingested photograph.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imageio::{ColorSpace, PlanarImage};

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Bilinearly interpolated lattice noise with `cells` cells across the image.
struct ValueNoise {
    cells: usize,
    lattice: Vec<f64>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, cells: usize) -> Self {
        let n = (cells + 2) * (cells + 2);
        Self {
            cells,
            lattice: (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect(),
        }
    }

    fn at(&self, u: f64, v: f64) -> f64 {
        let stride = self.cells + 2;
        let (fx, fy) = (u * self.cells as f64, v * self.cells as f64);
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (smoothstep(fx - ix as f64), smoothstep(fy - iy as f64));
        let g = |x: usize, y: usize| self.lattice[y * stride + x];
        let top = g(ix, iy) * (1.0 - tx) + g(ix + 1, iy) * tx;
        let bot = g(ix, iy + 1) * (1.0 - tx) + g(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bot * ty
    }
}

enum Shape {
    Disc { cx: f64, cy: f64, r: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Shape {
    fn contains(&self, u: f64, v: f64) -> bool {
        match *self {
            Shape::Disc { cx, cy, r } => (u - cx).powi(2) + (v - cy).powi(2) <= r * r,
            Shape::Rect { x0, y0, x1, y1 } => u >= x0 && u <= x1 && v >= y0 && v <= y1,
        }
    }
}

/// A photo-like sRGB image, reproducible from `seed`.
pub fn natural_image(seed: u64, width: usize, height: usize) -> PlanarImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: [f64; 3] = [rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7)];
    let tilt: [[f64; 2]; 3] = [0; 3].map(|_| [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)]);
    let luma_octaves: Vec<(ValueNoise, f64)> = [(3, 0.25), (7, 0.12), (17, 0.06), (41, 0.03)]
        .into_iter()
        .map(|(cells, amp)| (ValueNoise::new(&mut rng, cells), amp))
        .collect();
    let chroma_noise: Vec<ValueNoise> = (0..3).map(|_| ValueNoise::new(&mut rng, 4)).collect();

    let n_shapes = rng.gen_range(4..9);
    let shapes: Vec<(Shape, [f64; 3], f64)> = (0..n_shapes)
        .map(|_| {
            let shape = if rng.gen_bool(0.5) {
                Shape::Disc {
                    cx: rng.gen(),
                    cy: rng.gen(),
                    r: rng.gen_range(0.05..0.25),
                }
            } else {
                let (x0, y0) = (rng.gen_range(0.0..0.8), rng.gen_range(0.0..0.8));
                Shape::Rect {
                    x0,
                    y0,
                    x1: x0 + rng.gen_range(0.08..0.4),
                    y1: y0 + rng.gen_range(0.08..0.4),
                }
            };
            let color = [rng.gen(), rng.gen(), rng.gen()];
            (shape, color, rng.gen_range(0.5..0.95))
        })
        .collect();

    let mut data = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let u = (x as f64 + 0.5) / width as f64;
            let v = (y as f64 + 0.5) / height as f64;
            let luma: f64 = luma_octaves.iter().map(|(n, a)| a * n.at(u, v)).sum();
            let mut px = [0.0; 3];
            for c in 0..3 {
                px[c] = base[c]
                    + tilt[c][0] * (u - 0.5)
                    + tilt[c][1] * (v - 0.5)
                    + luma
                    + 0.15 * chroma_noise[c].at(u, v);
            }
            for (shape, color, opacity) in &shapes {
                if shape.contains(u, v) {
                    for c in 0..3 {
                        px[c] = px[c] * (1.0 - opacity) + (color[c] + 0.5 * luma) * opacity;
                    }
                }
            }
            for c in px {
                data.push((c.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    PlanarImage::from_rgb8(width, height, &data).expect("consistent dimensions")
}

/// Adds i.i.d. uniform noise in `[-amplitude, amplitude]`, clamped to [0,1].
pub fn add_noise(image: &PlanarImage, amplitude: f64, seed: u64) -> PlanarImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = image.len();
    let mut planes: [Vec<f32>; 3] = Default::default();
    for (c, p) in planes.iter_mut().enumerate() {
        *p = image
            .plane(c)
            .iter()
            .take(n)
            .map(|&s| (s as f64 + amplitude * (rng.gen::<f64>() * 2.0 - 1.0)).clamp(0.0, 1.0) as f32)
            .collect();
    }
    PlanarImage::new(image.width(), image.height(), planes, image.space()).expect("same dims")
}

/// Horizontal gray ramp from 0 to 1.
pub fn horizontal_ramp(width: usize, height: usize) -> PlanarImage {
    let mut plane = Vec::with_capacity(width * height);
    for _ in 0..height {
        for x in 0..width {
            plane.push(x as f32 / (width.max(2) - 1) as f32);
        }
    }
    PlanarImage::new(
        width,
        height,
        [plane.clone(), plane.clone(), plane],
        ColorSpace::Srgb,
    )
    .expect("consistent dimensions")
}

/// Smooth diagonal color gradient.
pub fn smooth_gradient(width: usize, height: usize) -> PlanarImage {
    let n = width * height;
    let mut planes: [Vec<f32>; 3] = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for y in 0..height {
        for x in 0..width {
            let u = x as f32 / width as f32;
            let v = y as f32 / height as f32;
            planes[0].push(0.2 + 0.6 * u);
            planes[1].push(0.3 + 0.4 * v);
            planes[2].push(0.8 - 0.3 * (u + v) / 2.0);
        }
    }
    PlanarImage::new(width, height, planes, ColorSpace::Srgb).expect("consistent dimensions")
}
