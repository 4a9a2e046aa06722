//! Orthonormal block DCT-II and subband orderings.

/// `N×N` orthonormal DCT-II basis: `basis[k·N + n] = α(k)·cos(π(2n+1)k / 2N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dct {
    n: usize,
    basis: Vec<f64>,
}

impl Dct {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "block size must be positive");
        let mut basis = vec![0.0; n * n];
        for k in 0..n {
            let alpha = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            for i in 0..n {
                let angle = std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64;
                basis[k * n + i] = alpha * libm::cos(angle);
            }
        }
        Self { n, basis }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `α(k)·cos(π(2i+1)k / 2N)`.
    pub fn basis(&self, k: usize, i: usize) -> f64 {
        self.basis[k * self.n + i]
    }

    /// Forward 2-D transform of a row-major `N×N` block; output `[u·N + v]`
    /// holds vertical frequency `u` and horizontal frequency `v`.
    pub fn forward(&self, block: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut tmp = vec![0.0; n * n];
        for y in 0..n {
            for v in 0..n {
                let mut s = 0.0;
                for x in 0..n {
                    s += self.basis[v * n + x] * block[y * n + x];
                }
                tmp[y * n + v] = s;
            }
        }
        for u in 0..n {
            for v in 0..n {
                let mut s = 0.0;
                for y in 0..n {
                    s += self.basis[u * n + y] * tmp[y * n + v];
                }
                out[u * n + v] = s;
            }
        }
    }

    /// Inverse of [`Self::forward`].
    pub fn inverse(&self, coeffs: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut tmp = vec![0.0; n * n];
        for y in 0..n {
            for v in 0..n {
                let mut s = 0.0;
                for u in 0..n {
                    s += self.basis[u * n + y] * coeffs[u * n + v];
                }
                tmp[y * n + v] = s;
            }
        }
        for y in 0..n {
            for x in 0..n {
                let mut s = 0.0;
                for v in 0..n {
                    s += self.basis[v * n + x] * tmp[y * n + v];
                }
                out[y * n + x] = s;
            }
        }
    }

    /// Spatial pattern of subband `channel` (row-major `N×N`).
    pub fn basis_image(&self, channel: usize) -> Vec<f64> {
        let n = self.n;
        let (u, v) = (channel / n, channel % n);
        let mut out = vec![0.0; n * n];
        for y in 0..n {
            for x in 0..n {
                out[y * n + x] = self.basis(u, y) * self.basis(v, x);
            }
        }
        out
    }
}

/// Subband indices `u·N + v` in JPEG zigzag order.
pub fn zigzag_order(n: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(n * n);
    for s in 0..(2 * n - 1) {
        let rows: Vec<usize> = (s.saturating_sub(n - 1)..=s.min(n - 1)).collect();
        if s % 2 == 0 {
            for &u in rows.iter().rev() {
                order.push(u * n + (s - u));
            }
        } else {
            for &u in &rows {
                order.push(u * n + (s - u));
            }
        }
    }
    order
}

/// The first `c` subbands in zigzag order.
pub fn chroma_channel_mask(n: usize, c: usize) -> Result<Vec<usize>, crate::Error> {
    if c == 0 || c > n * n {
        return Err(crate::Error::InvalidConfig(format!(
            "chroma channel count must be in 1..={}, got {c}",
            n * n
        )));
    }
    let mut order = zigzag_order(n);
    order.truncate(c);
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    const JPEG_ZIGZAG: [usize; 64] = [
        0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14,
        21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53,
        60, 61, 54, 47, 55, 62, 63,
    ];

    #[test]
    fn zigzag_matches_jpeg_table() {
        assert_eq!(zigzag_order(8), JPEG_ZIGZAG.to_vec());
        assert_eq!(zigzag_order(1), vec![0]);
        assert_eq!(zigzag_order(2), vec![0, 1, 2, 3]);
    }

    #[test]
    fn mask_examples() {
        assert_eq!(chroma_channel_mask(8, 64).unwrap().len(), 64);
        assert_eq!(chroma_channel_mask(8, 1).unwrap(), vec![0]);
        let pairs: Vec<(usize, usize)> = chroma_channel_mask(8, 8).unwrap().iter().map(|&c| (c / 8, c % 8)).collect();
        assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2), (0, 3), (1, 2)]);
        assert!(chroma_channel_mask(8, 0).is_err());
        assert!(chroma_channel_mask(8, 65).is_err());
    }

    #[test]
    fn basis_is_orthonormal() {
        let d = Dct::new(8);
        for a in 0..8 {
            for b in 0..8 {
                let dot: f64 = (0..8).map(|i| d.basis(a, i) * d.basis(b, i)).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_block_is_dc_only() {
        let d = Dct::new(8);
        let block = vec![0.3; 64];
        let mut out = vec![0.0; 64];
        d.forward(&block, &mut out);
        assert!((out[0] - 8.0 * 0.3).abs() < 1e-12);
        assert!(out[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn basis_block_maps_to_single_channel() {
        let d = Dct::new(8);
        for ch in [1, 8, 27, 63] {
            let mut out = vec![0.0; 64];
            d.forward(&d.basis_image(ch), &mut out);
            for (i, c) in out.iter().enumerate() {
                let want = if i == ch { 1.0 } else { 0.0 };
                assert!((c - want).abs() < 1e-6);
            }
        }
        // horizontal frequency 1 varies along x only
        let b = d.basis_image(1);
        for x in 0..8 {
            for y in 1..8 {
                assert!((b[y * 8 + x] - b[x]).abs() < 1e-15);
            }
        }
        assert!(b[0] > 0.0 && b[7] < 0.0);
    }

    #[test]
    fn inverse_roundtrip() {
        let d = Dct::new(8);
        let block: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64 / 10.0 - 0.4).collect();
        let mut c = vec![0.0; 64];
        let mut back = vec![0.0; 64];
        d.forward(&block, &mut c);
        d.inverse(&c, &mut back);
        for (a, b) in block.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
