//! Interpolants with exact definite integrals.

use crate::{Error, Result};

/// Piecewise polynomial `y(x)`, integrable in closed form.
pub(crate) trait Integrable {
    fn integrate(&self, a: f64, b: f64) -> f64;
    #[cfg(test)]
    fn eval(&self, x: f64) -> f64;
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes with
/// the three-point shape-preserving end conditions).
#[derive(Debug, Clone)]
pub(crate) struct Pchip {
    xs: Vec<f64>,
    /// Per segment: coefficients of `c0 + c1·s + c2·s² + c3·s³`, `s = x − x_k`.
    coeffs: Vec<[f64; 4]>,
}

fn same_sign(a: f64, b: f64) -> bool {
    (a > 0.0 && b > 0.0) || (a < 0.0 && b < 0.0)
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if !same_sign(d, m0) {
        0.0
    } else if !same_sign(m0, m1) && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

fn check_knots(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Curve(format!("need at least 2 knots, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Curve("non-finite knot".into()));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Curve("knots must be strictly increasing".into()));
    }
    Ok(())
}

impl Pchip {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        check_knots(xs, ys)?;
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let m: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d = vec![m[0]; 2];
        } else {
            for k in 1..n - 1 {
                if same_sign(m[k - 1], m[k]) {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / m[k - 1] + w2 / m[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], m[0], m[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
        }
        let coeffs = (0..n - 1)
            .map(|k| {
                let (hk, mk) = (h[k], m[k]);
                [
                    ys[k],
                    d[k],
                    (3.0 * mk - 2.0 * d[k] - d[k + 1]) / hk,
                    (d[k] + d[k + 1] - 2.0 * mk) / (hk * hk),
                ]
            })
            .collect();
        Ok(Self { xs: xs.to_vec(), coeffs })
    }

    #[cfg(test)]
    fn segment(&self, x: f64) -> usize {
        self.xs[1..self.xs.len() - 1].partition_point(|&k| k <= x)
    }
}

fn poly_antiderivative(c: &[f64; 4], s: f64) -> f64 {
    s * (c[0] + s * (c[1] / 2.0 + s * (c[2] / 3.0 + s * c[3] / 4.0)))
}

impl Integrable for Pchip {
    fn integrate(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.integrate(b, a);
        }
        let mut total = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            let (lo, hi) = (self.xs[k], self.xs[k + 1]);
            // The first and last segments extend to cover the whole query.
            let lo = if k == 0 { a.min(lo) } else { lo };
            let hi = if k + 1 == self.coeffs.len() { b.max(hi) } else { hi };
            let (s0, s1) = (a.max(lo), b.min(hi));
            if s1 > s0 {
                let x0 = self.xs[k];
                total += poly_antiderivative(c, s1 - x0) - poly_antiderivative(c, s0 - x0);
            }
        }
        total
    }

    #[cfg(test)]
    fn eval(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let c = &self.coeffs[k];
        let s = x - self.xs[k];
        c[0] + s * (c[1] + s * (c[2] + s * c[3]))
    }
}

/// Least-squares cubic polynomial `y(x)`; exact through four points.
#[derive(Debug, Clone)]
pub(crate) struct Cubic {
    center: f64,
    scale: f64,
    /// Coefficients in the normalized variable `u = (x − center)/scale`.
    coeffs: [f64; 4],
}

impl Cubic {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        check_knots(xs, ys)?;
        if xs.len() < 4 {
            return Err(Error::Curve(format!(
                "cubic fit needs at least 4 points, got {}",
                xs.len()
            )));
        }
        let n = xs.len() as f64;
        let center = xs.iter().sum::<f64>() / n;
        let scale = (xs.iter().map(|x| (x - center).powi(2)).sum::<f64>() / n).sqrt();
        let mut ata = [[0.0f64; 4]; 4];
        let mut aty = [0.0f64; 4];
        for (&x, &y) in xs.iter().zip(ys) {
            let u = (x - center) / scale;
            let pow = [1.0, u, u * u, u * u * u];
            for i in 0..4 {
                aty[i] += pow[i] * y;
                for j in 0..4 {
                    ata[i][j] += pow[i] * pow[j];
                }
            }
        }
        let coeffs = solve4(ata, aty).ok_or_else(|| Error::Curve("singular cubic fit".into()))?;
        Ok(Self { center, scale, coeffs })
    }

    fn antiderivative(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.scale;
        let c = &self.coeffs;
        self.scale * u * (c[0] + u * (c[1] / 2.0 + u * (c[2] / 3.0 + u * c[3] / 4.0)))
    }
}

impl Integrable for Cubic {
    fn integrate(&self, a: f64, b: f64) -> f64 {
        self.antiderivative(b) - self.antiderivative(a)
    }

    #[cfg(test)]
    fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.scale;
        let c = &self.coeffs;
        c[0] + u * (c[1] + u * (c[2] + u * c[3]))
    }
}

/// Gaussian elimination with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_reproduces_lines_and_interpolates() {
        let xs = [0.0, 1.0, 3.0, 4.5];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let p = Pchip::new(&xs, &ys).unwrap();
        for x in [0.0, 0.3, 1.0, 2.2, 4.5] {
            assert!((p.eval(x) - (2.0 * x - 1.0)).abs() < 1e-12);
        }
        // antiderivative x² − x
        let want = (16.0 - 4.0) - (0.25 - 0.5);
        assert!((p.integrate(0.5, 4.0) - want).abs() < 1e-12);
        for (x, y) in xs.iter().zip(&ys) {
            assert!((p.eval(*x) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn pchip_is_monotone_on_monotone_data() {
        let xs = [0.0, 1.0, 1.5, 4.0, 4.2, 9.0];
        let ys = [0.0, 0.1, 3.0, 3.05, 7.0, 7.1];
        let p = Pchip::new(&xs, &ys).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=900 {
            let v = p.eval(i as f64 / 100.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn pchip_integral_matches_quadrature() {
        let xs = [26.0, 28.5, 31.2, 34.3, 37.4];
        let ys = [-1.3, -0.95, -0.6, -0.3, -0.06];
        let p = Pchip::new(&xs, &ys).unwrap();
        let (a, b) = (27.1, 36.0);
        let n = 200_000;
        let h = (b - a) / n as f64;
        let simpson: f64 = (0..n)
            .map(|i| {
                let x0 = a + i as f64 * h;
                h / 6.0 * (p.eval(x0) + 4.0 * p.eval(x0 + h / 2.0) + p.eval(x0 + h))
            })
            .sum();
        assert!((p.integrate(a, b) - simpson).abs() < 1e-9);
    }

    #[test]
    fn cubic_is_exact_on_cubics() {
        let f = |x: f64| 0.5 - 2.0 * x + 0.25 * x * x - 0.01 * x * x * x;
        let xs = [25.0, 28.0, 31.5, 33.0, 37.0];
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let c = Cubic::fit(&xs, &ys).unwrap();
        for x in [25.0, 30.0, 36.9] {
            assert!((c.eval(x) - f(x)).abs() < 1e-9);
        }
        let anti = |x: f64| 0.5 * x - x * x + 0.25 * x.powi(3) / 3.0 - 0.01 * x.powi(4) / 4.0;
        assert!((c.integrate(26.0, 35.0) - (anti(35.0) - anti(26.0))).abs() < 1e-8);
    }

    #[test]
    fn knot_validation() {
        assert!(Pchip::new(&[0.0], &[1.0]).is_err());
        assert!(Pchip::new(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(Pchip::new(&[0.0, f64::NAN], &[1.0, 2.0]).is_err());
        assert!(Cubic::fit(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
