//! Discretized Gaussian models with escape symbols for out-of-support values.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::cdf::{index_bits, quantize_pmf, CdfTable};
use super::range_coder::{RangeDecoder, RangeEncoder};
use super::EntropyError;

pub const SIGMA_MIN: f64 = 0.11;
pub const SIGMA_MAX: f64 = 256.0;
/// Half-width of the explicit support in standard deviations.
pub const TAIL_SIGMAS: f64 = 6.0;

/// Raw bits spent on the bit length of an escaped excess.
const ESCAPE_LEN_BITS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianParams {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma }
    }

    /// Copy with `sigma` clamped to `[SIGMA_MIN, SIGMA_MAX]`.
    pub fn clamped(self) -> Self {
        let sigma = if self.sigma.is_nan() {
            SIGMA_MIN
        } else {
            self.sigma.clamp(SIGMA_MIN, SIGMA_MAX)
        };
        Self { mu: self.mu, sigma }
    }

    /// Integer interval `[floor(μ − 6σ), ceil(μ + 6σ)]` of the clamped model.
    pub fn support(self) -> (i32, i32) {
        let p = self.clamped();
        let lo = (p.mu - TAIL_SIGMAS * p.sigma).floor();
        let hi = (p.mu + TAIL_SIGMAS * p.sigma).ceil();
        (lo as i32, hi as i32)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Mass of `[a, b]` under the standard normal, computed on the side of
/// the distribution where it is not a difference of numbers near 1.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        normal_cdf(-a) - normal_cdf(-b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    }
}

/// Unquantized probabilities of `[escape-low, lo..=hi, escape-high]`.
pub fn gaussian_pmf(params: GaussianParams, lo: i32, hi: i32) -> Result<Vec<f64>, EntropyError> {
    if lo > hi {
        return Err(EntropyError::EmptySupport);
    }
    let span = hi as i64 - lo as i64 + 3;
    if span > super::cdf::TOTAL_FREQ as i64 {
        return Err(EntropyError::TooManySymbols(span as usize));
    }
    let p = params.clamped();
    let z = |v: f64| (v - p.mu) / p.sigma;
    let mut pmf = Vec::with_capacity(span as usize);
    pmf.push(normal_cdf(z(lo as f64 - 0.5)));
    for s in lo..=hi {
        pmf.push(normal_mass(z(s as f64 - 0.5), z(s as f64 + 0.5)));
    }
    pmf.push(normal_cdf(-z(hi as f64 + 0.5)));
    Ok(pmf)
}

/// Quantized table over `[escape-low, lo..=hi, escape-high]`.
///
/// The table's value offset is `lo − 1`, so escape-low is the value `lo − 1`
/// and escape-high is `hi + 1`.
pub fn build_gaussian_cdf(params: GaussianParams, lo: i32, hi: i32) -> Result<CdfTable, EntropyError> {
    let pmf = gaussian_pmf(params, lo, hi)?;
    CdfTable::from_frequencies(&quantize_pmf(&pmf)?, lo - 1)
}

/// A Gaussian table plus the escape mechanism for values outside its support.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    table: CdfTable,
    lo: i32,
    hi: i32,
}

impl GaussianModel {
    /// Model over the default ±6σ support.
    pub fn new(params: GaussianParams) -> Result<Self, EntropyError> {
        let (lo, hi) = params.support();
        Self::with_support(params, lo, hi)
    }

    pub fn with_support(params: GaussianParams, lo: i32, hi: i32) -> Result<Self, EntropyError> {
        Ok(Self {
            table: build_gaussian_cdf(params, lo, hi)?,
            lo,
            hi,
        })
    }

    pub fn table(&self) -> &CdfTable {
        &self.table
    }

    pub fn support(&self) -> (i32, i32) {
        (self.lo, self.hi)
    }

    fn escape_excess(&self, value: i32) -> Option<(usize, u32)> {
        let v = value as i64;
        if v < self.lo as i64 {
            Some((0, (self.lo as i64 - 1 - v) as u32))
        } else if v > self.hi as i64 {
            Some((self.table.symbol_count() - 1, (v - self.hi as i64 - 1) as u32))
        } else {
            None
        }
    }

    pub fn encode(&self, enc: &mut RangeEncoder, value: i32) {
        match self.escape_excess(value) {
            None => enc.encode_index(&self.table, (value - self.lo + 1) as usize),
            Some((idx, excess)) => {
                enc.encode_index(&self.table, idx);
                encode_raw_u32(enc, excess);
            }
        }
    }

    pub fn decode(&self, dec: &mut RangeDecoder) -> Result<i32, EntropyError> {
        let idx = dec.decode_index(&self.table)?;
        let last = self.table.symbol_count() - 1;
        if idx == 0 || idx == last {
            let excess = decode_raw_u32(dec)? as i64;
            let v = if idx == 0 {
                self.lo as i64 - 1 - excess
            } else {
                self.hi as i64 + 1 + excess
            };
            return i32::try_from(v).map_err(|_| EntropyError::Corrupt(format!("escaped value {v} overflows i32")));
        }
        Ok(self.lo + idx as i32 - 1)
    }

    /// Ideal cost of `value` in bits, including raw escape bits.
    pub fn cost_bits(&self, value: i32) -> f64 {
        match self.escape_excess(value) {
            None => index_bits(self.table.freq((value - self.lo + 1) as usize)),
            Some((idx, excess)) => index_bits(self.table.freq(idx)) + raw_u32_bits(excess) as f64,
        }
    }
}

fn raw_u32_bits(v: u32) -> u32 {
    ESCAPE_LEN_BITS + (32 - v.leading_zeros())
}

/// Writes `v` as a 6-bit length followed by that many bits, high chunk first.
pub(crate) fn encode_raw_u32(enc: &mut RangeEncoder, v: u32) {
    let n = 32 - v.leading_zeros();
    enc.encode_bits(n, ESCAPE_LEN_BITS);
    let mut remaining = n;
    while remaining > 0 {
        let chunk = remaining.min(16);
        remaining -= chunk;
        enc.encode_bits(v >> remaining, chunk);
    }
}

pub(crate) fn decode_raw_u32(dec: &mut RangeDecoder) -> Result<u32, EntropyError> {
    let n = dec.decode_bits(ESCAPE_LEN_BITS)?;
    if n > 32 {
        return Err(EntropyError::Corrupt(format!("escape length {n} exceeds 32 bits")));
    }
    let mut v: u64 = 0;
    let mut remaining = n;
    while remaining > 0 {
        let chunk = remaining.min(16);
        remaining -= chunk;
        v = (v << chunk) | dec.decode_bits(chunk)? as u64;
    }
    Ok(v as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// erf by its positive-term series, switching to the continued fraction
    /// for erfc in the tail.
    fn erf_oracle(x: f64) -> f64 {
        if x < 0.0 {
            return -erf_oracle(-x);
        }
        if x < 3.0 {
            let mut term = x;
            let mut sum = x;
            let mut k = 0.0;
            loop {
                k += 1.0;
                term *= 2.0 * x * x / (2.0 * k + 1.0);
                sum += term;
                if term <= 1e-17 * sum {
                    break;
                }
            }
            2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp() * sum
        } else {
            1.0 - erfc_cf(x)
        }
    }

    fn erfc_cf(x: f64) -> f64 {
        // Lentz-free backward evaluation of erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        let mut f = x;
        for k in (1..200).rev() {
            f = x + (k as f64 / 2.0) / f;
        }
        (-x * x).exp() / std::f64::consts::PI.sqrt() / f
    }

    fn phi_oracle(x: f64) -> f64 {
        let t = x / SQRT_2;
        if t < -3.0 {
            0.5 * erfc_cf(-t)
        } else {
            0.5 * (1.0 + erf_oracle(t))
        }
    }

    #[test]
    fn normal_cdf_matches_oracle() {
        for i in -80..=80 {
            let x = i as f64 * 0.1;
            let (a, b) = (normal_cdf(x), phi_oracle(x));
            assert!((a - b).abs() <= 1e-15 + 1e-12 * b, "x={x}: {a} vs {b}");
        }
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn support_endpoints() {
        assert_eq!(GaussianParams::new(0.0, 1.0).support(), (-6, 6));
        assert_eq!(GaussianParams::new(0.3, 1.0).support(), (-6, 7));
        assert_eq!(GaussianParams::new(0.0, 0.01).support(), (-1, 1));
        let huge = GaussianParams::new(0.0, 1e9).clamped();
        assert_eq!(huge.sigma, SIGMA_MAX);
    }

    #[test]
    fn unit_gaussian_table() {
        let t = build_gaussian_cdf(GaussianParams::new(0.0, 1.0), -6, 6).unwrap();
        assert_eq!(t.symbol_count(), 15);
        let f = t.frequencies();
        let p0 = phi_oracle(0.5) - phi_oracle(-0.5);
        // the one-quantum floor on six tail symbols is paid for by the mode
        assert!((f[7] as f64 / 65536.0 - p0).abs() < 8.0 / 65536.0, "{}", f[7]);
        assert_eq!(f[7], f.iter().copied().max().unwrap());
        assert_eq!(f.iter().sum::<u32>(), 65536);
        assert!(f.iter().all(|&x| x >= 1));
    }

    #[test]
    fn pmf_symmetry_and_mass() {
        for &sigma in &[0.11, 0.5, 1.0, 3.7, 40.0] {
            let p = GaussianParams::new(0.0, sigma);
            let (lo, hi) = p.support();
            let pmf = gaussian_pmf(p, lo, hi).unwrap();
            let n = pmf.len();
            for i in 0..n {
                assert!((pmf[i] - pmf[n - 1 - i]).abs() < 1e-15, "sigma={sigma} i={i}");
            }
            let total: f64 = pmf.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn escapes_roundtrip() {
        let m = GaussianModel::new(GaussianParams::new(0.0, 1.0)).unwrap();
        let values = [0, 3, -6, 6, 7, -7, 100, -1000, i32::MAX, i32::MIN, 65536, -65537];
        let mut enc = RangeEncoder::new();
        for &v in &values {
            m.encode(&mut enc, v);
        }
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes).unwrap();
        for &v in &values {
            assert_eq!(m.decode(&mut dec).unwrap(), v);
        }
        assert!(m.cost_bits(100) > m.cost_bits(6));
    }

    #[test]
    fn rejects_empty_support() {
        assert!(matches!(
            build_gaussian_cdf(GaussianParams::new(0.0, 1.0), 3, 2),
            Err(EntropyError::EmptySupport)
        ));
    }
}
