//! Static and Gaussian probability tables and a 32-bit range coder.

mod cdf;
mod gaussian;
mod range_coder;

pub use cdf::{build_static_cdf, quantize_pmf, CdfTable, PRECISION_BITS, TOTAL_FREQ};
pub use gaussian::{
    build_gaussian_cdf, gaussian_pmf, normal_cdf, GaussianModel, GaussianParams, SIGMA_MAX, SIGMA_MIN, TAIL_SIGMAS,
};
pub use range_coder::{RangeDecoder, RangeEncoder};

pub(crate) use gaussian::{decode_raw_u32, encode_raw_u32};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error("value {value} outside table support [{lo}, {hi}]")]
    SymbolOutOfSupport { value: i32, lo: i32, hi: i32 },
    #[error("histogram has no counts")]
    EmptyHistogram,
    #[error("empty support")]
    EmptySupport,
    #[error("{0} symbols exceed the 16-bit table capacity")]
    TooManySymbols(usize),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("{symbols} symbols but {models} models")]
    ModelCountMismatch { symbols: usize, models: usize },
    #[error("range-coded stream is truncated")]
    Truncated,
    #[error("corrupt range-coded stream: {0}")]
    Corrupt(String),
}

fn model_for<'a>(models: &[&'a CdfTable], i: usize) -> &'a CdfTable {
    if models.len() == 1 {
        models[0]
    } else {
        models[i]
    }
}

fn check_models(symbols: usize, models: usize) -> Result<(), EntropyError> {
    if models == 1 || models == symbols {
        Ok(())
    } else {
        Err(EntropyError::ModelCountMismatch { symbols, models })
    }
}

/// Encodes `symbols[i]` with `models[i]`; a single model applies to all.
pub fn rc_encode(symbols: &[i32], models: &[&CdfTable]) -> Result<Vec<u8>, EntropyError> {
    check_models(symbols.len(), models.len())?;
    let mut enc = RangeEncoder::new();
    for (i, &s) in symbols.iter().enumerate() {
        enc.encode(model_for(models, i), s)?;
    }
    Ok(enc.finish())
}

/// Decodes `count` symbols; `models` follows the [`rc_encode`] convention.
pub fn rc_decode(bytes: &[u8], models: &[&CdfTable], count: usize) -> Result<Vec<i32>, EntropyError> {
    check_models(count, models.len())?;
    let mut dec = RangeDecoder::new(bytes)?;
    let out = (0..count)
        .map(|i| dec.decode(model_for(models, i)))
        .collect::<Result<Vec<_>, _>>()?;
    dec.finish()?;
    Ok(out)
}

/// Ideal code length `Σ −log2 p(s_i)` under the quantized tables.
pub fn estimate_bits(symbols: &[i32], models: &[&CdfTable]) -> Result<f64, EntropyError> {
    check_models(symbols.len(), models.len())?;
    let mut acc = crate::util::KahanSum::default();
    for (i, &s) in symbols.iter().enumerate() {
        acc.add(model_for(models, i).bits(s)?);
    }
    Ok(acc.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_stream() {
        let t = CdfTable::uniform(4, 0).unwrap();
        let bytes = rc_encode(&[], &[&t]).unwrap();
        assert!(bytes.len() <= 8);
        assert!(rc_decode(&bytes, &[&t], 0).unwrap().is_empty());
        assert_eq!(estimate_bits(&[], &[&t]).unwrap(), 0.0);
    }

    #[test]
    fn single_symbol_alphabet_costs_nothing() {
        let t = build_static_cdf(&[7], 3).unwrap();
        let syms = vec![3; 1000];
        let bytes = rc_encode(&syms, &[&t]).unwrap();
        assert!(bytes.len() <= 8, "{}", bytes.len());
        assert_eq!(rc_decode(&bytes, &[&t], 1000).unwrap(), syms);
        assert_eq!(estimate_bits(&syms, &[&t]).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let t = CdfTable::uniform(4, 0).unwrap();
        assert!(matches!(
            rc_encode(&[5], &[&t]),
            Err(EntropyError::SymbolOutOfSupport { value: 5, lo: 0, hi: 3 })
        ));
        assert!(matches!(
            rc_encode(&[0, 1, 2], &[&t, &t]),
            Err(EntropyError::ModelCountMismatch { .. })
        ));
        let syms: Vec<i32> = (0..400).map(|i| i % 4).collect();
        let bytes = rc_encode(&syms, &[&t]).unwrap();
        let cut = &bytes[..bytes.len() - 10];
        assert!(matches!(rc_decode(cut, &[&t], 400), Err(EntropyError::Truncated)));
        assert!(matches!(rc_decode(&bytes[..2], &[&t], 1), Err(EntropyError::Truncated)));
    }

    #[test]
    fn every_byte_matters() {
        let t = build_static_cdf(&[5, 3, 1, 1], 0).unwrap();
        let syms: Vec<i32> = (0..500).map(|i| (i * 7 % 10).min(3)).collect();
        let bytes = rc_encode(&syms, &[&t]).unwrap();
        for pos in 0..bytes.len() {
            for flip in [0x01u8, 0x80, 0xFF] {
                let mut b = bytes.clone();
                b[pos] ^= flip;
                if let Ok(out) = rc_decode(&b, &[&t], syms.len()) {
                    assert_ne!(out, syms, "flip {flip:#x} at {pos}");
                }
            }
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(rc_decode(&long, &[&t], syms.len()).is_err());
    }

    #[test]
    fn mixed_models_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tables: Vec<CdfTable> = (0..8)
            .map(|k| {
                let hist: Vec<u64> = (0..(k * 7 + 2)).map(|_| rng.gen_range(0..50)).collect();
                let hist = if hist.iter().all(|&c| c == 0) { vec![1; hist.len()] } else { hist };
                build_static_cdf(&hist, -(k as i32)).unwrap()
            })
            .collect();
        let mut syms = Vec::new();
        let mut models = Vec::new();
        for _ in 0..3000 {
            let t = &tables[rng.gen_range(0..tables.len())];
            let (lo, hi) = t.value_range();
            syms.push(rng.gen_range(lo..=hi));
            models.push(t);
        }
        let bytes = rc_encode(&syms, &models).unwrap();
        assert_eq!(rc_decode(&bytes, &models, syms.len()).unwrap(), syms);
    }
}
