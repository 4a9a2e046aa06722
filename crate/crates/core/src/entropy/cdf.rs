use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::EntropyError;

/// Probability precision in bits.
pub const PRECISION_BITS: u32 = 16;
/// Sum of all symbol frequencies in a table.
pub const TOTAL_FREQ: u32 = 1 << PRECISION_BITS;

/// Quantized cumulative distribution over a contiguous integer alphabet.
///
/// `cumulative` has `S + 1` entries, starts at 0, ends at 2^16 and is
/// strictly increasing, so every symbol has at least one quantum.
/// Symbol index `i` stands for the value `offset + i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdfTable {
    cumulative: Vec<u32>,
    offset: i32,
}

impl CdfTable {
    /// Builds a table from per-symbol frequencies that already sum to 2^16.
    pub fn from_frequencies(freqs: &[u32], offset: i32) -> Result<Self, EntropyError> {
        if freqs.is_empty() {
            return Err(EntropyError::EmptySupport);
        }
        if freqs.len() > TOTAL_FREQ as usize {
            return Err(EntropyError::TooManySymbols(freqs.len()));
        }
        let mut cumulative = Vec::with_capacity(freqs.len() + 1);
        let mut acc = 0u32;
        cumulative.push(0);
        for &f in freqs {
            if f == 0 {
                return Err(EntropyError::InvalidTable("zero-frequency symbol".into()));
            }
            acc = acc
                .checked_add(f)
                .ok_or_else(|| EntropyError::InvalidTable("frequency overflow".into()))?;
            cumulative.push(acc);
        }
        if acc != TOTAL_FREQ {
            return Err(EntropyError::InvalidTable(format!(
                "frequencies sum to {acc}, expected {TOTAL_FREQ}"
            )));
        }
        Ok(Self { cumulative, offset })
    }

    /// Uniform table over `n` symbols (n ≤ 2^16).
    pub fn uniform(n: usize, offset: i32) -> Result<Self, EntropyError> {
        build_static_cdf(&vec![1u64; n], offset)
    }

    pub fn symbol_count(&self) -> usize {
        self.cumulative.len() - 1
    }

    pub fn offset(&self) -> i32 {
        self.offset
    }

    /// Smallest and largest representable values.
    pub fn value_range(&self) -> (i32, i32) {
        (self.offset, self.offset + self.symbol_count() as i32 - 1)
    }

    pub fn cumulative(&self) -> &[u32] {
        &self.cumulative
    }

    pub fn frequencies(&self) -> Vec<u32> {
        self.cumulative.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn cum(&self, index: usize) -> u32 {
        self.cumulative[index]
    }

    pub fn freq(&self, index: usize) -> u32 {
        self.cumulative[index + 1] - self.cumulative[index]
    }

    pub fn index_of(&self, value: i32) -> Result<usize, EntropyError> {
        let idx = value as i64 - self.offset as i64;
        if idx < 0 || idx >= self.symbol_count() as i64 {
            let (lo, hi) = self.value_range();
            return Err(EntropyError::SymbolOutOfSupport { value, lo, hi });
        }
        Ok(idx as usize)
    }

    pub fn value_of(&self, index: usize) -> i32 {
        self.offset + index as i32
    }

    /// Symbol index whose interval contains `target` (< 2^16).
    pub fn lookup(&self, target: u32) -> usize {
        self.cumulative.partition_point(|&c| c <= target) - 1
    }

    /// Quantized probability of symbol index `index`.
    pub fn probability_at(&self, index: usize) -> f64 {
        self.freq(index) as f64 / TOTAL_FREQ as f64
    }

    /// Ideal code length of `value` in bits.
    pub fn bits(&self, value: i32) -> Result<f64, EntropyError> {
        let i = self.index_of(value)?;
        Ok(index_bits(self.freq(i)))
    }
}

pub(crate) fn index_bits(freq: u32) -> f64 {
    PRECISION_BITS as f64 - (freq as f64).log2()
}

/// Quantizes a probability vector to 16-bit frequencies.
///
/// Each symbol gets `max(1, floor(p·2^16))`; leftover quanta go to the
/// largest fractional remainders (ties to the lower index) and any excess
/// created by the floor is taken one quantum at a time from the currently
/// largest frequency.
pub fn quantize_pmf(probs: &[f64]) -> Result<Vec<u32>, EntropyError> {
    let n = probs.len();
    if n == 0 {
        return Err(EntropyError::EmptySupport);
    }
    if n > TOTAL_FREQ as usize {
        return Err(EntropyError::TooManySymbols(n));
    }
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(EntropyError::InvalidTable("probabilities must be finite, >= 0 and not all zero".into()));
    }
    let scale = TOTAL_FREQ as f64 / total;
    let mut freqs = Vec::with_capacity(n);
    let mut remainders = Vec::with_capacity(n);
    for (i, &p) in probs.iter().enumerate() {
        let ideal = p * scale;
        let base = ideal.floor();
        freqs.push((base as u32).max(1));
        remainders.push((ideal - base, i));
    }
    let assigned: i64 = freqs.iter().map(|&f| f as i64).sum();
    let mut diff = TOTAL_FREQ as i64 - assigned;
    if diff > 0 {
        remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut k = 0;
        while diff > 0 {
            freqs[remainders[k % n].1] += 1;
            diff -= 1;
            k += 1;
        }
    } else if diff < 0 {
        let mut heap: BinaryHeap<(u32, Reverse<usize>)> =
            freqs.iter().enumerate().map(|(i, &f)| (f, Reverse(i))).collect();
        while diff < 0 {
            let (f, Reverse(i)) = heap.pop().expect("non-empty");
            debug_assert!(f > 1, "cannot satisfy probability floor");
            freqs[i] = f - 1;
            heap.push((f - 1, Reverse(i)));
            diff += 1;
        }
    }
    Ok(freqs)
}

/// Static table proportional to `histogram`, with a floor of one quantum.
pub fn build_static_cdf(histogram: &[u64], offset: i32) -> Result<CdfTable, EntropyError> {
    if histogram.len() > TOTAL_FREQ as usize {
        return Err(EntropyError::TooManySymbols(histogram.len()));
    }
    if histogram.iter().all(|&c| c == 0) {
        return Err(EntropyError::EmptyHistogram);
    }
    let probs: Vec<f64> = histogram.iter().map(|&c| c as f64).collect();
    CdfTable::from_frequencies(&quantize_pmf(&probs)?, offset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_examples() {
        assert_eq!(
            build_static_cdf(&[5, 5, 5, 5], 0).unwrap().frequencies(),
            vec![16384; 4]
        );
        assert_eq!(
            build_static_cdf(&[3, 1], 0).unwrap().frequencies(),
            vec![49152, 16384]
        );
        assert_eq!(
            build_static_cdf(&[1, 0], 0).unwrap().frequencies(),
            vec![65535, 1]
        );
    }

    #[test]
    fn static_errors() {
        assert!(matches!(build_static_cdf(&[0, 0], 0), Err(EntropyError::EmptyHistogram)));
        assert!(matches!(build_static_cdf(&[], 0), Err(EntropyError::EmptyHistogram)));
        assert!(matches!(
            build_static_cdf(&vec![1; 65537], 0),
            Err(EntropyError::TooManySymbols(65537))
        ));
        let full = build_static_cdf(&vec![1; 65536], 0).unwrap();
        assert!(full.frequencies().iter().all(|&f| f == 1));
    }

    #[test]
    fn lookup_and_index() {
        let t = build_static_cdf(&[3, 1], -1).unwrap();
        assert_eq!(t.lookup(0), 0);
        assert_eq!(t.lookup(49151), 0);
        assert_eq!(t.lookup(49152), 1);
        assert_eq!(t.lookup(65535), 1);
        assert_eq!(t.index_of(-1).unwrap(), 0);
        assert_eq!(t.index_of(0).unwrap(), 1);
        assert!(t.index_of(1).is_err());
        assert_eq!(t.value_of(1), 0);
        assert!((t.bits(0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_malformed_frequencies() {
        assert!(CdfTable::from_frequencies(&[65535], 0).is_err());
        assert!(CdfTable::from_frequencies(&[65536, 0], 0).is_err());
        assert!(CdfTable::from_frequencies(&[], 0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn quantized_tables_are_valid(hist in proptest::collection::vec(0u64..10_000, 1..600)) {
            proptest::prop_assume!(hist.iter().any(|&c| c > 0));
            let t = build_static_cdf(&hist, 0).unwrap();
            let c = t.cumulative();
            proptest::prop_assert_eq!(c[0], 0);
            proptest::prop_assert_eq!(*c.last().unwrap(), TOTAL_FREQ);
            proptest::prop_assert!(c.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
