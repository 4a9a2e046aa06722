//! 32-bit range coder with byte-wise renormalization and carry propagation.
//!
//! Interval bounds are computed as `floor(range·cum / 2^16)` with a 64-bit
//! product, so the only rate lost to integer arithmetic is the flooring of
//! each bound. A carry out of `low` is resolved through a one-byte cache and a
//! count of pending `0xFF` bytes. Output is big-endian; the encoder flushes
//! four bytes of `low` at the end, so the decoder consumes exactly the bytes
//! the encoder produced.

use super::cdf::{CdfTable, PRECISION_BITS};
use super::EntropyError;

const TOP: u32 = 1 << 24;

/// Offset and width of the sub-interval `[cum, cum + freq)` of `range`.
fn split(range: u32, cum: u32, freq: u32) -> (u32, u32) {
    let r = range as u64;
    let a = (r * cum as u64) >> PRECISION_BITS;
    let b = (r * (cum + freq) as u64) >> PRECISION_BITS;
    (a as u32, (b - a) as u32)
}

#[derive(Debug, Clone)]
pub struct RangeEncoder {
    /// 32-bit window plus one carry bit.
    low: u64,
    range: u32,
    cache: u8,
    pending: u64,
    primed: bool,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            pending: 1,
            primed: false,
            out: Vec::new(),
        }
    }

    /// Narrows the interval to `[cum, cum + freq) / 2^16`.
    pub fn encode_interval(&mut self, cum: u32, freq: u32) {
        debug_assert!(freq > 0 && cum + freq <= 1 << PRECISION_BITS);
        let (start, width) = split(self.range, cum, freq);
        self.low += start as u64;
        self.range = width;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low >= 1 << 32 {
            let carry = (self.low >> 32) as u8;
            // the very first cached byte is a placeholder that can never carry
            if self.primed {
                self.out.push(self.cache.wrapping_add(carry));
            }
            self.primed = true;
            for _ in 1..self.pending {
                self.out.push(0xFFu8.wrapping_add(carry));
            }
            self.pending = 0;
            self.cache = (self.low >> 24) as u8;
        }
        self.pending += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    /// Encodes symbol index `index` of `table`.
    pub fn encode_index(&mut self, table: &CdfTable, index: usize) {
        self.encode_interval(table.cum(index), table.freq(index));
    }

    /// Encodes the value `value` of `table`.
    pub fn encode(&mut self, table: &CdfTable, value: i32) -> Result<(), EntropyError> {
        let i = table.index_of(value)?;
        self.encode_index(table, i);
        Ok(())
    }

    /// Writes the low `nbits` (≤ 16) bits of `value` with uniform probability.
    pub fn encode_bits(&mut self, value: u32, nbits: u32) {
        debug_assert!(nbits <= PRECISION_BITS);
        if nbits == 0 {
            return;
        }
        let v = value & ((1 << nbits) - 1);
        let shift = PRECISION_BITS - nbits;
        self.encode_interval(v << shift, 1 << shift);
    }

    /// Bytes emitted so far, excluding cached and flush bytes.
    pub fn bytes_written(&self) -> usize {
        self.out.len()
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

#[derive(Debug, Clone)]
pub struct RangeDecoder<'a> {
    /// Offset of the code value inside the current interval.
    code: u32,
    range: u32,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(bytes: &'a [u8]) -> Result<Self, EntropyError> {
        if bytes.len() < 4 {
            return Err(EntropyError::Truncated);
        }
        let code = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
        Ok(Self {
            code,
            range: u32::MAX,
            bytes,
            pos: 4,
        })
    }

    fn next_byte(&mut self) -> Result<u8, EntropyError> {
        let b = *self.bytes.get(self.pos).ok_or(EntropyError::Truncated)?;
        self.pos += 1;
        Ok(b)
    }

    /// Largest cumulative value `c` with `floor(range·c / 2^16) ≤ code`.
    fn target(&self) -> Result<u32, EntropyError> {
        if self.code >= self.range {
            return Err(EntropyError::Corrupt("code outside the coding interval".into()));
        }
        let t = (((self.code as u64 + 1) << PRECISION_BITS) - 1) / self.range as u64;
        Ok(t as u32)
    }

    fn consume(&mut self, cum: u32, freq: u32) -> Result<(), EntropyError> {
        let (start, width) = split(self.range, cum, freq);
        self.code -= start;
        self.range = width;
        while self.range < TOP {
            self.code = (self.code << 8) | self.next_byte()? as u32;
            self.range <<= 8;
        }
        Ok(())
    }

    pub fn decode_index(&mut self, table: &CdfTable) -> Result<usize, EntropyError> {
        let target = self.target()?;
        let i = table.lookup(target);
        self.consume(table.cum(i), table.freq(i))?;
        Ok(i)
    }

    pub fn decode(&mut self, table: &CdfTable) -> Result<i32, EntropyError> {
        let i = self.decode_index(table)?;
        Ok(table.value_of(i))
    }

    pub fn decode_bits(&mut self, nbits: u32) -> Result<u32, EntropyError> {
        if nbits == 0 {
            return Ok(0);
        }
        let shift = PRECISION_BITS - nbits;
        let v = self.target()? >> shift;
        self.consume(v << shift, 1 << shift)?;
        Ok(v)
    }

    /// Bytes consumed so far (including the four priming bytes).
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn is_exhausted(&self) -> bool {
        self.pos == self.bytes.len()
    }

    /// Checks that the stream ended exactly where the encoder stopped.
    ///
    /// The encoder flushes the exact lower bound of its final interval, so a
    /// valid stream leaves a zero offset and no unread bytes.
    pub fn finish(&self) -> Result<(), EntropyError> {
        if !self.is_exhausted() {
            return Err(EntropyError::Corrupt(format!(
                "{} unread bytes",
                self.bytes.len() - self.pos
            )));
        }
        if self.code != 0 {
            return Err(EntropyError::Corrupt("stream tail does not match the coded interval".into()));
        }
        Ok(())
    }
}
