//! Bit-level I/O and wire float widths.
//!
//! Cost accounting in this crate is exact, so serialization happens at bit
//! granularity: a [`BitStream`] holds a sequence of variable-width fields and
//! its length is the sum of the field widths, nothing more. Fields are stored
//! least-significant-bit first.

use crate::{Error, Result};

/// Bit widths used on the wire: `r` per floating value, `r_bar` per node
/// center, `r_seed` per random seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitSizes {
    r: u32,
    r_bar: u32,
    r_seed: u32,
}

impl BitSizes {
    /// `r` must be 16, 32 or 64; `r_bar` must be 0 (data-independent center)
    /// or equal to `r`. Seeds are always 64 bits.
    pub fn new(r: u32, r_bar: u32) -> Result<Self> {
        if !matches!(r, 16 | 32 | 64) {
            return Err(Error::InvalidArgument(format!("r={r}, must be 16, 32 or 64")));
        }
        if r_bar != 0 && r_bar != r {
            return Err(Error::InvalidArgument(format!("r_bar={r_bar}, must be 0 or r={r}")));
        }
        Ok(BitSizes { r, r_bar, r_seed: 64 })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn r_bar(&self) -> u32 {
        self.r_bar
    }

    pub fn r_seed(&self) -> u32 {
        self.r_seed
    }
}

impl Default for BitSizes {
    /// r = 16 with a transmitted center, the configuration used throughout
    /// the trade-off experiments.
    fn default() -> Self {
        BitSizes { r: 16, r_bar: 16, r_seed: 64 }
    }
}

/// Number of bits needed to address `{0, .., d-1}`: `ceil(log2 d)`.
pub fn ceil_log2(d: usize) -> u32 {
    debug_assert!(d >= 1);
    usize::BITS - (d - 1).leading_zeros()
}

/// Growable bit buffer with a write end and a read cursor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitStream {
    words: Vec<u64>,
    len: usize,
    pos: usize,
}

impl BitStream {
    pub fn new() -> Self {
        BitStream::default()
    }

    /// Total bits written.
    pub fn bit_len(&self) -> usize {
        self.len
    }

    /// Bits left to read.
    pub fn remaining(&self) -> usize {
        self.len - self.pos
    }

    /// Append the low `width` bits of `value` (LSB first). `width <= 64`.
    pub fn write(&mut self, value: u64, width: u32) {
        assert!(width <= 64, "field width {width} > 64");
        if width == 0 {
            return;
        }
        let value = if width == 64 { value } else { value & ((1u64 << width) - 1) };
        let off = (self.len % 64) as u32;
        let word = self.len / 64;
        if word == self.words.len() {
            self.words.push(0);
        }
        self.words[word] |= value << off;
        if off + width > 64 {
            self.words.push(value >> (64 - off));
        }
        self.len += width as usize;
    }

    /// Read the next `width` bits from the cursor.
    pub fn read(&mut self, width: u32) -> Result<u64> {
        let v = self.peek_at(self.pos, width)?;
        self.pos += width as usize;
        Ok(v)
    }

    /// Read `width` bits at an absolute position without moving the cursor.
    pub fn peek_at(&self, pos: usize, width: u32) -> Result<u64> {
        assert!(width <= 64);
        if pos + width as usize > self.len {
            return Err(Error::Truncated {
                needed: width as usize,
                available: self.len.saturating_sub(pos),
            });
        }
        if width == 0 {
            return Ok(0);
        }
        let off = (pos % 64) as u32;
        let word = pos / 64;
        let mut v = self.words[word] >> off;
        if off + width > 64 {
            v |= self.words[word + 1] << (64 - off);
        }
        if width < 64 {
            v &= (1u64 << width) - 1;
        }
        Ok(v)
    }

    /// Reset the read cursor to the start.
    pub fn rewind(&mut self) {
        self.pos = 0;
    }

    /// Append every bit of `other`.
    pub fn append(&mut self, other: &BitStream) {
        let mut p = 0;
        while p < other.len {
            let w = (other.len - p).min(64) as u32;
            let v = other.peek_at(p, w).expect("in-range");
            self.write(v, w);
            p += w as usize;
        }
    }

    /// Bits packed into bytes, LSB first within each byte; the final partial
    /// byte is zero-padded.
    pub fn to_padded_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(n);
        let mut p = 0;
        while p < self.len {
            let w = (self.len - p).min(8) as u32;
            out.push(self.peek_at(p, w).expect("in-range") as u8);
            p += 8;
        }
        debug_assert_eq!(out.len(), n);
        out
    }

    /// Rebuild a stream of `bit_len` bits from its padded byte form.
    pub fn from_padded_bytes(bytes: &[u8], bit_len: usize) -> Result<Self> {
        if bytes.len() < bit_len.div_ceil(8) {
            return Err(Error::Truncated { needed: bit_len, available: bytes.len() * 8 });
        }
        let mut s = BitStream::new();
        for (i, &b) in bytes.iter().enumerate() {
            let have = bit_len.saturating_sub(i * 8);
            if have == 0 {
                break;
            }
            s.write(u64::from(b), have.min(8) as u32);
        }
        Ok(s)
    }
}

/// Narrow a value to the `r`-bit IEEE-754 wire representation
/// (round-to-nearest-even) and return the bit pattern.
pub fn float_to_wire_bits(v: f64, r: u32) -> u64 {
    match r {
        16 => u64::from(half::f16::from_f64(v).to_bits()),
        32 => u64::from((v as f32).to_bits()),
        64 => v.to_bits(),
        _ => unreachable!("BitSizes guarantees r in {{16,32,64}}"),
    }
}

/// Widen an `r`-bit wire pattern back to `f64` (exact).
pub fn float_from_wire_bits(bits: u64, r: u32) -> f64 {
    match r {
        16 => f64::from(half::f16::from_bits(bits as u16)),
        32 => f64::from(f32::from_bits(bits as u32)),
        64 => f64::from_bits(bits),
        _ => unreachable!("BitSizes guarantees r in {{16,32,64}}"),
    }
}

/// Round-trip a value through the `r`-bit wire representation.
pub fn narrow_to_wire(v: f64, r: u32) -> f64 {
    float_from_wire_bits(float_to_wire_bits(v, r), r)
}
