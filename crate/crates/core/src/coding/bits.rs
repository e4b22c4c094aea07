//! MSB-first bit packing and fixed-length codes.
//!
//! Bit `i` of a stream lives in byte `i / 8` at position `7 - i % 8`, so
//! a hex dump reads in stream order.

use crate::error::{Error, Result};

/// Accumulates bits MSB-first into a byte vector.
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bit: bool) {
        let slot = (self.bit_len % 8) as u32;
        if slot == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 1 << (7 - slot);
        }
        self.bit_len += 1;
    }

    /// Append the low `count` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, count: u32) {
        assert!(count <= 64);
        for k in (0..count).rev() {
            self.push(value >> k & 1 == 1);
        }
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    /// Zero-padded bytes plus the exact bit count.
    pub fn finish(self) -> (Vec<u8>, u64) {
        (self.bytes, self.bit_len)
    }
}

/// Reads bits MSB-first; reads past `bit_len` are an error.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    bit_len: u64,
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], bit_len: u64) -> Result<Self> {
        if (bytes.len() as u64) * 8 < bit_len {
            return Err(Error::Format(format!(
                "bit length {bit_len} exceeds the {} available bytes",
                bytes.len()
            )));
        }
        Ok(Self {
            bytes,
            bit_len,
            pos: 0,
        })
    }

    pub fn read(&mut self) -> Result<bool> {
        if self.pos >= self.bit_len {
            return Err(Error::Format("truncated bit stream".into()));
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = byte >> (7 - self.pos % 8) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    /// Like [`read`](Self::read) but yields 0 past the end, for coders
    /// whose tail bits are implied.
    pub fn read_or_zero(&mut self) -> bool {
        if self.pos >= self.bit_len {
            self.pos += 1;
            return false;
        }
        self.read().unwrap()
    }

    /// Read `count` bits MSB-first into the low bits of a u64.
    pub fn read_bits(&mut self, count: u32) -> Result<u64> {
        assert!(count <= 64);
        let mut v = 0u64;
        for _ in 0..count {
            v = v << 1 | self.read()? as u64;
        }
        Ok(v)
    }

    pub fn remaining(&self) -> u64 {
        self.bit_len.saturating_sub(self.pos)
    }
}

/// Bits per symbol of a fixed-length code: `ceil(log2(alphabet_size))`.
pub fn flc_bits(alphabet_size: u32) -> Result<u32> {
    if alphabet_size == 0 {
        return Err(Error::invalid("alphabet_size", "must be at least 1"));
    }
    Ok(32 - (alphabet_size - 1).leading_zeros())
}

/// Pack symbols at `ceil(log2(alphabet_size))` bits each, big-endian.
pub fn flc_encode(symbols: &[u32], alphabet_size: u32) -> Result<(Vec<u8>, u64)> {
    let width = flc_bits(alphabet_size)?;
    let mut w = BitWriter::new();
    for &s in symbols {
        if s >= alphabet_size {
            return Err(Error::BadCodeword {
                codeword: s,
                alphabet: alphabet_size,
            });
        }
        w.push_bits(s as u64, width);
    }
    Ok(w.finish())
}

/// Inverse of [`flc_encode`] for a known symbol count.
pub fn flc_decode(
    bytes: &[u8],
    bit_len: u64,
    alphabet_size: u32,
    count: usize,
) -> Result<Vec<u32>> {
    let width = flc_bits(alphabet_size)?;
    let mut r = BitReader::new(bytes, bit_len)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let s = r.read_bits(width)? as u32;
        if s >= alphabet_size {
            return Err(Error::BadCodeword {
                codeword: s,
                alphabet: alphabet_size,
            });
        }
        out.push(s);
    }
    Ok(out)
}
