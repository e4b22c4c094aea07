//! Integer arithmetic coder with a 64-bit state.
//!
//! Probabilities are frozen into integer frequencies on a 2³² budget so
//! both ends of a channel derive identical tables from identical floats:
//! `freq_i = floor(p_i·(2³² − A)) + 1` for an alphabet of size `A`, which
//! floors every symbol at roughly 2⁻³² and keeps the total within budget.
//! Interval updates run in u128, renormalization uses the standard
//! half/quarter rules with pending-bit carry resolution, and termination
//! costs two bits plus whatever underflow bits are pending.

use crate::error::{Error, Result};

use super::bits::{BitReader, BitWriter};

const BUDGET: u64 = 1 << 32;
const HALF: u64 = 1 << 63;
const QUARTER: u64 = 1 << 62;
const THREE_QUARTERS: u64 = 3 << 62;

/// Cumulative integer frequencies of one symbol distribution;
/// `cum[s]..cum[s+1]` is symbol `s`'s slice of the total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolModel {
    cum: Vec<u64>,
}

impl SymbolModel {
    /// Freeze a probability vector into frequencies.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("probs", "alphabet must be nonempty"));
        }
        if probs.len() as u64 > BUDGET / 2 {
            return Err(Error::invalid("probs", "alphabet too large for the budget"));
        }
        let mut sum = 0.0;
        for &p in probs {
            if !p.is_finite() || p < -1e-12 {
                return Err(Error::invalid("probs", format!("bad probability {p}")));
            }
            sum += p.max(0.0);
        }
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(
                "probs",
                format!("probabilities sum to {sum}"),
            ));
        }
        let spread = BUDGET - probs.len() as u64;
        let mut cum = Vec::with_capacity(probs.len() + 1);
        cum.push(0u64);
        let mut total = 0u64;
        let mut largest = (0usize, 0u64);
        for (i, &p) in probs.iter().enumerate() {
            let f = (p.max(0.0) * spread as f64).floor() as u64 + 1;
            if f > largest.1 {
                largest = (i, f);
            }
            total += f;
            cum.push(total);
        }
        if total > BUDGET {
            let excess = total - BUDGET;
            if largest.1 <= excess {
                return Err(Error::invalid(
                    "probs",
                    "rounding excess exceeds the modal mass",
                ));
            }
            for c in cum.iter_mut().skip(largest.0 + 1) {
                *c -= excess;
            }
        }
        Ok(Self { cum })
    }

    pub fn alphabet_size(&self) -> u32 {
        (self.cum.len() - 1) as u32
    }

    fn total(&self) -> u64 {
        *self.cum.last().unwrap()
    }

    fn slice(&self, s: u32) -> (u64, u64) {
        (self.cum[s as usize], self.cum[s as usize + 1])
    }

    /// Rate the frozen table actually pays for symbol `s`, in bits.
    pub fn cost_bits(&self, s: u32) -> f64 {
        let (lo, hi) = self.slice(s);
        -(((hi - lo) as f64 / self.total() as f64).log2())
    }
}

fn emit(w: &mut BitWriter, bit: bool, pending: &mut u64) {
    w.push(bit);
    while *pending > 0 {
        w.push(!bit);
        *pending -= 1;
    }
}

/// Encode `symbols`, looking up the model for position `i` through
/// `model_of(i)`. Returns zero-padded bytes plus the exact bit count.
pub fn arithmetic_encode<'a, F>(symbols: &[u32], mut model_of: F) -> Result<(Vec<u8>, u64)>
where
    F: FnMut(usize) -> &'a SymbolModel,
{
    let mut w = BitWriter::new();
    let mut low = 0u64;
    let mut high = u64::MAX;
    let mut pending = 0u64;
    for (i, &s) in symbols.iter().enumerate() {
        let model = model_of(i);
        if s >= model.alphabet_size() {
            return Err(Error::BadCodeword {
                codeword: s,
                alphabet: model.alphabet_size(),
            });
        }
        let (cum_lo, cum_hi) = model.slice(s);
        let total = model.total() as u128;
        let range = (high - low) as u128 + 1;
        high = low + ((range * cum_hi as u128) / total - 1) as u64;
        low += ((range * cum_lo as u128) / total) as u64;
        loop {
            if high < HALF {
                emit(&mut w, false, &mut pending);
            } else if low >= HALF {
                emit(&mut w, true, &mut pending);
                low -= HALF;
                high -= HALF;
            } else if low >= QUARTER && high < THREE_QUARTERS {
                pending += 1;
                low -= QUARTER;
                high -= QUARTER;
            } else {
                break;
            }
            low <<= 1;
            high = high << 1 | 1;
        }
    }
    pending += 1;
    emit(&mut w, low >= QUARTER, &mut pending);
    Ok(w.finish())
}

/// Decode `count` symbols; models must match the encoder's in order.
pub fn arithmetic_decode<'a, F>(
    bytes: &[u8],
    bit_len: u64,
    count: usize,
    mut model_of: F,
) -> Result<Vec<u32>>
where
    F: FnMut(usize) -> &'a SymbolModel,
{
    let mut r = BitReader::new(bytes, bit_len)?;
    let mut low = 0u64;
    let mut high = u64::MAX;
    let mut value = 0u64;
    for _ in 0..64 {
        value = value << 1 | r.read_or_zero() as u64;
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let model = model_of(i);
        let total = model.total() as u128;
        let range = (high - low) as u128 + 1;
        // Corrupt input can put `value` outside [low, high]; wrap and clamp
        // so the result is merely wrong symbols, never a panic.
        let scaled = ((value.wrapping_sub(low) as u128 + 1) * total - 1) / range;
        let scaled = scaled.min(total - 1);
        let s = model.cum.partition_point(|&c| c as u128 <= scaled) as u32 - 1;
        out.push(s);
        let (cum_lo, cum_hi) = model.slice(s);
        high = low + ((range * cum_hi as u128) / total - 1) as u64;
        low += ((range * cum_lo as u128) / total) as u64;
        loop {
            if high < HALF {
            } else if low >= HALF {
                value -= HALF;
                low -= HALF;
                high -= HALF;
            } else if low >= QUARTER && high < THREE_QUARTERS {
                value -= QUARTER;
                low -= QUARTER;
                high -= QUARTER;
            } else {
                break;
            }
            low <<= 1;
            high = high << 1 | 1;
            value = value << 1 | r.read_or_zero() as u64;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_frequencies_cover_the_budget_and_floor_zeros() {
        let m = SymbolModel::from_probs(&[0.5, 0.5]).unwrap();
        assert_eq!(m.alphabet_size(), 2);
        assert!(m.total() <= BUDGET);
        assert!((m.cost_bits(0) - 1.0).abs() < 1e-6);

        let z = SymbolModel::from_probs(&[1.0, 0.0]).unwrap();
        assert_eq!(z.slice(1).1 - z.slice(1).0, 1);
        assert!(z.cost_bits(1) > 30.0);

        assert!(SymbolModel::from_probs(&[]).is_err());
        assert!(SymbolModel::from_probs(&[0.4, 0.4]).is_err());
        assert!(SymbolModel::from_probs(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn short_sequences_round_trip() {
        let m = SymbolModel::from_probs(&[0.7, 0.2, 0.1]).unwrap();
        let symbols = vec![0, 0, 2, 1, 0, 2, 2, 1, 0, 0, 0, 1];
        let (bytes, len) = arithmetic_encode(&symbols, |_| &m).unwrap();
        let back = arithmetic_decode(&bytes, len, symbols.len(), |_| &m).unwrap();
        assert_eq!(back, symbols);
    }

    #[test]
    fn encoding_is_deterministic_and_rejects_foreign_symbols() {
        let m = SymbolModel::from_probs(&[0.9, 0.1]).unwrap();
        let symbols = vec![0, 1, 0, 0, 1];
        let a = arithmetic_encode(&symbols, |_| &m).unwrap();
        let b = arithmetic_encode(&symbols, |_| &m).unwrap();
        assert_eq!(a, b);
        assert!(arithmetic_encode(&[2], |_| &m).is_err());
    }

    #[test]
    fn skewed_models_compress_their_typical_input() {
        let m = SymbolModel::from_probs(&[0.99, 0.01]).unwrap();
        let symbols = vec![0u32; 4000];
        let (_, len) = arithmetic_encode(&symbols, |_| &m).unwrap();
        // 4000 symbols at ~0.0145 bits each.
        assert!(len < 80, "got {len} bits");
    }
}
