//! Bit strings with most-significant-bit-first packing and an explicit length.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid bit character {0:?}; expected '0' or '1'")]
pub struct ParseBitsError(pub char);

/// A finite sequence of bits.
///
/// Bits are packed MSB-first into bytes; bits past `len` in the last byte are
/// always zero so that equality and ordering are structural.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString {
    len: usize,
    bytes: Vec<u8>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            len: 0,
            bytes: Vec::with_capacity(bits.div_ceil(8)),
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            bytes: vec![0; len.div_ceil(8)],
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = Self::new();
        for b in bits {
            out.push(b);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_uint(&mut self, value: u64, width: usize) {
        debug_assert!(width <= 64);
        for shift in (0..width).rev() {
            self.push((value >> shift) & 1 == 1);
        }
    }

    pub fn extend_from(&mut self, other: &BitString) {
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        (index < self.len).then(|| self.bytes[index / 8] & (0x80 >> (index % 8)) != 0)
    }

    /// Reads `width` bits starting at `offset` as an unsigned integer.
    pub fn read_uint(&self, offset: usize, width: usize) -> Option<u64> {
        if width > 64 || offset.checked_add(width)? > self.len {
            return None;
        }
        let mut v = 0u64;
        for i in offset..offset + width {
            v = (v << 1) | u64::from(self.get(i)?);
        }
        Some(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bytes[i / 8] & (0x80 >> (i % 8)) != 0)
    }

    /// The first `len` bits (or the whole string if it is shorter).
    pub fn truncated(&self, len: usize) -> BitString {
        BitString::from_bits(self.iter().take(len))
    }

    /// Copy with the bit at `index` removed.
    pub fn without(&self, index: usize) -> BitString {
        BitString::from_bits(
            self.iter()
                .enumerate()
                .filter(|&(i, _)| i != index)
                .map(|(_, b)| b),
        )
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}:\"", self.len)?;
        if self.len <= 128 {
            write!(f, "{self}")?;
        } else {
            write!(f, "{}…", self.truncated(128))?;
        }
        f.write_str("\")")
    }
}

impl FromStr for BitString {
    type Err = ParseBitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = BitString::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                other => return Err(ParseBitsError(other)),
            }
        }
        Ok(out)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn msb_first_packing() {
        let mut b = BitString::new();
        b.push_uint(0b101, 3);
        assert_eq!(b.to_string(), "101");
        assert_eq!(b.len(), 3);
        assert_eq!(b.read_uint(0, 3), Some(5));
        assert_eq!(b.read_uint(1, 3), None);
    }

    #[test]
    fn without_drops_one_position() {
        let b: BitString = "1011".parse().unwrap();
        assert_eq!(b.without(0).to_string(), "011");
        assert_eq!(b.without(3).to_string(), "101");
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!("10x".parse::<BitString>(), Err(ParseBitsError('x')));
    }

    #[test]
    fn trailing_bits_do_not_affect_equality() {
        let a: BitString = "1".parse().unwrap();
        let mut b = BitString::new();
        b.push(true);
        assert_eq!(a, b);
        assert_ne!(a, "10".parse::<BitString>().unwrap());
    }

    proptest! {
        #[test]
        fn text_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let b = BitString::from_bits(bits.iter().copied());
            let back: BitString = b.to_string().parse().unwrap();
            prop_assert_eq!(&back, &b);
            prop_assert_eq!(back.iter().collect::<Vec<_>>(), bits);
        }
    }
}
