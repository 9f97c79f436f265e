use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{structural, Result};

/// A packed bit sequence of arbitrary length.
///
/// Positions are 0-based here; [`IndexSet`](super::IndexSet) carries the
/// 1-based indices used throughout the protocol layer.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut b = Bits::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            b.set(i, v);
        }
        b
    }

    /// Builds a sequence from 0/1 bytes; any nonzero byte counts as 1.
    pub fn from_u8s(bits: &[u8]) -> Self {
        let mut b = Bits::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            b.set(i, v != 0);
        }
        b
    }

    /// The `len` low bits of `value`, position 0 taking bit 0.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let mut b = Bits::zeros(len);
        if len > 0 {
            let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
            b.words[0] = value & mask;
        }
        b
    }

    /// Inverse of [`Bits::from_u64`]; panics beyond 64 bits.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64, "to_u64 supports at most 64 bits");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn random<R: rand::Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut b = Bits::zeros(len);
        for w in b.words.iter_mut() {
            *w = rng.gen();
        }
        b.clear_tail();
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, pos: usize) -> bool {
        debug_assert!(pos < self.len);
        (self.words[pos >> 6] >> (pos & 63)) & 1 == 1
    }

    #[inline]
    pub fn bit(&self, pos: usize) -> u8 {
        self.get(pos) as u8
    }

    #[inline]
    pub fn set(&mut self, pos: usize, v: bool) {
        debug_assert!(pos < self.len);
        let w = &mut self.words[pos >> 6];
        let m = 1u64 << (pos & 63);
        if v {
            *w |= m;
        } else {
            *w &= !m;
        }
    }

    pub fn push(&mut self, v: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, v);
    }

    pub fn extend_from(&mut self, other: &Bits) {
        for i in 0..other.len {
            self.push(other.get(i));
        }
    }

    pub fn concat(parts: &[&Bits]) -> Bits {
        let mut out = Bits::zeros(0);
        for p in parts {
            out.extend_from(p);
        }
        out
    }

    /// Sub-sequence `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Bits {
        let mut out = Bits::zeros(len);
        for i in 0..len {
            out.set(i, self.get(start + i));
        }
        out
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_u8s(&self) -> Vec<u8> {
        self.iter().map(|b| b as u8).collect()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    pub fn xor_assign(&mut self, other: &Bits) -> Result<()> {
        if self.len != other.len {
            return Err(structural(format!(
                "xor of sequences with lengths {} and {}",
                self.len, other.len
            )));
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
        Ok(())
    }

    /// Lowercase hex; the most significant bit of each byte holds the lowest position.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = (0..self.len.div_ceil(8))
            .map(|byte| {
                (0..8).fold(0u8, |acc, t| {
                    let pos = byte * 8 + t;
                    if pos < self.len && self.get(pos) {
                        acc | (0x80 >> t)
                    } else {
                        acc
                    }
                })
            })
            .collect();
        hex::encode(bytes)
    }

    pub fn from_hex(s: &str, len: usize) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| structural(format!("bad hex payload: {e}")))?;
        if bytes.len() != len.div_ceil(8) {
            return Err(structural(format!(
                "hex payload has {} bytes, expected {} for {} bits",
                bytes.len(),
                len.div_ceil(8),
                len
            )));
        }
        let mut b = Bits::zeros(len);
        for pos in 0..len {
            b.set(pos, bytes[pos / 8] & (0x80 >> (pos % 8)) != 0);
        }
        if bytes.iter().enumerate().any(|(i, &v)| {
            (0..8).any(|t| v & (0x80 >> t) != 0 && i * 8 + t >= len)
        }) {
            return Err(structural("hex payload has bits set beyond its length"));
        }
        Ok(b)
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }
}

/// Elementwise XOR of two equal-length sequences.
pub fn xor_pad(a: &Bits, b: &Bits) -> Result<Bits> {
    let mut out = a.clone();
    out.xor_assign(b)?;
    Ok(out)
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits(")?;
        for b in self.iter() {
            write!(f, "{}", b as u8)?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            write!(f, "{}", b as u8)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct HexForm {
    len: usize,
    hex: String,
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HexForm {
            len: self.len,
            hex: self.to_hex(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let h = HexForm::deserialize(d)?;
        Bits::from_hex(&h.hex, h.len).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_puts_lowest_index_in_msb() {
        let b = Bits::from_u8s(&[1, 0, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(b.to_hex(), "8080");
        assert_eq!(Bits::from_hex("8080", 9).unwrap(), b);
        assert!(Bits::from_hex("8040", 9).is_err());
    }

    #[test]
    fn xor_example() {
        let a = Bits::from_u8s(&[1, 0, 1]);
        let b = Bits::from_u8s(&[1, 1, 0]);
        assert_eq!(xor_pad(&a, &b).unwrap(), Bits::from_u8s(&[0, 1, 1]));
        assert!(xor_pad(&a, &Bits::zeros(2)).is_err());
    }

    #[test]
    fn push_crosses_word_boundary() {
        let mut b = Bits::zeros(63);
        b.push(true);
        b.push(true);
        assert_eq!(b.len(), 65);
        assert!(b.get(63) && b.get(64));
        assert_eq!(b.count_ones(), 2);
    }

    #[test]
    fn json_roundtrip() {
        let b = Bits::from_u8s(&[0, 1, 1, 0, 1]);
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"len":5,"hex":"68"}"#);
        assert_eq!(serde_json::from_str::<Bits>(&s).unwrap(), b);
    }
}
