//! GF(2) block arithmetic and the source polarization transform.
//!
//! `G_N = [[1,0],[1,1]]^{⊗n}` is applied in natural index order, so
//! `u = x·G_N` computed by [`polar_transform`] is its own inverse.

mod bits;
mod index_set;

use std::ops::Deref;

use serde::{Deserialize, Serialize};

pub use bits::{xor_pad, Bits};
pub use index_set::IndexSet;

use crate::error::{structural, Result};

/// A bit block whose length is a power of two.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Bits", into = "Bits")]
pub struct BitBlock(Bits);

impl BitBlock {
    pub fn new(bits: Bits) -> Result<Self> {
        if !bits.len().is_power_of_two() {
            return Err(structural(format!(
                "block length {} is not a power of two",
                bits.len()
            )));
        }
        Ok(BitBlock(bits))
    }

    pub fn zeros(n: usize) -> Self {
        BitBlock::new(Bits::zeros(n)).expect("block length must be a power of two")
    }

    pub fn from_u8s(v: &[u8]) -> Result<Self> {
        BitBlock::new(Bits::from_u8s(v))
    }

    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        BitBlock::new(Bits::random(n, rng)).expect("block length must be a power of two")
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// `log2(N)`.
    pub fn exponent(&self) -> u32 {
        self.0.len().trailing_zeros()
    }

    pub fn set(&mut self, pos: usize, v: bool) {
        self.0.set(pos, v)
    }

    pub fn bits(&self) -> &Bits {
        &self.0
    }

    pub fn into_bits(self) -> Bits {
        self.0
    }

    pub fn xor(&self, other: &BitBlock) -> Result<BitBlock> {
        Ok(BitBlock(xor_pad(&self.0, &other.0)?))
    }
}

impl Deref for BitBlock {
    type Target = Bits;
    fn deref(&self) -> &Bits {
        &self.0
    }
}

impl TryFrom<Bits> for BitBlock {
    type Error = crate::error::Error;
    fn try_from(b: Bits) -> Result<Self> {
        BitBlock::new(b)
    }
}

impl From<BitBlock> for Bits {
    fn from(b: BitBlock) -> Bits {
        b.0
    }
}

impl std::fmt::Debug for BitBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitBlock({})", self.0)
    }
}

const INTRA_WORD_MASKS: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0f0f_0f0f_0f0f_0f0f,
    0x00ff_00ff_00ff_00ff,
    0x0000_ffff_0000_ffff,
    0x0000_0000_ffff_ffff,
];

/// `u = x·G_N` over GF(2) in `log2(N)` butterfly passes on packed words.
pub fn polar_transform(x: &BitBlock) -> BitBlock {
    let n = x.n();
    let mut out = x.0.clone();
    let words = out.words_mut();
    let mut h = 1usize;
    let mut stage = 0;
    while h < n && h < 64 {
        let m = INTRA_WORD_MASKS[stage];
        for w in words.iter_mut() {
            *w ^= (*w >> h) & m;
        }
        h <<= 1;
        stage += 1;
    }
    while h < n {
        let hw = h / 64;
        for base in (0..words.len()).step_by(2 * hw) {
            for j in base..base + hw {
                words[j] ^= words[j + hw];
            }
        }
        h <<= 1;
    }
    BitBlock(out)
}

/// `u[s]` as a bit sequence in increasing index order.
pub fn extract(u: &Bits, s: &IndexSet) -> Result<Bits> {
    if s.n_total() != u.len() {
        return Err(structural(format!(
            "index set over N={} applied to block of length {}",
            s.n_total(),
            u.len()
        )));
    }
    let mut out = Bits::zeros(s.len());
    for (k, i) in s.iter().enumerate() {
        out.set(k, u.get(i - 1));
    }
    Ok(out)
}

/// Copy of `u` with positions in `s` overwritten by `vals` (in index order).
pub fn scatter(u: &BitBlock, s: &IndexSet, vals: &Bits) -> Result<BitBlock> {
    if s.n_total() != u.n() {
        return Err(structural(format!(
            "index set over N={} applied to block of length {}",
            s.n_total(),
            u.n()
        )));
    }
    if vals.len() != s.len() {
        return Err(structural(format!(
            "scatter of {} values into a set of size {}",
            vals.len(),
            s.len()
        )));
    }
    let mut out = u.clone();
    for (k, i) in s.iter().enumerate() {
        out.set(i - 1, vals.get(k));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[u8]) -> Vec<u8> {
        // Dense Kronecker power, row vector times matrix.
        let n = x.len();
        let mut g = vec![vec![1u8]];
        while g.len() < n {
            let m = g.len();
            let mut next = vec![vec![0u8; 2 * m]; 2 * m];
            for r in 0..m {
                for c in 0..m {
                    next[r][c] = g[r][c];
                    next[r + m][c] = g[r][c];
                    next[r + m][c + m] = g[r][c];
                }
            }
            g = next;
        }
        (0..n)
            .map(|c| (0..n).fold(0, |acc, r| acc ^ (x[r] & g[r][c])))
            .collect()
    }

    #[test]
    fn two_by_two() {
        let t = |v: &[u8]| polar_transform(&BitBlock::from_u8s(v).unwrap()).to_u8s();
        assert_eq!(t(&[1, 0]), vec![1, 0]);
        assert_eq!(t(&[0, 1]), vec![1, 1]);
        assert_eq!(t(&[0; 8]), vec![0; 8]);
    }

    #[test]
    fn matches_dense_kronecker_across_word_boundaries() {
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        for &n in &[1usize, 2, 4, 8, 64, 128, 256] {
            let x: Vec<u8> = (0..n)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state & 1) as u8
                })
                .collect();
            let got = polar_transform(&BitBlock::from_u8s(&x).unwrap()).to_u8s();
            assert_eq!(got, naive(&x), "N={n}");
        }
    }

    #[test]
    fn extract_scatter_examples() {
        let u = Bits::from_u8s(&[1, 0, 1, 1]);
        let s = IndexSet::new(4, [1, 3]).unwrap();
        assert_eq!(extract(&u, &s).unwrap().to_u8s(), vec![1, 1]);
        let z = BitBlock::zeros(4);
        let s = IndexSet::new(4, [2, 4]).unwrap();
        let v = scatter(&z, &s, &Bits::from_u8s(&[1, 1])).unwrap();
        assert_eq!(v.to_u8s(), vec![0, 1, 0, 1]);
        let e = IndexSet::empty(4);
        assert_eq!(scatter(&v, &e, &Bits::zeros(0)).unwrap(), v);
        assert!(extract(&u, &IndexSet::empty(8)).is_err());
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(BitBlock::from_u8s(&[0, 1, 1]).is_err());
    }
}
