//! Successive-cancellation decoding and stochastic SC encoding.
//!
//! Everything runs on one log-domain recursion over `G_N` in natural order.
//! Leaf values are exact LLRs `ln p(0, s) / p(1, s)`; check nodes use the
//! exact tanh rule. A single pass can carry several leaf contexts (e.g. the
//! side-informed and the prior-only law of the stochastic encoder) so every
//! decision sees the per-index LLR under each of them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, structural, Result};
use crate::polar_core::{BitBlock, Bits, IndexSet};

/// Per-symbol joint law `p(bit, side)`; `probs[s] = [p(0, s), p(1, s)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolModel {
    probs: Vec<[f64; 2]>,
}

impl SymbolModel {
    pub const MAX_SIDE: usize = 16;

    pub fn new(probs: Vec<[f64; 2]>) -> Result<Self> {
        if probs.is_empty() || probs.len() > Self::MAX_SIDE {
            return Err(invalid(format!(
                "side alphabet size {} outside 1..={}",
                probs.len(),
                Self::MAX_SIDE
            )));
        }
        if probs.iter().flatten().any(|&p| p < 0.0 || p.is_nan()) {
            return Err(invalid("symbol model has negative mass"));
        }
        let total: f64 = probs.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("symbol model sums to {total}")));
        }
        Ok(SymbolModel { probs })
    }

    /// `p(bit)` with the side information discarded.
    pub fn prior(&self) -> SymbolModel {
        let p0 = self.probs.iter().map(|p| p[0]).sum();
        let p1 = self.probs.iter().map(|p| p[1]).sum();
        SymbolModel {
            probs: vec![[p0, p1]],
        }
    }

    pub fn side_alphabet(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[[f64; 2]] {
        &self.probs
    }

    /// `H(bit | side)` in bits.
    pub fn conditional_entropy(&self) -> f64 {
        self.probs
            .iter()
            .map(|&[a, b]| {
                let s = a + b;
                if s > 0.0 {
                    s * crate::capacity::hb_unchecked(a / s)
                } else {
                    0.0
                }
            })
            .sum()
    }

    pub fn leaf_llr(&self, s: usize) -> f64 {
        let [a, b] = self.probs[s];
        match (a > 0.0, b > 0.0) {
            (true, true) => (a / b).ln(),
            (true, false) => f64::INFINITY,
            (false, true) => f64::NEG_INFINITY,
            (false, false) => 0.0,
        }
    }

    pub fn leaf_llrs(&self, side: &[usize]) -> Vec<f64> {
        let table: Vec<f64> = (0..self.probs.len()).map(|s| self.leaf_llr(s)).collect();
        side.iter().map(|&s| table[s]).collect()
    }
}

/// Per-coordinate side symbols from a list of side blocks (block `k` is bit `k`).
pub fn side_symbols(blocks: &[&BitBlock], n: usize) -> Vec<usize> {
    (0..n)
        .map(|i| {
            blocks
                .iter()
                .enumerate()
                .fold(0, |acc, (k, b)| acc | ((b.bit(i) as usize) << k))
        })
        .collect()
}

/// Frozen positions with their values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenMap {
    pub positions: IndexSet,
    pub values: Bits,
}

impl FrozenMap {
    pub fn new(positions: IndexSet, values: Bits) -> Result<Self> {
        if positions.len() != values.len() {
            return Err(structural(format!(
                "frozen map with {} positions but {} values",
                positions.len(),
                values.len()
            )));
        }
        Ok(FrozenMap { positions, values })
    }

    pub fn none(n: usize) -> Self {
        FrozenMap {
            positions: IndexSet::empty(n),
            values: Bits::zeros(0),
        }
    }

    pub fn n(&self) -> usize {
        self.positions.n_total()
    }

    /// Dense lookup: `Some(bit)` at frozen 0-based positions.
    pub fn dense(&self) -> Vec<Option<bool>> {
        let mut d = vec![None; self.n()];
        for (k, i) in self.positions.iter().enumerate() {
            d[i - 1] = Some(self.values.get(k));
        }
        d
    }
}

#[inline]
pub(crate) fn boxplus(a: f64, b: f64) -> f64 {
    match (a.is_infinite(), b.is_infinite()) {
        (true, true) => {
            if (a > 0.0) == (b > 0.0) {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        }
        (true, false) => {
            if a > 0.0 {
                b
            } else {
                -b
            }
        }
        (false, true) => {
            if b > 0.0 {
                a
            } else {
                -a
            }
        }
        (false, false) => {
            let s = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
            s * a.abs().min(b.abs()) + (-(a + b).abs()).exp().ln_1p()
                - (-(a - b).abs()).exp().ln_1p()
        }
    }
}

#[inline]
fn combine_g(la: f64, lb: f64, c: u8) -> f64 {
    let v = if c == 0 { lb + la } else { lb - la };
    // +inf meeting -inf means a contradicted earlier decision.
    if v.is_nan() {
        0.0
    } else {
        v
    }
}

/// `P(bit = 0)` from an LLR.
#[inline]
pub fn prob_zero(llr: f64) -> f64 {
    if llr >= 0.0 {
        1.0 / (1.0 + (-llr).exp())
    } else {
        let e = llr.exp();
        e / (1.0 + e)
    }
}

/// `2√(p0·p1)` of the posterior with this LLR.
#[inline]
pub fn llr_bhattacharyya(llr: f64) -> f64 {
    if llr.is_infinite() {
        0.0
    } else {
        let e = (-llr.abs() / 2.0).exp();
        2.0 * e / (1.0 + e * e)
    }
}

/// Runs the SC recursion over `contexts` leaf-LLR vectors of equal length.
///
/// `decide(i, llrs)` receives the 0-based index and the per-context LLR of
/// `u_i` given all earlier decisions; it returns the decided bit.
pub fn sc_run<F>(contexts: &[Vec<f64>], mut decide: F) -> BitBlock
where
    F: FnMut(usize, &[f64]) -> bool,
{
    let c = contexts.len();
    let n = contexts[0].len();
    assert!(n.is_power_of_two());
    let mut flat = Vec::with_capacity(c * n);
    for ctx in contexts {
        assert_eq!(ctx.len(), n, "contexts differ in length");
        flat.extend_from_slice(ctx);
    }
    let mut u = vec![0u8; n];
    let mut scratch = vec![0.0; c];
    rec(&flat, c, n, 0, &mut decide, &mut u, &mut scratch);
    BitBlock::from_u8s(&u).expect("power-of-two block")
}

fn rec<F>(
    llr: &[f64],
    c: usize,
    n: usize,
    offset: usize,
    decide: &mut F,
    u: &mut [u8],
    scratch: &mut [f64],
) -> Vec<u8>
where
    F: FnMut(usize, &[f64]) -> bool,
{
    if n == 1 {
        scratch.copy_from_slice(&llr[..c]);
        let b = decide(offset, scratch) as u8;
        u[offset] = b;
        return vec![b];
    }
    let h = n / 2;
    let mut left = vec![0.0; c * h];
    for k in 0..c {
        let src = &llr[k * n..(k + 1) * n];
        for j in 0..h {
            left[k * h + j] = boxplus(src[j], src[j + h]);
        }
    }
    let cpart = rec(&left, c, h, offset, decide, u, scratch);
    let mut right = left;
    for k in 0..c {
        let src = &llr[k * n..(k + 1) * n];
        for j in 0..h {
            right[k * h + j] = combine_g(src[j], src[j + h], cpart[j]);
        }
    }
    let bpart = rec(&right, c, h, offset + h, decide, u, scratch);
    let mut x = Vec::with_capacity(n);
    x.extend(cpart.iter().zip(&bpart).map(|(a, b)| a ^ b));
    x.extend_from_slice(&bpart);
    x
}

/// SC decoding of `u = x·G_N` from per-coordinate side symbols.
///
/// Frozen positions copy the map; the rest take the posterior argmax with
/// ties resolved to 0.
pub fn sc_decode(side: &[usize], frozen: &FrozenMap, model: &SymbolModel) -> Result<BitBlock> {
    if side.len() != frozen.n() {
        return Err(structural(format!(
            "side block of length {} with a frozen map over N={}",
            side.len(),
            frozen.n()
        )));
    }
    let dense = frozen.dense();
    let leaves = model.leaf_llrs(side);
    Ok(sc_run(&[leaves], |i, l| match dense[i] {
        Some(b) => b,
        None => l[0] < 0.0,
    }))
}

/// Genie-aided LLR trace: the LLR of `u_i` given the true `u^{<i}` and the side.
pub fn llr_trace(side: &[usize], u: &BitBlock, model: &SymbolModel) -> Vec<f64> {
    let mut out = vec![0.0; u.n()];
    sc_run(&[model.leaf_llrs(side)], |i, l| {
        out[i] = l[0];
        u.get(i)
    });
    out
}

/// Genie-aided posterior sequence `P(U^i = 0 | u^{<i}, side)`.
pub fn posterior_trace(side: &[usize], u: &BitBlock, model: &SymbolModel) -> Vec<f64> {
    llr_trace(side, u, model).into_iter().map(prob_zero).collect()
}

/// The randomized SC quantizer of the rate-limited models.
///
/// Positions in `v_ux` copy the shared randomness `r`. Positions in
/// `h_u \ v_ux` are drawn from `p(v^j | v^{<j}, x)`; positions outside `h_u`
/// from the prior-only `p(v^j | v^{<j})`.
#[derive(Clone, Debug)]
pub struct StochasticEncoder {
    pub v_ux: IndexSet,
    pub h_u: IndexSet,
    /// `p(u, x)` with `x` as side.
    pub model: SymbolModel,
}

impl StochasticEncoder {
    pub fn new(v_ux: IndexSet, h_u: IndexSet, model: SymbolModel) -> Result<Self> {
        if v_ux.n_total() != h_u.n_total() {
            return Err(structural("encoder sets over different block lengths"));
        }
        Ok(StochasticEncoder { v_ux, h_u, model })
    }

    pub fn n(&self) -> usize {
        self.h_u.n_total()
    }

    fn contexts(&self, x: &BitBlock) -> [Vec<f64>; 2] {
        let side = side_symbols(&[x], x.n());
        let prior = self.model.prior();
        [self.model.leaf_llrs(&side), prior.leaf_llrs(&vec![0; x.n()])]
    }

    pub fn encode<R: Rng + ?Sized>(&self, x: &BitBlock, r: &Bits, rng: &mut R) -> Result<BitBlock> {
        if r.len() != self.v_ux.len() {
            return Err(structural(format!(
                "shared randomness has {} bits, V set has {}",
                r.len(),
                self.v_ux.len()
            )));
        }
        if x.n() != self.n() {
            return Err(structural("source block length does not match encoder sets"));
        }
        let vmask = self.v_ux.mask();
        let hmask = self.h_u.mask();
        let mut r_pos = 0;
        Ok(sc_run(&self.contexts(x), |i, l| {
            if vmask[i] {
                r_pos += 1;
                r.get(r_pos - 1)
            } else {
                let p0 = prob_zero(if hmask[i] { l[0] } else { l[1] });
                rng.gen::<f64>() >= p0
            }
        }))
    }

    /// `p̃(v | x)` with `r` fixed, or averaged over a uniform `r` when `None`.
    pub fn prob(&self, x: &BitBlock, v: &BitBlock, r: Option<&Bits>) -> f64 {
        let vmask = self.v_ux.mask();
        let hmask = self.h_u.mask();
        let mut r_pos = 0;
        let mut w = 1.0f64;
        sc_run(&self.contexts(x), |i, l| {
            let bit = v.get(i);
            w *= if vmask[i] {
                r_pos += 1;
                match r {
                    Some(r) => (r.get(r_pos - 1) == bit) as u8 as f64,
                    None => 0.5,
                }
            } else {
                let p0 = prob_zero(if hmask[i] { l[0] } else { l[1] });
                if bit {
                    1.0 - p0
                } else {
                    p0
                }
            };
            bit
        });
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar_core::polar_transform;

    fn bsc_model(p: f64) -> SymbolModel {
        SymbolModel::new(vec![[0.5 * (1.0 - p), 0.5 * p], [0.5 * p, 0.5 * (1.0 - p)]]).unwrap()
    }

    #[test]
    fn boxplus_matches_tanh_rule() {
        for &(a, b) in &[(0.3, -1.2), (4.0, 5.0), (-0.01, 0.02), (6.0, -8.0)] {
            let exact = 2.0 * ((a / 2.0f64).tanh() * (b / 2.0f64).tanh()).atanh();
            assert!((boxplus(a, b) - exact).abs() < 1e-9, "{a} {b}");
        }
        assert_eq!(boxplus(f64::INFINITY, -2.0), -2.0);
        assert_eq!(boxplus(f64::NEG_INFINITY, f64::INFINITY), f64::NEG_INFINITY);
    }

    #[test]
    fn noiseless_side_recovers_block() {
        let model = bsc_model(0.0);
        let x = BitBlock::from_u8s(&[1, 0, 1, 1, 0, 0, 1, 0]).unwrap();
        let side = side_symbols(&[&x], 8);
        let u = sc_decode(&side, &FrozenMap::none(8), &model).unwrap();
        assert_eq!(u, polar_transform(&x));
    }

    #[test]
    fn freezing_everything_returns_frozen_word() {
        let model = bsc_model(0.3);
        let vals = Bits::from_u8s(&[0, 1, 1, 0]);
        let f = FrozenMap::new(IndexSet::full(4), vals.clone()).unwrap();
        let u = sc_decode(&[0, 1, 1, 0], &f, &model).unwrap();
        assert_eq!(u.bits(), &vals);
    }

    #[test]
    fn identity_channel_encoder_is_deterministic() {
        use rand::SeedableRng;
        let model = SymbolModel::new(vec![[0.5, 0.0], [0.0, 0.5]]).unwrap();
        let enc = StochasticEncoder::new(IndexSet::empty(8), IndexSet::full(8), model).unwrap();
        let x = BitBlock::from_u8s(&[1, 1, 0, 1, 0, 0, 1, 0]).unwrap();
        for seed in 0..5 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let v = enc.encode(&x, &Bits::zeros(0), &mut rng).unwrap();
            assert_eq!(v, polar_transform(&x));
            assert_eq!(enc.prob(&x, &v, None), 1.0);
        }
    }
}
