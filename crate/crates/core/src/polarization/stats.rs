use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::hb_unchecked;
use crate::error::{invalid, Error, Result};
use crate::polar_core::{polar_transform, BitBlock};
use crate::sc_codec::{llr_bhattacharyya, llr_trace, prob_zero, SymbolModel};
use crate::sources::{JointPmf, TupleSampler, Var};

/// Exact enumeration visits `side_alphabet^N · 2^N` block pairs; capped here.
pub const EXACT_BUDGET_LOG2: u32 = 24;
const MC_CHUNK: usize = 2048;

/// The target variable and the side variables it is polarized against.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConditioningContext {
    pub target: Var,
    pub side: Vec<Var>,
}

impl ConditioningContext {
    pub fn new(target: Var, side: &[Var]) -> Self {
        ConditioningContext {
            target,
            side: side.to_vec(),
        }
    }

    pub fn unconditional(target: Var) -> Self {
        Self::new(target, &[])
    }

    /// `"X1|X2"`, `"U|Z"`, or just `"U"`.
    pub fn name(&self) -> String {
        if self.side.is_empty() {
            self.target.to_string()
        } else {
            let s: Vec<String> = self.side.iter().map(|v| v.to_string()).collect();
            format!("{}|{}", self.target, s.join(","))
        }
    }

    pub fn model(&self, pmf: &JointPmf) -> Result<SymbolModel> {
        pmf.pair_model(self.target, &self.side)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// Per-index conditional entropy and Bhattacharyya parameter for one context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarIndexStats {
    pub n: usize,
    pub context: ConditioningContext,
    pub method: Method,
    pub samples: Option<usize>,
    pub h_cond: Vec<f64>,
    pub z: Vec<f64>,
}

impl PolarIndexStats {
    pub fn exponent(&self) -> u32 {
        self.n.trailing_zeros()
    }
}

/// `x·G_N` on an integer whose bit `t` is coordinate `t` (N ≤ 64).
fn polar_int(mut x: u64, n: usize) -> u64 {
    const M: [u64; 6] = [
        0x5555_5555_5555_5555,
        0x3333_3333_3333_3333,
        0x0f0f_0f0f_0f0f_0f0f,
        0x00ff_00ff_00ff_00ff,
        0x0000_ffff_0000_ffff,
        0x0000_0000_ffff_ffff,
    ];
    let mut h = 1;
    let mut s = 0;
    while h < n {
        x ^= (x >> h) & M[s];
        h <<= 1;
        s += 1;
    }
    x
}

fn check_n(n: usize) -> Result<()> {
    if !n.is_power_of_two() {
        return Err(invalid(format!("N = {n} is not a power of two")));
    }
    Ok(())
}

/// Exact per-index statistics by enumerating every (target block, side block) pair.
///
/// For each side block the joint mass of `u = x·G_N` is laid out over `2^N`
/// cells; marginalizing the last coordinate one at a time yields
/// `H(U^i | U^{<i}, side)` and `Z(U^i | U^{<i}, side)` for `i = N, …, 1`.
pub fn exact_index_stats(pmf: &JointPmf, n: usize, ctx: &ConditioningContext) -> Result<PolarIndexStats> {
    check_n(n)?;
    let model = ctx.model(pmf)?;
    let s = model.side_alphabet();
    let side_bits = (s as f64).log2();
    let needed = n as f64 * (1.0 + side_bits);
    if needed > EXACT_BUDGET_LOG2 as f64 || n > 32 {
        return Err(Error::Budget {
            needed_log2: needed,
            budget_log2: EXACT_BUDGET_LOG2,
        });
    }
    let side_blocks = s.pow(n as u32);
    let probs = model.probs().to_vec();
    let chunk = side_blocks.div_ceil(64).max(1);
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..side_blocks)
        .step_by(chunk)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let mut h = vec![0.0; n];
            let mut z = vec![0.0; n];
            let mut w = vec![0.0; 1 << n];
            let mut pu = vec![0.0; 1 << n];
            for yb in start..(start + chunk).min(side_blocks) {
                // Side symbol of coordinate t is digit t of yb in base s.
                let mut digits = Vec::with_capacity(n);
                let mut rest = yb;
                for _ in 0..n {
                    digits.push(rest % s);
                    rest /= s;
                }
                w[0] = 1.0;
                for (t, &d) in digits.iter().enumerate() {
                    let half = 1 << t;
                    let [p0, p1] = probs[d];
                    for x in (0..half).rev() {
                        let v = w[x];
                        w[x] = v * p0;
                        w[x | half] = v * p1;
                    }
                }
                if w.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for (x, &v) in w.iter().enumerate() {
                    pu[polar_int(x as u64, n) as usize] = v;
                }
                for i in (0..n).rev() {
                    let half = 1 << i;
                    for q in 0..half {
                        let (a, b) = (pu[q], pu[q | half]);
                        let t = a + b;
                        if t > 0.0 {
                            h[i] += t * hb_unchecked(a / t);
                            z[i] += 2.0 * (a * b).sqrt();
                        }
                        pu[q] = t;
                    }
                }
            }
            (h, z)
        })
        .collect();
    let mut h = vec![0.0; n];
    let mut z = vec![0.0; n];
    for (ph, pz) in partials {
        for i in 0..n {
            h[i] += ph[i];
            z[i] += pz[i];
        }
    }
    Ok(PolarIndexStats {
        n,
        context: ctx.clone(),
        method: Method::Exact,
        samples: None,
        h_cond: h.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        z: z.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    })
}

/// Genie-aided Monte-Carlo estimates: sample pairs, run SC with the true bits
/// revealed, and average the posterior's entropy and Bhattacharyya functional.
pub fn mc_index_stats<R: Rng + ?Sized>(
    pmf: &JointPmf,
    n: usize,
    ctx: &ConditioningContext,
    samples: usize,
    rng: &mut R,
) -> Result<PolarIndexStats> {
    check_n(n)?;
    if samples == 0 {
        return Err(invalid("Monte-Carlo construction needs at least one sample"));
    }
    let model = ctx.model(pmf)?;
    // Tuple layout: bit 0 is the target, higher bits the side symbol.
    let table: Vec<f64> = (0..model.side_alphabet())
        .flat_map(|s| model.probs()[s])
        .collect();
    let sampler = TupleSampler::new(&table);
    let base: u64 = rng.gen();
    let chunks = samples.div_ceil(MC_CHUNK);
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut crng = chunk_rng(base, c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut h = vec![0.0; n];
            let mut z = vec![0.0; n];
            let mut x = vec![0u8; n];
            let mut side = vec![0usize; n];
            for _ in 0..count {
                for t in 0..n {
                    let tup = sampler.draw(&mut crng);
                    x[t] = (tup & 1) as u8;
                    side[t] = tup >> 1;
                }
                let u = polar_transform(&BitBlock::from_u8s(&x).expect("power of two"));
                for (i, l) in llr_trace(&side, &u, &model).into_iter().enumerate() {
                    h[i] += hb_unchecked(prob_zero(l));
                    z[i] += llr_bhattacharyya(l);
                }
            }
            (h, z)
        })
        .collect();
    let mut h = vec![0.0; n];
    let mut z = vec![0.0; n];
    for (ph, pz) in partials {
        for i in 0..n {
            h[i] += ph[i];
            z[i] += pz[i];
        }
    }
    let inv = 1.0 / samples as f64;
    Ok(PolarIndexStats {
        n,
        context: ctx.clone(),
        method: Method::MonteCarlo,
        samples: Some(samples),
        h_cond: h.into_iter().map(|v| (v * inv).clamp(0.0, 1.0)).collect(),
        z: z.into_iter().map(|v| (v * inv).clamp(0.0, 1.0)).collect(),
    })
}

fn chunk_rng(base: u64, chunk: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&base.to_le_bytes());
    seed[8..16].copy_from_slice(&chunk.to_le_bytes());
    seed[16..24].copy_from_slice(b"mc-stats");
    ChaCha8Rng::from_seed(seed)
}

/// `Z(X|Y) = 2 Σ_y √(p(0,y) p(1,y))`.
pub fn bhattacharyya(model: &SymbolModel) -> f64 {
    model
        .probs()
        .iter()
        .map(|&[a, b]| 2.0 * (a * b).sqrt())
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombineBound {
    pub z: f64,
    /// `Z(X_1 ⊕ X_2 | Y_1 Y_2)` for two independent copies.
    pub lhs: f64,
    /// `√(2Z² − Z⁴)`.
    pub rhs: f64,
    pub margin: f64,
}

/// Evaluates both sides of the two-copy Bhattacharyya lower bound.
pub fn combine_bound(model: &SymbolModel) -> CombineBound {
    let z = bhattacharyya(model);
    let p = model.probs();
    let mut lhs = 0.0;
    for a in p {
        for b in p {
            let p0 = a[0] * b[0] + a[1] * b[1];
            let p1 = a[0] * b[1] + a[1] * b[0];
            lhs += 2.0 * (p0 * p1).sqrt();
        }
    }
    let rhs = (2.0 * z * z - z.powi(4)).max(0.0).sqrt();
    CombineBound {
        z,
        lhs,
        rhs,
        margin: lhs - rhs,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombineBoundReport {
    pub trials: usize,
    pub min_margin: f64,
    pub worst: Option<CombineBound>,
}

/// Checks the bound on `trials` random joints with side alphabets of 1 to `max_side` symbols.
pub fn check_combine_bound<R: Rng + ?Sized>(trials: usize, max_side: usize, rng: &mut R) -> CombineBoundReport {
    let mut report = CombineBoundReport {
        trials,
        min_margin: f64::INFINITY,
        worst: None,
    };
    for _ in 0..trials {
        let s = rng.gen_range(1..=max_side.clamp(1, SymbolModel::MAX_SIDE));
        let mut raw: Vec<[f64; 2]> = (0..s).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        // Sparsify sometimes so deterministic corners show up.
        for cell in raw.iter_mut().flatten() {
            if rng.gen_bool(0.15) {
                *cell = 0.0;
            }
        }
        let total: f64 = raw.iter().flatten().sum();
        if total == 0.0 {
            continue;
        }
        let probs = raw.iter().map(|&[a, b]| [a / total, b / total]).collect();
        let model = SymbolModel::new(probs).expect("normalized");
        let cb = combine_bound(&model);
        if cb.margin < report.min_margin {
            report.min_margin = cb.margin;
            report.worst = Some(cb);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar_core::Bits;

    #[test]
    fn polar_int_matches_block_transform() {
        for n in [1usize, 2, 4, 8, 16] {
            for x in [0u64, 1, 5, 0xa7, 0xbeef] {
                let x = x & ((1u64 << n) - 1);
                let b = BitBlock::new(Bits::from_u64(x, n)).unwrap();
                assert_eq!(polar_transform(&b).to_u64(), polar_int(x, n));
            }
        }
    }

    #[test]
    fn bhattacharyya_bsc_closed_form() {
        let p = 0.11;
        let m = SymbolModel::new(vec![[0.5 * (1.0 - p), 0.5 * p], [0.5 * p, 0.5 * (1.0 - p)]]).unwrap();
        assert!((bhattacharyya(&m) - 2.0 * (p * (1.0 - p)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn independent_uniform_bound_is_tight() {
        let m = SymbolModel::new(vec![[0.25, 0.25], [0.25, 0.25]]).unwrap();
        let cb = combine_bound(&m);
        assert!((cb.lhs - 1.0).abs() < 1e-12 && (cb.rhs - 1.0).abs() < 1e-12);
    }
}
