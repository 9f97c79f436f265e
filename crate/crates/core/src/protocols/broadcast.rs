use std::collections::BTreeMap;

use rand::Rng;

use super::{check_k, check_len, BlockDiag, KeyMaterial, Known, Label, ProtocolReport, Transcript};
use crate::error::{invalid, structural, Result};
use crate::polar_core::{extract, polar_transform, xor_pad, BitBlock, Bits, IndexSet};
use crate::polarization::{IndexSetBundle, ModelTag};
use crate::sc_codec::{sc_decode, side_symbols, SymbolModel};
use crate::sources::{joint_pmf, sample_block, JointSourceSpec, SampleBlock, Var};

/// One-to-many broadcast: terminal 1 sends once, every other terminal
/// decodes with the frozen set of the weakest one.
#[derive(Clone, Debug)]
pub struct StarPlan {
    pub n: usize,
    pub m: usize,
    pub h: IndexSet,
    pub key_set: IndexSet,
    pub f_set: IndexSet,
    pub fp_set: IndexSet,
    /// `p(x_1, x_j)` with `x_j` as side, for `j = 2..=m` (index `j − 2`).
    models: Vec<SymbolModel>,
}

impl StarPlan {
    pub fn new(spec: &JointSourceSpec, sets: &IndexSetBundle) -> Result<Self> {
        if sets.model != ModelTag::Model3Star {
            return Err(invalid(format!("star plan given a {} bundle", sets.model)));
        }
        let pmf = joint_pmf(spec)?;
        let m = spec.terminals();
        let models = (2..=m)
            .map(|j| pmf.pair_model(Var::Terminal(1), &[Var::Terminal(j)]))
            .collect::<Result<_>>()?;
        Ok(StarPlan {
            n: sets.n,
            m,
            h: sets.set("H")?.clone(),
            key_set: sets.set("K")?.clone(),
            f_set: sets.set("F")?.clone(),
            fp_set: sets.set("F'")?.clone(),
            models,
        })
    }

    pub fn seed_len(&self) -> usize {
        self.fp_set.len()
    }

    /// Terminal 1: `(U, K, F, F' ⊕ K̃)`.
    pub fn encode(&self, x1: &BitBlock, seed: &Bits) -> Result<(BitBlock, Bits, Bits, Bits)> {
        check_len("seed", seed, self.seed_len())?;
        let u = polar_transform(x1);
        let key = extract(&u, &self.key_set)?;
        let f = extract(&u, &self.f_set)?;
        let fp = xor_pad(&extract(&u, &self.fp_set)?, seed)?;
        Ok((u, key, f, fp))
    }

    /// Terminal `j`'s decoded block and key.
    pub fn decode(&self, j: usize, xj: &BitBlock, f: &Bits, fp_pad: &Bits, seed: &Bits) -> Result<(BitBlock, Bits)> {
        let mut known = Known::new(self.n);
        known.fill(&self.f_set, f)?;
        known.fill(&self.fp_set, &xor_pad(fp_pad, seed)?)?;
        let frozen = known.frozen(&self.h)?;
        let u = sc_decode(&side_symbols(&[xj], self.n), &frozen, &self.models[j - 2])?;
        let key = extract(&u, &self.key_set)?;
        Ok((u, key))
    }

    pub fn run_on(&self, block: &SampleBlock, seed: &Bits) -> Result<ProtocolReport> {
        let (u, key, f, fp) = self.encode(block.terminal(1), seed)?;
        let mut transcript = Transcript::default();
        transcript.push(1, 1, Label::F, f);
        transcript.push(1, 1, Label::FPad, fp);
        let f = transcript.segment(1, Label::F, 0, self.f_set.len())?;
        let fp = transcript.segment(1, Label::FPad, 0, self.fp_set.len())?;
        let mut keys = BTreeMap::new();
        let mut diags = Vec::new();
        for j in 2..=self.m {
            let (uj, kj) = self.decode(j, block.terminal(j), &f, &fp, seed)?;
            diags.push(BlockDiag {
                block: 1,
                terminal: j,
                target: 1,
                decode_ok: uj == u,
            });
            keys.insert(j, kj);
        }
        let material = KeyMaterial {
            k: 1,
            keys: vec![key],
            consumed: vec![seed.clone()],
            ..Default::default()
        };
        Ok(ProtocolReport::assemble(
            ModelTag::Model3Star,
            self.n,
            1,
            material,
            keys,
            transcript,
            diags,
            Vec::new(),
            0,
        ))
    }
}

pub fn model3_star_run<R: Rng + ?Sized>(
    spec: &JointSourceSpec,
    sets: &IndexSetBundle,
    seed: &Bits,
    rng: &mut R,
) -> Result<ProtocolReport> {
    let plan = StarPlan::new(spec, sets)?;
    let block = sample_block(spec, plan.n, rng)?;
    plan.run_on(&block, seed)
}

/// Three-terminal chain: terminal 2 encodes; terminal 1 decodes blocks
/// forward, terminal 3 backward.
#[derive(Clone, Debug)]
pub struct TriPlan {
    pub n: usize,
    pub h21: IndexSet,
    pub h23: IndexSet,
    pub k_set: IndexSet,
    pub kbar: IndexSet,
    pub f21: IndexSet,
    pub f_xm: IndexSet,
    pub f2: IndexSet,
    pub fp: IndexSet,
    pub fbar_last: IndexSet,
    model1: SymbolModel,
    model3: SymbolModel,
    has_eve: bool,
}

/// Terminal 2's view of one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriBlock {
    pub u: BitBlock,
    pub key: Bits,
    pub kbar: Bits,
}

impl TriPlan {
    pub fn new(spec: &JointSourceSpec, sets: &IndexSetBundle) -> Result<Self> {
        if sets.model != ModelTag::Model3Tri {
            return Err(invalid(format!("three-terminal plan given a {} bundle", sets.model)));
        }
        let pmf = joint_pmf(spec)?;
        let s = |n: &str| sets.set(n).cloned();
        Ok(TriPlan {
            n: sets.n,
            h21: s("H_X2|X1")?,
            h23: s("H_X2|X3")?,
            k_set: s("K")?,
            kbar: s("Kbar")?,
            f21: s("F21")?,
            f_xm: s("F_XM")?,
            f2: s("F2")?,
            fp: s("Fp")?,
            fbar_last: s("Fbar_last")?,
            model1: pmf.pair_model(Var::Terminal(2), &[Var::Terminal(1)])?,
            model3: pmf.pair_model(Var::Terminal(2), &[Var::Terminal(3)])?,
            has_eve: spec.has_eve(),
        })
    }

    pub fn seed_len(&self) -> usize {
        self.fp.len()
    }

    /// Key positions of block `b`: `K` in block 1, `K ∪ F_XM` afterwards.
    pub fn key_positions(&self, b: usize) -> IndexSet {
        if b == 1 {
            self.k_set.clone()
        } else {
            self.k_set.union(&self.f_xm)
        }
    }

    fn check_chain(&self, k: usize) -> Result<()> {
        check_k(k)?;
        if k == 1 && !self.kbar.is_empty() {
            return Err(invalid("a single-block three-terminal run cannot carry Kbar; use k ≥ 2"));
        }
        Ok(())
    }

    /// Terminal 2's block `b` of `k`: keys and public segments.
    pub fn encode_block(
        &self,
        b: usize,
        k: usize,
        x2: &BitBlock,
        kbar_prev: &Bits,
        seed: &Bits,
        transcript: &mut Transcript,
    ) -> Result<TriBlock> {
        check_len("seed", seed, self.seed_len())?;
        let u = polar_transform(x2);
        if b == 1 {
            transcript.push(b, 2, Label::F, extract(&u, &self.f21)?);
        } else {
            check_len("Kbar", kbar_prev, self.kbar.len())?;
            transcript.push(b, 2, Label::FPad, xor_pad(&extract(&u, &self.f_xm)?, kbar_prev)?);
            transcript.push(b, 2, Label::F, extract(&u, &self.f2)?);
        }
        transcript.push(b, 2, Label::FPad, xor_pad(&extract(&u, &self.fp)?, seed)?);
        if b == k {
            transcript.push(b, 2, Label::FBar, extract(&u, &self.fbar_last)?);
        }
        let kbar = if b < k { extract(&u, &self.kbar)? } else { Bits::zeros(0) };
        Ok(TriBlock {
            key: extract(&u, &self.key_positions(b))?,
            kbar,
            u,
        })
    }

    /// Segments of block `b` in order: `(F^(1) ⊕ K̄, F^(2) or F, F' ⊕ K̃, F̄)`.
    fn segments(&self, t: &Transcript, b: usize, k: usize) -> Result<(Bits, Bits, Bits, Bits)> {
        let (pad1, clear) = if b == 1 {
            (Bits::zeros(0), t.segment(b, Label::F, 0, self.f21.len())?)
        } else if self.f_xm.is_empty() {
            (Bits::zeros(0), t.segment(b, Label::F, 0, self.f2.len())?)
        } else {
            let m1 = t.segment(b, Label::FPad, 0, self.f_xm.len())?;
            (m1, t.segment(b, Label::F, 0, self.f2.len())?)
        };
        let pad_nth = if b == 1 || self.f_xm.is_empty() { 0 } else { 1 };
        let fp = t.segment(b, Label::FPad, pad_nth, self.fp.len())?;
        let fbar = if b == k {
            t.segment(b, Label::FBar, 0, self.fbar_last.len())?
        } else {
            Bits::zeros(0)
        };
        Ok((pad1, clear, fp, fbar))
    }

    fn known_common(&self, b: usize, clear: &Bits, fp: &Bits, seed: &Bits) -> Result<Known> {
        let mut known = Known::new(self.n);
        known.fill(if b == 1 { &self.f21 } else { &self.f2 }, clear)?;
        known.fill(&self.fp, &xor_pad(fp, seed)?)?;
        Ok(known)
    }

    /// Terminal 1, forward over blocks.
    pub fn decode_forward(&self, x1: &[&BitBlock], t: &Transcript, seeds: &[Bits]) -> Result<Vec<BitBlock>> {
        let k = x1.len();
        let mut out: Vec<BitBlock> = Vec::with_capacity(k);
        for b in 1..=k {
            let (pad1, clear, fp, _) = self.segments(t, b, k)?;
            let mut known = self.known_common(b, &clear, &fp, &seeds[b - 1])?;
            if b > 1 {
                let kbar_prev = extract(&out[b - 2], &self.kbar)?;
                known.fill(&self.f_xm, &xor_pad(&pad1, &kbar_prev)?)?;
            }
            let frozen = known.frozen(&self.h21)?;
            out.push(sc_decode(&side_symbols(&[x1[b - 1]], self.n), &frozen, &self.model1)?);
        }
        Ok(out)
    }

    /// Terminal 3, backward over blocks.
    pub fn decode_backward(&self, x3: &[&BitBlock], t: &Transcript, seeds: &[Bits]) -> Result<Vec<BitBlock>> {
        let k = x3.len();
        let mut out: Vec<Option<BitBlock>> = vec![None; k];
        for b in (1..=k).rev() {
            let (_, clear, fp, fbar) = self.segments(t, b, k)?;
            let mut known = self.known_common(b, &clear, &fp, &seeds[b - 1])?;
            if b == k {
                known.fill(&self.fbar_last, &fbar)?;
            } else {
                let next = out[b].as_ref().expect("later block decoded first");
                let (pad_next, _, _, _) = self.segments(t, b + 1, k)?;
                let kbar = xor_pad(&pad_next, &extract(next, &self.f_xm)?)?;
                known.fill(&self.kbar, &kbar)?;
            }
            let frozen = known.frozen(&self.h23)?;
            out[b - 1] = Some(sc_decode(&side_symbols(&[x3[b - 1]], self.n), &frozen, &self.model3)?);
        }
        Ok(out.into_iter().map(|u| u.expect("all blocks decoded")).collect())
    }

    /// Terminal 2's side of the chain: material and transcript.
    pub fn encode_chain(&self, x2: &[&BitBlock], seeds: &[Bits]) -> Result<(Vec<TriBlock>, Transcript)> {
        let k = x2.len();
        self.check_chain(k)?;
        if seeds.len() != k {
            return Err(structural(format!("three-terminal chain needs {k} seeds, got {}", seeds.len())));
        }
        let mut t = Transcript::default();
        let mut out: Vec<TriBlock> = Vec::with_capacity(k);
        for b in 1..=k {
            let prev = if b > 1 { out[b - 2].kbar.clone() } else { Bits::zeros(0) };
            out.push(self.encode_block(b, k, x2[b - 1], &prev, &seeds[b - 1], &mut t)?);
        }
        Ok((out, t))
    }

    pub fn run_on(&self, blocks: &[SampleBlock], seeds: &[Bits]) -> Result<ProtocolReport> {
        let k = blocks.len();
        let col = |j: usize| blocks.iter().map(|s| s.terminal(j)).collect::<Vec<_>>();
        let (enc, transcript) = self.encode_chain(&col(2), seeds)?;
        let u1 = self.decode_forward(&col(1), &transcript, seeds)?;
        let u3 = self.decode_backward(&col(3), &transcript, seeds)?;
        let mut diags = Vec::new();
        let mut keys = BTreeMap::new();
        for (j, us) in [(1, &u1), (3, &u3)] {
            let mut kj = Vec::new();
            for (b, u) in us.iter().enumerate() {
                diags.push(BlockDiag {
                    block: b + 1,
                    terminal: j,
                    target: 2,
                    decode_ok: *u == enc[b].u,
                });
                kj.push(extract(u, &self.key_positions(b + 1))?);
            }
            keys.insert(j, Bits::concat(&kj.iter().collect::<Vec<_>>()));
        }
        let material = KeyMaterial {
            k,
            keys: enc.iter().map(|e| e.key.clone()).collect(),
            kbar: enc.iter().take(k - 1).map(|e| e.kbar.clone()).collect(),
            consumed: seeds.to_vec(),
            ..Default::default()
        };
        let eve = if self.has_eve {
            blocks.iter().map(|s| s.eve().expect("source has Eve").clone()).collect()
        } else {
            Vec::new()
        };
        Ok(ProtocolReport::assemble(
            ModelTag::Model3Tri,
            self.n,
            2,
            material,
            keys,
            transcript,
            diags,
            eve,
            0,
        ))
    }
}

/// Samples `k` blocks and runs the three-terminal chain with `k` independent seeds.
pub fn model3_tri_run<R: Rng + ?Sized>(
    spec: &JointSourceSpec,
    sets: &IndexSetBundle,
    k: usize,
    seeds: &[Bits],
    rng: &mut R,
) -> Result<ProtocolReport> {
    let plan = TriPlan::new(spec, sets)?;
    plan.check_chain(k)?;
    let blocks = (0..k)
        .map(|_| sample_block(spec, plan.n, rng))
        .collect::<Result<Vec<_>>>()?;
    plan.run_on(&blocks, seeds)
}
