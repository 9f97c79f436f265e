use std::collections::BTreeMap;

use rand::Rng;

use super::{check_k, check_len, BlockDiag, KeyMaterial, Known, Label, ProtocolReport, Transcript};
use crate::error::{invalid, Result};
use crate::polar_core::{extract, polar_transform, xor_pad, BitBlock, Bits, IndexSet};
use crate::polarization::{IndexSetBundle, ModelTag};
use crate::sc_codec::{sc_decode, side_symbols, FrozenMap, SymbolModel};
use crate::sources::{joint_pmf, sample_block, JointSourceSpec, SampleBlock, Var};

/// Alice's outputs for one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AliceBlock {
    pub u: BitBlock,
    pub key: Bits,
    pub seed_next: Bits,
    /// `U[V ∩ H]`, sent in the clear.
    pub f: Bits,
    /// `U[H \ V] ⊕ K̃_{i−1}`.
    pub f_pad: Bits,
}

/// Two-terminal scheme with unlimited public rate: Alice polarizes `X`,
/// Bob SC-decodes from `Y` with `H_X|Y` frozen.
#[derive(Clone, Debug)]
pub struct Model1Plan {
    pub n: usize,
    pub h: IndexSet,
    pub a: IndexSet,
    pub key_set: IndexSet,
    pub f_set: IndexSet,
    pub fp_set: IndexSet,
    bob_model: SymbolModel,
    has_eve: bool,
}

impl Model1Plan {
    pub fn new(spec: &JointSourceSpec, sets: &IndexSetBundle) -> Result<Self> {
        if sets.model != ModelTag::Model1 {
            return Err(invalid(format!("model1 plan given a {} bundle", sets.model)));
        }
        let pmf = joint_pmf(spec)?;
        Ok(Model1Plan {
            n: sets.n,
            h: sets.set("H_X|Y")?.clone(),
            a: sets.set("A_XYZ")?.clone(),
            key_set: sets.set("K")?.clone(),
            f_set: sets.set("F")?.clone(),
            fp_set: sets.set("F'")?.clone(),
            bob_model: pmf.pair_model(Var::Terminal(1), &[Var::Terminal(2)])?,
            has_eve: spec.has_eve(),
        })
    }

    pub fn seed_len(&self) -> usize {
        self.fp_set.len()
    }

    pub fn alice_block(&self, x: &BitBlock, seed_prev: &Bits) -> Result<AliceBlock> {
        check_len("seed", seed_prev, self.seed_len())?;
        let u = polar_transform(x);
        Ok(AliceBlock {
            key: extract(&u, &self.key_set)?,
            seed_next: extract(&u, &self.a)?,
            f: extract(&u, &self.f_set)?,
            f_pad: xor_pad(&extract(&u, &self.fp_set)?, seed_prev)?,
            u,
        })
    }

    /// Bob's frozen values on `H_X|Y` from the message and his copy of the seed.
    pub fn bob_frozen(&self, f: &Bits, f_pad: &Bits, seed_prev: &Bits) -> Result<FrozenMap> {
        let mut known = Known::new(self.n);
        known.fill(&self.f_set, f)?;
        known.fill(&self.fp_set, &xor_pad(f_pad, seed_prev)?)?;
        known.frozen(&self.h)
    }

    /// Bob's decoded block, key and next seed.
    pub fn bob_block(&self, y: &BitBlock, f: &Bits, f_pad: &Bits, seed_prev: &Bits) -> Result<(BitBlock, Bits, Bits)> {
        let frozen = self.bob_frozen(f, f_pad, seed_prev)?;
        let u_hat = sc_decode(&side_symbols(&[y], self.n), &frozen, &self.bob_model)?;
        let key = extract(&u_hat, &self.key_set)?;
        let seed = extract(&u_hat, &self.a)?;
        Ok((u_hat, key, seed))
    }

    /// Runs all blocks on the given realizations.
    pub fn run_on(&self, blocks: &[SampleBlock], seed0: &Bits) -> Result<ProtocolReport> {
        check_k(blocks.len())?;
        check_len("initial seed", seed0, self.seed_len())?;
        let mut material = KeyMaterial {
            k: blocks.len(),
            consumed: vec![seed0.clone()],
            ..Default::default()
        };
        let mut transcript = Transcript::default();
        let mut diags = Vec::new();
        let mut bob_keys = Vec::new();
        let (mut a_seed, mut b_seed) = (seed0.clone(), seed0.clone());
        for (i, s) in blocks.iter().enumerate() {
            let b = i + 1;
            let al = self.alice_block(s.terminal(1), &a_seed)?;
            transcript.push(b, 1, Label::F, al.f.clone());
            transcript.push(b, 1, Label::FPad, al.f_pad.clone());
            let f = transcript.segment(b, Label::F, 0, self.f_set.len())?;
            let fp = transcript.segment(b, Label::FPad, 0, self.fp_set.len())?;
            let (u_hat, key, seed) = self.bob_block(s.terminal(2), &f, &fp, &b_seed)?;
            diags.push(BlockDiag {
                block: b,
                terminal: 2,
                target: 1,
                decode_ok: u_hat == al.u,
            });
            bob_keys.push(key);
            b_seed = seed;
            a_seed = al.seed_next.clone();
            material.keys.push(al.key);
            material.seeds_next.push(al.seed_next);
        }
        let eve = if self.has_eve {
            blocks.iter().map(|s| s.eve().expect("source has Eve").clone()).collect()
        } else {
            Vec::new()
        };
        let mut keys = BTreeMap::new();
        keys.insert(2, Bits::concat(&bob_keys.iter().collect::<Vec<_>>()));
        let reclaim = self.a.len();
        Ok(ProtocolReport::assemble(
            ModelTag::Model1,
            self.n,
            1,
            material,
            keys,
            transcript,
            diags,
            eve,
            reclaim,
        ))
    }
}

/// Samples `k` blocks and runs the model-1 chain with initial seed `seed0`.
pub fn model1_run<R: Rng + ?Sized>(
    spec: &JointSourceSpec,
    sets: &IndexSetBundle,
    k: usize,
    seed0: &Bits,
    rng: &mut R,
) -> Result<ProtocolReport> {
    check_k(k)?;
    let plan = Model1Plan::new(spec, sets)?;
    let blocks = (0..k)
        .map(|_| sample_block(spec, plan.n, rng))
        .collect::<Result<Vec<_>>>()?;
    plan.run_on(&blocks, seed0)
}
