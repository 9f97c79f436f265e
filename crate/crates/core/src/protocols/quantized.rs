use std::collections::BTreeMap;

use rand::Rng;

use super::{check_k, check_len, BlockDiag, KeyMaterial, Known, Label, ProtocolReport, Transcript};
use crate::error::{invalid, structural, Result};
use crate::polar_core::{extract, xor_pad, BitBlock, Bits, IndexSet};
use crate::polarization::{IndexSetBundle, ModelTag};
use crate::sc_codec::{sc_decode, side_symbols, StochasticEncoder, SymbolModel};
use crate::sources::{joint_pmf, sample_block, JointSourceSpec, SampleBlock, TestChannel, Var};

/// Alice's outputs for one quantized block (segments before any padding).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedBlock {
    pub v: BitBlock,
    pub key: Bits,
    pub seed_next: Bits,
    pub f: Bits,
    pub fp: Bits,
}

/// Rate-limited schemes that first quantize `X` into `Ṽ` with the stochastic
/// SC encoder: model 2, and the two biometric systems.
#[derive(Clone, Debug)]
pub struct QuantizedPlan {
    pub model: ModelTag,
    pub n: usize,
    pub encoder: StochasticEncoder,
    /// `H_U|Y ∪ V_U|X`, frozen at Bob.
    pub frozen_set: IndexSet,
    pub f_set: IndexSet,
    pub fp_set: IndexSet,
    /// Key positions (`K`, `S`, or `V_U \ H_U|Y` for zero leakage).
    pub key_set: IndexSet,
    /// Next-block seed positions; empty for zero leakage.
    pub a_set: IndexSet,
    bob_model: SymbolModel,
    has_eve: bool,
}

impl QuantizedPlan {
    pub fn new(spec: &JointSourceSpec, channel: &TestChannel, sets: &IndexSetBundle) -> Result<Self> {
        let (key, a) = match sets.model {
            ModelTag::Model2 => ("K", Some("A_UYZ")),
            ModelTag::BioGen => ("S", Some("A_UXY")),
            ModelTag::BioZero => ("S_core", None),
            m => return Err(invalid(format!("quantized plan given a {m} bundle"))),
        };
        if sets.model != ModelTag::Model2 && spec.has_eve() {
            return Err(invalid("biometric systems have no eavesdropper observation"));
        }
        let pmf = joint_pmf(spec)?.with_auxiliary(channel)?;
        let vx = sets.set("V_U|X")?.clone();
        let encoder = StochasticEncoder::new(
            vx.clone(),
            sets.set("H_U")?.clone(),
            pmf.pair_model(Var::Aux, &[Var::Terminal(1)])?,
        )?;
        Ok(QuantizedPlan {
            model: sets.model,
            n: sets.n,
            encoder,
            frozen_set: sets.set("H_U|Y")?.union(&vx),
            f_set: sets.set("F")?.clone(),
            fp_set: sets.set("F'")?.clone(),
            key_set: sets.set(key)?.clone(),
            a_set: match a {
                Some(a) => sets.set(a)?.clone(),
                None => IndexSet::empty(sets.n),
            },
            bob_model: pmf.pair_model(Var::Aux, &[Var::Terminal(2)])?,
            has_eve: spec.has_eve(),
        })
    }

    pub fn zero_leakage(&self) -> bool {
        self.model == ModelTag::BioZero
    }

    pub fn r1_len(&self) -> usize {
        self.encoder.v_ux.len()
    }

    /// Initial seed length, or the per-block pad length for zero leakage.
    pub fn secret_len(&self) -> usize {
        if self.zero_leakage() {
            self.f_set.len() + self.fp_set.len()
        } else {
            self.fp_set.len()
        }
    }

    /// Quantizes one block and splits it.
    pub fn alice_block<R: Rng + ?Sized>(&self, x: &BitBlock, r1: &Bits, rng: &mut R) -> Result<QuantizedBlock> {
        let v = self.encoder.encode(x, r1, rng)?;
        self.split(v)
    }

    /// Splits a quantized block into key, seed and message segments.
    pub fn split(&self, v: BitBlock) -> Result<QuantizedBlock> {
        let f = extract(&v, &self.f_set)?;
        let mut key = extract(&v, &self.key_set)?;
        if self.zero_leakage() {
            key.extend_from(&f);
        }
        Ok(QuantizedBlock {
            key,
            seed_next: extract(&v, &self.a_set)?,
            fp: extract(&v, &self.fp_set)?,
            f,
            v,
        })
    }

    /// The public segments of one block: `(label, payload)` in order.
    pub fn message(&self, blk: &QuantizedBlock, secret: &Bits) -> Result<Vec<(Label, Bits)>> {
        if self.zero_leakage() {
            let m = Bits::concat(&[&blk.f, &blk.fp]);
            Ok(vec![(Label::M, xor_pad(&m, secret)?)])
        } else {
            Ok(vec![(Label::F, blk.f.clone()), (Label::FPad, xor_pad(&blk.fp, secret)?)])
        }
    }

    /// Bob's decode from `Y`, the shared randomness and the unpadded `(F, F')`.
    pub fn bob_block(&self, y: &BitBlock, r1: &Bits, f: &Bits, fp: &Bits) -> Result<(BitBlock, Bits, Bits)> {
        let mut known = Known::new(self.n);
        known.fill(&self.encoder.v_ux, r1)?;
        known.fill(&self.f_set, f)?;
        known.fill(&self.fp_set, fp)?;
        let frozen = known.frozen(&self.frozen_set)?;
        let v_hat = sc_decode(&side_symbols(&[y], self.n), &frozen, &self.bob_model)?;
        let blk = self.split(v_hat)?;
        Ok((blk.v, blk.key, blk.seed_next))
    }

    /// Runs all blocks with shared randomness `r1`.
    ///
    /// `secrets` holds the initial seed, or one pad per block for zero leakage.
    pub fn run_on<R: Rng + ?Sized>(
        &self,
        blocks: &[SampleBlock],
        r1: &Bits,
        secrets: &[Bits],
        rng: &mut R,
    ) -> Result<ProtocolReport> {
        let k = blocks.len();
        check_k(k)?;
        check_len("R1", r1, self.r1_len())?;
        let want = if self.zero_leakage() { k } else { 1 };
        if secrets.len() != want {
            return Err(structural(format!("{} needs {want} pre-shared secrets, got {}", self.model, secrets.len())));
        }
        for s in secrets {
            check_len("pre-shared secret", s, self.secret_len())?;
        }
        let mut material = KeyMaterial {
            k,
            consumed: secrets.to_vec(),
            ..Default::default()
        };
        let mut transcript = Transcript::default();
        transcript.push(0, 1, Label::R1, r1.clone());
        let r1_rx = transcript.segment(0, Label::R1, 0, self.r1_len())?;
        let mut diags = Vec::new();
        let mut bob_keys = Vec::new();
        let (mut a_seed, mut b_seed) = (secrets[0].clone(), secrets[0].clone());
        for (i, s) in blocks.iter().enumerate() {
            let b = i + 1;
            let pad = if self.zero_leakage() { &secrets[i] } else { &a_seed };
            let blk = self.alice_block(s.terminal(1), r1, rng)?;
            for (label, payload) in self.message(&blk, pad)? {
                transcript.push(b, 1, label, payload);
            }
            let (f, fp) = if self.zero_leakage() {
                let m = transcript.segment(b, Label::M, 0, self.secret_len())?;
                let m = xor_pad(&m, &secrets[i])?;
                (m.slice(0, self.f_set.len()), m.slice(self.f_set.len(), self.fp_set.len()))
            } else {
                let f = transcript.segment(b, Label::F, 0, self.f_set.len())?;
                let fp = transcript.segment(b, Label::FPad, 0, self.fp_set.len())?;
                (f, xor_pad(&fp, &b_seed)?)
            };
            let (v_hat, key, seed) = self.bob_block(s.terminal(2), &r1_rx, &f, &fp)?;
            diags.push(BlockDiag {
                block: b,
                terminal: 2,
                target: 1,
                decode_ok: v_hat == blk.v,
            });
            bob_keys.push(key);
            b_seed = seed;
            a_seed = blk.seed_next.clone();
            material.keys.push(blk.key);
            if !self.zero_leakage() {
                material.seeds_next.push(blk.seed_next);
            }
        }
        let eve = if self.has_eve {
            blocks.iter().map(|s| s.eve().expect("source has Eve").clone()).collect()
        } else {
            Vec::new()
        };
        let mut keys = BTreeMap::new();
        keys.insert(2, Bits::concat(&bob_keys.iter().collect::<Vec<_>>()));
        let mut report = ProtocolReport::assemble(
            self.model,
            self.n,
            1,
            material,
            keys,
            transcript,
            diags,
            eve,
            self.a_set.len(),
        );
        let h_u = &self.encoder.h_u;
        report.aux.insert("r1_bits".into(), self.r1_len() as f64);
        report.aux.insert(
            "side_informed_draws_per_block".into(),
            h_u.difference(&self.encoder.v_ux).len() as f64,
        );
        report.aux.insert("prior_draws_per_block".into(), h_u.complement().difference(&self.encoder.v_ux).len() as f64);
        Ok(report)
    }
}

fn quantized_run<R: Rng + ?Sized>(
    spec: &JointSourceSpec,
    channel: &TestChannel,
    sets: &IndexSetBundle,
    k: usize,
    secrets: &[Bits],
    rng: &mut R,
) -> Result<ProtocolReport> {
    check_k(k)?;
    let plan = QuantizedPlan::new(spec, channel, sets)?;
    let blocks = (0..k)
        .map(|_| sample_block(spec, plan.n, rng))
        .collect::<Result<Vec<_>>>()?;
    let r1 = Bits::random(plan.r1_len(), rng);
    plan.run_on(&blocks, &r1, secrets, rng)
}

/// Model 2: quantize, then chain like model 1 on the quantized blocks.
pub fn model2_run<R: Rng + ?Sized>(
    spec: &JointSourceSpec,
    channel: &TestChannel,
    sets: &IndexSetBundle,
    k: usize,
    seed0: &Bits,
    rng: &mut R,
) -> Result<ProtocolReport> {
    quantized_run(spec, channel, sets, k, std::slice::from_ref(seed0), rng)
}

/// Generated-secret biometric system: model 2 without an eavesdropper.
pub fn biometric_generated_run<R: Rng + ?Sized>(
    spec: &JointSourceSpec,
    channel: &TestChannel,
    sets: &IndexSetBundle,
    k: usize,
    seed0: &Bits,
    rng: &mut R,
) -> Result<ProtocolReport> {
    quantized_run(spec, channel, sets, k, std::slice::from_ref(seed0), rng)
}

/// Zero-leakage biometric system: helper data one-time-padded with `pads[i]`.
pub fn biometric_zero_leakage_run<R: Rng + ?Sized>(
    spec: &JointSourceSpec,
    channel: &TestChannel,
    sets: &IndexSetBundle,
    k: usize,
    pads: &[Bits],
    rng: &mut R,
) -> Result<ProtocolReport> {
    if pads.len() != k {
        return Err(structural(format!("zero leakage needs {k} pads, got {}", pads.len())));
    }
    quantized_run(spec, channel, sets, k, pads, rng)
}
