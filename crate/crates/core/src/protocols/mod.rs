//! Chained key-agreement protocols over an authenticated public channel.
//!
//! Each model has a plan type built from a source spec and an index-set
//! bundle. A plan exposes the per-block encoder and decoder steps and a
//! `run_on` driver that executes every block on given source realizations;
//! the `*_run` functions sample the realizations from an rng first.
//!
//! Runs are deterministic functions of their inputs. The simulator knows the
//! encoder's true polarized blocks, so every SC decode is tagged with a
//! `decode_ok` diagnostic.

mod broadcast;
mod model1;
mod quantized;
mod tree;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{structural, Result};
use crate::polar_core::{BitBlock, Bits, IndexSet};
use crate::polarization::{IndexSetBundle, ModelTag};
use crate::sc_codec::FrozenMap;
use crate::sources::{JointSourceSpec, TestChannel};

pub use broadcast::{model3_star_run, model3_tri_run, StarPlan, TriPlan};
pub use model1::{model1_run, AliceBlock, Model1Plan};
pub use quantized::{
    biometric_generated_run, biometric_zero_leakage_run, model2_run, QuantizedBlock, QuantizedPlan,
};
pub use tree::{model4_run, TreePlan};

/// Kind of a public message segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    /// Bits sent in the clear.
    #[serde(rename = "F")]
    F,
    /// Bits that could be sent in the clear but are reported separately.
    #[serde(rename = "F'")]
    FPrime,
    /// Bits one-time-padded with a seed or a previous block's key material.
    #[serde(rename = "F⊕pad")]
    FPad,
    /// The quantizer's shared randomness.
    #[serde(rename = "R1")]
    R1,
    /// The extra clear segment of a chain's last block.
    #[serde(rename = "F̄")]
    FBar,
    /// A fully padded helper message.
    #[serde(rename = "M")]
    M,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    /// 1-based block index; 0 for once-per-run messages.
    pub block: usize,
    /// Sending terminal (1-based).
    pub sender: usize,
    pub label: Label,
    pub payload: Bits,
}

/// The ordered public messages of one run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub messages: Vec<Message>,
}

impl Transcript {
    /// Appends a segment; empty payloads are not transmitted.
    pub fn push(&mut self, block: usize, sender: usize, label: Label, payload: Bits) {
        if !payload.is_empty() {
            self.messages.push(Message {
                block,
                sender,
                label,
                payload,
            });
        }
    }

    pub fn total_bits(&self) -> usize {
        self.messages.iter().map(|m| m.payload.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn block(&self, block: usize) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(move |m| m.block == block)
    }

    /// All payloads concatenated in transmission order.
    pub fn concat(&self) -> Bits {
        Bits::concat(&self.messages.iter().map(|m| &m.payload).collect::<Vec<_>>())
    }

    /// `(block, label, length)` per message, for layout checks.
    pub fn layout(&self) -> Vec<(usize, Label, usize)> {
        self.messages
            .iter()
            .map(|m| (m.block, m.label, m.payload.len()))
            .collect()
    }

    fn find(&self, block: usize, label: Label, nth: usize) -> Option<&Bits> {
        self.messages
            .iter()
            .filter(|m| m.block == block && m.label == label)
            .nth(nth)
            .map(|m| &m.payload)
    }

    /// The `nth` payload with this block and label, or an empty vector when the
    /// segment was empty and so never sent.
    pub fn segment(&self, block: usize, label: Label, nth: usize, expect: usize) -> Result<Bits> {
        match self.find(block, label, nth) {
            Some(b) if b.len() == expect => Ok(b.clone()),
            Some(b) => Err(structural(format!(
                "block {block} {label:?} segment has {} bits, expected {expect}",
                b.len()
            ))),
            None if expect == 0 => Ok(Bits::zeros(0)),
            None => Err(structural(format!("block {block} has no {label:?} segment"))),
        }
    }
}

/// Key bits, chained seeds and consumed pre-shared secrets of one run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyMaterial {
    pub k: usize,
    /// `K_i` for `i = 1..=k`.
    pub keys: Vec<Bits>,
    /// `K̃_i` generated in block `i` for block `i + 1`.
    pub seeds_next: Vec<Bits>,
    /// `K̄_i` carried across blocks (three-terminal chain).
    pub kbar: Vec<Bits>,
    /// Pre-shared secrets spent: the initial seed, the per-block seeds, or the pads.
    pub consumed: Vec<Bits>,
}

impl KeyMaterial {
    pub fn key(&self) -> Bits {
        Bits::concat(&self.keys.iter().collect::<Vec<_>>())
    }

    pub fn key_bits(&self) -> usize {
        self.keys.iter().map(Bits::len).sum()
    }

    pub fn seed_bits(&self) -> usize {
        self.consumed.iter().map(Bits::len).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateAccounting {
    pub n: usize,
    pub k: usize,
    pub key_bits: usize,
    pub seed_bits: usize,
    pub public_bits: usize,
    /// Seed bits generated in the last block that no later block consumes.
    pub reclaimable_bits: usize,
    pub key_rate: f64,
    pub seed_rate: f64,
    pub public_rate: f64,
}

impl RateAccounting {
    pub fn new(n: usize, k: usize, material: &KeyMaterial, transcript: &Transcript, reclaimable_bits: usize) -> Self {
        let kn = (k * n) as f64;
        let key_bits = material.key_bits();
        let seed_bits = material.seed_bits();
        let public_bits = transcript.total_bits();
        RateAccounting {
            n,
            k,
            key_bits,
            seed_bits,
            public_bits,
            reclaimable_bits,
            key_rate: key_bits as f64 / kn,
            seed_rate: seed_bits as f64 / kn,
            public_rate: public_bits as f64 / kn,
        }
    }
}

/// One SC decode by one terminal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDiag {
    pub block: usize,
    pub terminal: usize,
    /// For tree relays: the vertex whose block was reconstructed.
    pub target: usize,
    pub decode_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub model: ModelTag,
    pub n: usize,
    pub k: usize,
    /// The encoding terminal (Alice, terminal 1, terminal 2, or the tree root).
    pub encoder: usize,
    pub encoder_key: Bits,
    pub terminal_keys: BTreeMap<usize, Bits>,
    pub agreement: bool,
    pub transcript: Transcript,
    pub material: KeyMaterial,
    pub rates: RateAccounting,
    pub diagnostics: Vec<BlockDiag>,
    /// Eve's blocks, one per protocol block, when the source has an eavesdropper.
    pub eve_blocks: Vec<BitBlock>,
    /// Model-specific counters (e.g. quantizer randomness drawn).
    pub aux: BTreeMap<String, f64>,
}

/// What the eavesdropper observes.
#[derive(Clone, Debug, PartialEq)]
pub struct EveView<'a> {
    pub transcript: &'a Transcript,
    pub z: &'a [BitBlock],
}

impl ProtocolReport {
    pub fn eve_view(&self) -> EveView<'_> {
        EveView {
            transcript: &self.transcript,
            z: &self.eve_blocks,
        }
    }

    /// Every SC decode reproduced the encoder's block.
    pub fn all_decodes_ok(&self) -> bool {
        self.diagnostics.iter().all(|d| d.decode_ok)
    }

    pub fn failed(&self) -> bool {
        !self.agreement
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        model: ModelTag,
        n: usize,
        encoder: usize,
        material: KeyMaterial,
        terminal_keys: BTreeMap<usize, Bits>,
        transcript: Transcript,
        diagnostics: Vec<BlockDiag>,
        eve_blocks: Vec<BitBlock>,
        reclaimable_bits: usize,
    ) -> Self {
        let encoder_key = material.key();
        let agreement = terminal_keys.values().all(|k| *k == encoder_key);
        let rates = RateAccounting::new(n, material.k, &material, &transcript, reclaimable_bits);
        ProtocolReport {
            model,
            n,
            k: material.k,
            encoder,
            encoder_key,
            terminal_keys,
            agreement,
            transcript,
            material,
            rates,
            diagnostics,
            eve_blocks,
            aux: BTreeMap::new(),
        }
    }
}

/// Uniform pre-shared secret bits.
pub fn provision_seed<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Bits {
    Bits::random(len, rng)
}

/// Partial knowledge of a polarized block, filled segment by segment.
#[derive(Clone, Debug)]
pub(crate) struct Known(Vec<Option<bool>>);

impl Known {
    pub(crate) fn new(n: usize) -> Self {
        Known(vec![None; n])
    }

    pub(crate) fn fill(&mut self, set: &IndexSet, vals: &Bits) -> Result<()> {
        if set.len() != vals.len() {
            return Err(structural(format!(
                "segment of {} bits for a set of {}",
                vals.len(),
                set.len()
            )));
        }
        for (k, i) in set.iter().enumerate() {
            self.0[i - 1] = Some(vals.get(k));
        }
        Ok(())
    }

    /// The frozen map on `set`, which must be fully known.
    pub(crate) fn frozen(&self, set: &IndexSet) -> Result<FrozenMap> {
        let mut vals = Bits::zeros(0);
        for i in set.iter() {
            match self.0[i - 1] {
                Some(b) => vals.push(b),
                None => return Err(structural(format!("frozen index {i} is not known"))),
            }
        }
        FrozenMap::new(set.clone(), vals)
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(crate::error::invalid("k must be at least 1"));
    }
    Ok(())
}

fn check_len(what: &str, b: &Bits, expect: usize) -> Result<()> {
    if b.len() != expect {
        return Err(structural(format!("{what} has {} bits, expected {expect}", b.len())));
    }
    Ok(())
}

/// Dispatches a sampled run for any model.
///
/// `secrets` is the initial seed (models 1, 2, bio-gen, star), the `k`
/// per-block seeds (three-terminal) or the `k` pads (bio-zero); ignored for
/// the tree model.
pub fn run_model<R: Rng + ?Sized>(
    spec: &JointSourceSpec,
    channel: Option<&TestChannel>,
    sets: &IndexSetBundle,
    k: usize,
    secrets: &[Bits],
    rng: &mut R,
) -> Result<ProtocolReport> {
    let one = |s: &[Bits]| -> Result<Bits> {
        s.first()
            .cloned()
            .ok_or_else(|| structural("missing initial seed"))
    };
    match sets.model {
        ModelTag::Model1 => model1_run(spec, sets, k, &one(secrets)?, rng),
        ModelTag::Model2 => model2_run(spec, need_channel(channel)?, sets, k, &one(secrets)?, rng),
        ModelTag::BioGen => biometric_generated_run(spec, need_channel(channel)?, sets, k, &one(secrets)?, rng),
        ModelTag::BioZero => biometric_zero_leakage_run(spec, need_channel(channel)?, sets, k, secrets, rng),
        ModelTag::Model3Star => model3_star_run(spec, sets, &one(secrets)?, rng),
        ModelTag::Model3Tri => model3_tri_run(spec, sets, k, secrets, rng),
        ModelTag::Model4 => model4_run(spec, sets, rng),
    }
}

fn need_channel(c: Option<&TestChannel>) -> Result<&TestChannel> {
    c.ok_or_else(|| crate::error::invalid("model needs a test channel"))
}

/// Sizes of the pre-shared secrets `run_model` expects for `k` blocks.
pub fn secret_sizes(sets: &IndexSetBundle, k: usize) -> Result<Vec<usize>> {
    let len = |name: &str| sets.set(name).map(IndexSet::len);
    Ok(match sets.model {
        ModelTag::Model1 | ModelTag::Model2 | ModelTag::BioGen | ModelTag::Model3Star => vec![len("F'")?],
        ModelTag::BioZero => vec![len("F")? + len("F'")?; k],
        ModelTag::Model3Tri => vec![len("Fp")?; k],
        ModelTag::Model4 => vec![],
    })
}
