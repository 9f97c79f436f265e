use std::collections::BTreeMap;

use rand::Rng;

use super::{BlockDiag, KeyMaterial, Known, Label, ProtocolReport, Transcript};
use crate::error::{invalid, structural, Result};
use crate::polar_core::{extract, polar_transform, BitBlock, Bits, IndexSet};
use crate::polarization::{IndexSetBundle, ModelTag};
use crate::sc_codec::{sc_decode, side_symbols, SymbolModel};
use crate::sources::{joint_pmf, sample_block, JointSourceSpec, RootedTree, SampleBlock, Var};

/// Markov-tree scheme: vertices publish toward their weakest child, and every
/// terminal relays its reconstruction up to the root.
#[derive(Clone, Debug)]
pub struct TreePlan {
    pub n: usize,
    pub tree: RootedTree,
    pub n1: usize,
    pub key_set: IndexSet,
    /// `(vertex, published set)` in transmission order (depth, then index).
    pub publishers: Vec<(usize, IndexSet)>,
    /// `p(x_parent, x_child)` with the child as side, indexed by child.
    models: Vec<Option<SymbolModel>>,
}

impl TreePlan {
    pub fn new(spec: &JointSourceSpec, sets: &IndexSetBundle) -> Result<Self> {
        if sets.model != ModelTag::Model4 {
            return Err(invalid(format!("tree plan given a {} bundle", sets.model)));
        }
        let JointSourceSpec::MarkovTree { m, edges } = spec else {
            return Err(invalid("model4 needs a Markov-tree source"));
        };
        let n0 = sets.param("n0")?;
        let n1 = sets.param("n1")?;
        let tree = RootedTree::new(*m, edges, n0)?;
        let pmf = joint_pmf(spec)?;
        let mut publishers = Vec::new();
        for d in 0..tree.max_depth() {
            for j in tree.at_depth(d) {
                if let Some(p) = crate::polarization::pub_partner(&tree, j, n1) {
                    publishers.push((j, sets.set(&crate::polarization::h_name(j, p))?.clone()));
                }
            }
        }
        let models = (0..=*m)
            .map(|c| match tree.parent.get(c).copied().flatten() {
                Some(p) => pmf.pair_model(Var::Terminal(p), &[Var::Terminal(c)]).map(Some),
                None => Ok(None),
            })
            .collect::<Result<_>>()?;
        Ok(TreePlan {
            n: sets.n,
            n1,
            key_set: sets.set("K")?.clone(),
            publishers,
            models,
            tree,
        })
    }

    /// Vertices whose blocks the transcript depends on.
    pub fn involved(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.publishers.iter().map(|p| p.0).collect();
        v.sort();
        v
    }

    pub fn published(&self, j: usize) -> Option<&IndexSet> {
        self.publishers.iter().find(|p| p.0 == j).map(|p| &p.1)
    }

    /// The root's key and every publisher's segment; `block_of(v)` is vertex `v`'s block.
    pub fn encode(&self, block_of: impl Fn(usize) -> BitBlock) -> Result<(Bits, Transcript)> {
        let mut t = Transcript::default();
        for (j, set) in &self.publishers {
            t.push(1, *j, Label::F, extract(&polar_transform(&block_of(*j)), set)?);
        }
        let key = extract(&polar_transform(&block_of(self.tree.root)), &self.key_set)?;
        Ok((key, t))
    }

    fn message(&self, t: &Transcript, j: usize) -> Result<Bits> {
        let set = self.published(j).expect("publishing vertex");
        match t.messages.iter().find(|m| m.sender == j) {
            Some(m) if m.payload.len() == set.len() => Ok(m.payload.clone()),
            Some(_) => Err(structural(format!("vertex {j} message has the wrong length"))),
            None if set.is_empty() => Ok(Bits::zeros(0)),
            None => Err(structural(format!("no message from vertex {j}"))),
        }
    }

    /// Terminal `v` reconstructs each ancestor's polarized block in turn.
    ///
    /// Returns `(ancestor, Û)` along the path to the root.
    pub fn decode(&self, v: usize, xv: &BitBlock, t: &Transcript) -> Result<Vec<(usize, BitBlock)>> {
        let path = self.tree.path_to_root(v);
        let mut side = xv.clone();
        let mut out = Vec::new();
        for w in path.windows(2) {
            let (child, parent) = (w[0], w[1]);
            let set = self.published(parent).expect("parents publish");
            let mut known = Known::new(self.n);
            known.fill(set, &self.message(t, parent)?)?;
            let model = self.models[child].as_ref().expect("non-root vertex");
            let u = sc_decode(&side_symbols(&[&side], self.n), &known.frozen(set)?, model)?;
            side = polar_transform(&u);
            out.push((parent, u));
        }
        Ok(out)
    }

    pub fn run_on(&self, block: &SampleBlock) -> Result<ProtocolReport> {
        let (key, transcript) = self.encode(|j| block.terminal(j).clone())?;
        let truth: Vec<Option<BitBlock>> = (0..=self.tree.m)
            .map(|j| (j > 0).then(|| polar_transform(block.terminal(j))))
            .collect();
        let mut keys = BTreeMap::new();
        let mut diags = Vec::new();
        for v in 1..=self.tree.m {
            if v == self.tree.root {
                continue;
            }
            let hops = self.decode(v, block.terminal(v), &transcript)?;
            for (target, u) in &hops {
                diags.push(BlockDiag {
                    block: 1,
                    terminal: v,
                    target: *target,
                    decode_ok: Some(u) == truth[*target].as_ref(),
                });
            }
            let root_u = &hops.last().expect("non-root has a parent").1;
            keys.insert(v, extract(root_u, &self.key_set)?);
        }
        let material = KeyMaterial {
            k: 1,
            keys: vec![key],
            ..Default::default()
        };
        Ok(ProtocolReport::assemble(
            ModelTag::Model4,
            self.n,
            self.tree.root,
            material,
            keys,
            transcript,
            diags,
            Vec::new(),
            0,
        ))
    }
}

pub fn model4_run<R: Rng + ?Sized>(spec: &JointSourceSpec, sets: &IndexSetBundle, rng: &mut R) -> Result<ProtocolReport> {
    let plan = TreePlan::new(spec, sets)?;
    let block = sample_block(spec, plan.n, rng)?;
    plan.run_on(&block)
}
