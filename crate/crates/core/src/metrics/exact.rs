//! Exact joint distributions of protocol outputs by full enumeration.
//!
//! Every enumerator sweeps all source realizations of the variables the
//! encoder sees, every value of the pre-shared secrets and, for quantized
//! models, every quantizer output weighted by its exact probability. The
//! encoders are the protocol plans' own block functions.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::info::{JointTable, SecrecyMethod, SecrecyReport};
use crate::error::{invalid, Error, Result};
use crate::polar_core::{extract, polar_transform, BitBlock, Bits};
use crate::polarization::{IndexSetBundle, ModelTag};
use crate::protocols::{Model1Plan, QuantizedPlan, StarPlan, TreePlan, TriPlan};
use crate::sc_codec::{sc_decode, side_symbols, FrozenMap};
use crate::sources::{joint_pmf, JointPmf, JointSourceSpec, SampleBlock, TestChannel, Var};

/// Enumerations above `2^PROTOCOL_BUDGET_LOG2` leaves are refused.
pub const PROTOCOL_BUDGET_LOG2: u32 = 26;
const CHUNKS: usize = 64;

/// An exact joint pmf over named protocol quantities.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    pub table: JointTable,
    pub log2_leaves: f64,
    /// Declared bit width of each component.
    pub widths: BTreeMap<String, usize>,
}

impl ExactDistribution {
    pub fn mi(&self, a: &[&str], b: &[&str]) -> f64 {
        self.table.by_name_mi(a, b)
    }

    pub fn entropy(&self, a: &[&str]) -> f64 {
        self.table.by_name_entropy(a)
    }

    pub fn width(&self, names: &[&str]) -> usize {
        names.iter().map(|n| self.widths.get(*n).copied().unwrap_or(0)).sum()
    }

    /// Leakage `I(key; view)` and uniformity `|key| − H(key)`.
    pub fn secrecy(&self, key: &[&str], view: &[&str]) -> SecrecyReport {
        let key_bits = self.width(key);
        SecrecyReport {
            leakage_bits: if view.is_empty() { 0.0 } else { self.mi(key, view) },
            uniformity_bits: key_bits as f64 - self.entropy(key),
            key_bits,
            method: SecrecyMethod::Exact,
            size: self.table.support(),
            bias_bound: None,
        }
    }
}

fn check_budget(log2_leaves: f64) -> Result<()> {
    if log2_leaves > PROTOCOL_BUDGET_LOG2 as f64 + 1e-9 {
        return Err(Error::Budget {
            needed_log2: log2_leaves,
            budget_log2: PROTOCOL_BUDGET_LOG2,
        });
    }
    Ok(())
}

fn key_of(b: &Bits) -> Result<u64> {
    if b.len() > 64 {
        return Err(invalid(format!("a {}-bit component does not fit an outcome key", b.len())));
    }
    Ok(b.to_u64())
}

/// Every block realization of `vars` with positive probability.
pub fn block_realizations(pmf: &JointPmf, vars: &[Var], n: usize) -> Result<Vec<(SampleBlock, f64)>> {
    let m = pmf.marginal(vars)?;
    check_budget((n * vars.len()) as f64)?;
    let mut seqs: Vec<(Vec<usize>, f64)> = vec![(Vec::with_capacity(n), 1.0)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(seqs.len() << vars.len());
        for (s, w) in &seqs {
            for (t, &p) in m.table().iter().enumerate() {
                if p > 0.0 {
                    let mut s2 = s.clone();
                    s2.push(t);
                    next.push((s2, w * p));
                }
            }
        }
        seqs = next;
    }
    seqs.into_iter()
        .map(|(s, w)| SampleBlock::from_symbols(vars.to_vec(), &s).map(|b| (b, w)))
        .collect()
}

/// Sums `visit` over all `(secret, cell_1, …, cell_k)` tuples; the secret is
/// uniform over `2^secret_bits` values. Chunks run in parallel and are
/// merged in index order.
fn enumerate<C, F>(names: &[&str], secret_bits: usize, cells: &[(C, f64)], k: usize, visit: F) -> Result<JointTable>
where
    C: Sync,
    F: Fn(u64, &[&C]) -> Result<Vec<u64>> + Sync,
{
    let n_secret = 1u64 << secret_bits;
    let ws = 1.0 / n_secret as f64;
    let outer = n_secret as usize * cells.len();
    let chunk = outer.div_ceil(CHUNKS).max(1);
    let parts: Vec<Result<JointTable>> = (0..outer.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut t = JointTable::new(names);
            let mut idx = vec![0usize; k];
            for o in c * chunk..((c + 1) * chunk).min(outer) {
                let s = (o / cells.len()) as u64;
                idx[0] = o % cells.len();
                idx[1..].iter_mut().for_each(|i| *i = 0);
                loop {
                    let picked: Vec<&C> = idx.iter().map(|&i| &cells[i].0).collect();
                    let w: f64 = idx.iter().map(|&i| cells[i].1).product::<f64>() * ws;
                    if w > 0.0 {
                        t.add(&visit(s, &picked)?, w);
                    }
                    let mut p = k;
                    loop {
                        p -= 1;
                        if p == 0 {
                            break;
                        }
                        idx[p] += 1;
                        if idx[p] < cells.len() {
                            break;
                        }
                        idx[p] = 0;
                    }
                    if p == 0 {
                        break;
                    }
                }
            }
            Ok(t)
        })
        .collect();
    let mut out = JointTable::new(names);
    for p in parts {
        out.merge(p?);
    }
    Ok(out)
}

fn leaves_log2(secret_bits: usize, cells: usize, k: usize) -> f64 {
    secret_bits as f64 + k as f64 * (cells.max(1) as f64).log2()
}

/// Upper bound before enumerating: every block of `cell_bits` bits reachable.
fn worst_leaves_log2(secret_bits: usize, cell_bits: usize, k: usize) -> f64 {
    secret_bits as f64 + (k * cell_bits) as f64
}

fn cat(parts: &[Bits]) -> Bits {
    Bits::concat(&parts.iter().collect::<Vec<_>>())
}

fn widths(list: &[(&str, usize)]) -> BTreeMap<String, usize> {
    list.iter().map(|(n, w)| (n.to_string(), *w)).collect()
}

struct Model1Leaf {
    key: Vec<Bits>,
    kt: Vec<Bits>,
    m: Vec<Bits>,
    z: Vec<Bits>,
}

fn model1_leaf(plan: &Model1Plan, s0: Bits, blocks: &[&SampleBlock]) -> Result<Model1Leaf> {
    let mut seed = s0;
    let mut out = Model1Leaf { key: Vec::new(), kt: Vec::new(), m: Vec::new(), z: Vec::new() };
    for b in blocks {
        let al = plan.alice_block(b.terminal(1), &seed)?;
        out.m.push(cat(&[al.f, al.f_pad]));
        out.key.push(al.key);
        out.kt.push(al.seed_next.clone());
        out.z.push(b.eve().map(|e| e.bits().clone()).unwrap_or_else(|| Bits::zeros(0)));
        seed = al.seed_next;
    }
    Ok(out)
}

fn model1_cells(spec: &JointSourceSpec, plan: &Model1Plan, k: usize) -> Result<(Vec<(SampleBlock, f64)>, f64)> {
    let mut vars = vec![Var::Terminal(1)];
    if spec.has_eve() {
        vars.push(Var::Eve);
    }
    check_budget(worst_leaves_log2(plan.seed_len(), plan.n * vars.len(), k))?;
    let cells = block_realizations(&joint_pmf(spec)?, &vars, plan.n)?;
    let log2_leaves = leaves_log2(plan.seed_len(), cells.len(), k);
    check_budget(log2_leaves)?;
    Ok((cells, log2_leaves))
}

/// Model 1 over `k` blocks: components `K`, `Kt` (all next-block seeds),
/// `M` (transcript), `Z`, `S0` (initial seed).
pub fn exact_model1(spec: &JointSourceSpec, sets: &IndexSetBundle, k: usize) -> Result<ExactDistribution> {
    let plan = Model1Plan::new(spec, sets)?;
    let (cells, log2_leaves) = model1_cells(spec, &plan, k)?;
    let table = enumerate(&["K", "Kt", "M", "Z", "S0"], plan.seed_len(), &cells, k, |s, blocks| {
        let l = model1_leaf(&plan, Bits::from_u64(s, plan.seed_len()), blocks)?;
        Ok(vec![key_of(&cat(&l.key))?, key_of(&cat(&l.kt))?, key_of(&cat(&l.m))?, key_of(&cat(&l.z))?, s])
    })?;
    let t = |l: usize| l * k;
    let z_bits = if spec.has_eve() { t(plan.n) } else { 0 };
    Ok(ExactDistribution {
        table,
        log2_leaves,
        widths: widths(&[
            ("K", t(plan.key_set.len())),
            ("Kt", t(plan.a.len())),
            ("M", t(plan.h.len())),
            ("Z", z_bits),
            ("S0", plan.seed_len()),
        ]),
    })
}

/// Model 1 with per-block components `K{i}`, `Kt{i}`, `M{i}`, `Z{i}` for
/// `i = 1..=k`, `k ≤ 2`.
pub fn exact_model1_per_block(spec: &JointSourceSpec, sets: &IndexSetBundle, k: usize) -> Result<ExactDistribution> {
    if !(1..=2).contains(&k) {
        return Err(invalid("per-block model-1 enumeration supports k = 1 or 2"));
    }
    let plan = Model1Plan::new(spec, sets)?;
    let (cells, log2_leaves) = model1_cells(spec, &plan, k)?;
    let names: Vec<String> = (1..=k)
        .flat_map(|i| ["K", "Kt", "M", "Z"].map(|c| format!("{c}{i}")))
        .collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let table = enumerate(&refs, plan.seed_len(), &cells, k, |s, blocks| {
        let l = model1_leaf(&plan, Bits::from_u64(s, plan.seed_len()), blocks)?;
        let mut out = Vec::with_capacity(4 * k);
        for i in 0..k {
            for b in [&l.key[i], &l.kt[i], &l.m[i], &l.z[i]] {
                out.push(key_of(b)?);
            }
        }
        Ok(out)
    })?;
    let z_bits = if spec.has_eve() { plan.n } else { 0 };
    let mut w = BTreeMap::new();
    for i in 1..=k {
        w.insert(format!("K{i}"), plan.key_set.len());
        w.insert(format!("Kt{i}"), plan.a.len());
        w.insert(format!("M{i}"), plan.h.len());
        w.insert(format!("Z{i}"), z_bits);
    }
    Ok(ExactDistribution { table, log2_leaves, widths: w })
}

/// Broadcast model: components `K`, `M`, `S0`.
pub fn exact_model3_star(spec: &JointSourceSpec, sets: &IndexSetBundle) -> Result<ExactDistribution> {
    let plan = StarPlan::new(spec, sets)?;
    let pmf = joint_pmf(spec)?;
    check_budget(worst_leaves_log2(plan.seed_len(), plan.n, 1))?;
    let cells = block_realizations(&pmf, &[Var::Terminal(1)], plan.n)?;
    let log2_leaves = leaves_log2(plan.seed_len(), cells.len(), 1);
    let table = enumerate(&["K", "M", "S0"], plan.seed_len(), &cells, 1, |s, b| {
        let (_, key, f, fp) = plan.encode(b[0].terminal(1), &Bits::from_u64(s, plan.seed_len()))?;
        Ok(vec![key_of(&key)?, key_of(&cat(&[f, fp]))?, s])
    })?;
    Ok(ExactDistribution {
        table,
        log2_leaves,
        widths: widths(&[("K", plan.key_set.len()), ("M", plan.h.len()), ("S0", plan.seed_len())]),
    })
}

/// Markov-tree model: components `K`, `M`.
pub fn exact_model4(spec: &JointSourceSpec, sets: &IndexSetBundle) -> Result<ExactDistribution> {
    let plan = TreePlan::new(spec, sets)?;
    let pmf = joint_pmf(spec)?;
    let mut involved = plan.involved();
    if !involved.contains(&plan.tree.root) {
        involved.push(plan.tree.root);
        involved.sort();
    }
    let vars: Vec<Var> = involved.iter().map(|&j| Var::Terminal(j)).collect();
    check_budget((plan.n * vars.len()) as f64)?;
    let cells = block_realizations(&pmf, &vars, plan.n)?;
    let log2_leaves = leaves_log2(0, cells.len(), 1);
    let table = enumerate(&["K", "M"], 0, &cells, 1, |_, b| {
        let (key, t) = plan.encode(|j| b[0].terminal(j).clone())?;
        Ok(vec![key_of(&key)?, key_of(&t.concat())?])
    })?;
    let m_bits = plan.publishers.iter().map(|p| p.1.len()).sum();
    Ok(ExactDistribution {
        table,
        log2_leaves,
        widths: widths(&[("K", plan.key_set.len()), ("M", m_bits)]),
    })
}

/// Three-terminal chain over `k` blocks: components `K`, `Kb` (carried
/// `K̄`), `M`, `Z`, `S` (all seeds).
pub fn exact_model3_tri(spec: &JointSourceSpec, sets: &IndexSetBundle, k: usize) -> Result<ExactDistribution> {
    let plan = TriPlan::new(spec, sets)?;
    let pmf = joint_pmf(spec)?;
    let mut vars = vec![Var::Terminal(2)];
    if spec.has_eve() {
        vars.push(Var::Eve);
    }
    let sl = plan.seed_len();
    check_budget(worst_leaves_log2(sl * k, plan.n * vars.len(), k))?;
    let cells = block_realizations(&pmf, &vars, plan.n)?;
    let log2_leaves = leaves_log2(sl * k, cells.len(), k);
    check_budget(log2_leaves)?;
    let table = enumerate(&["K", "Kb", "M", "Z", "S"], sl * k, &cells, k, |s, blocks| {
        let all = Bits::from_u64(s, sl * k);
        let seeds: Vec<Bits> = (0..k).map(|i| all.slice(i * sl, sl)).collect();
        let x2: Vec<&BitBlock> = blocks.iter().map(|b| b.terminal(2)).collect();
        let (enc, t) = plan.encode_chain(&x2, &seeds)?;
        let key = cat(&enc.iter().map(|e| e.key.clone()).collect::<Vec<_>>());
        let kb = cat(&enc.iter().map(|e| e.kbar.clone()).collect::<Vec<_>>());
        let z = cat(&blocks.iter().filter_map(|b| b.eve().map(|e| e.bits().clone())).collect::<Vec<_>>());
        Ok(vec![key_of(&key)?, key_of(&kb)?, key_of(&t.concat())?, key_of(&z)?, s])
    })?;
    let key_bits = (1..=k).map(|b| plan.key_positions(b).len()).sum();
    Ok(ExactDistribution {
        table,
        log2_leaves,
        widths: widths(&[
            ("K", key_bits),
            ("Kb", plan.kbar.len() * (k - 1)),
            ("Z", if spec.has_eve() { plan.n * k } else { 0 }),
            ("S", sl * k),
        ]),
    })
}

/// Dense per-block tables of the stochastic encoder and the ideal law.
#[derive(Clone, Debug)]
pub struct QuantizerTables {
    pub n: usize,
    pub r_len: usize,
    /// `p(x^{1:N})`.
    pub px: Vec<f64>,
    /// `w[x][v] = p̃(v | x, R = v[V_U|X])`.
    w: Vec<Vec<f64>>,
    /// `p(v | x)` for `v = u·G_N`, `u` drawn through the test channel.
    ideal: Vec<Vec<f64>>,
}

impl QuantizerTables {
    pub fn new(spec: &JointSourceSpec, channel: &TestChannel, plan: &QuantizedPlan) -> Result<Self> {
        let n = plan.n;
        check_budget((2 * n) as f64)?;
        let pmf = joint_pmf(spec)?.with_auxiliary(channel)?;
        let xu = pmf.marginal(&[Var::Terminal(1), Var::Aux])?;
        let px1 = [xu.prob(0) + xu.prob(2), xu.prob(1) + xu.prob(3)];
        let size = 1usize << n;
        let blocks: Vec<BitBlock> = (0..size)
            .map(|v| BitBlock::new(Bits::from_u64(v as u64, n)))
            .collect::<Result<_>>()?;
        let px: Vec<f64> = (0..size)
            .map(|x| (0..n).map(|t| px1[(x >> t) & 1]).product())
            .collect();
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..size)
            .into_par_iter()
            .map(|x| {
                let xb = &blocks[x];
                let mut w = vec![0.0; size];
                let mut ideal = vec![0.0; size];
                for v in 0..size {
                    let vb = &blocks[v];
                    let r = extract(vb, &plan.encoder.v_ux).expect("same block length");
                    w[v] = plan.encoder.prob(xb, vb, Some(&r));
                    let u = polar_transform(vb).to_u64() as usize;
                    if px[x] > 0.0 {
                        ideal[v] = (0..n)
                            .map(|t| xu.prob(((x >> t) & 1) | (((u >> t) & 1) << 1)) / px1[(x >> t) & 1])
                            .product();
                    }
                }
                (w, ideal)
            })
            .collect();
        let (w, ideal) = rows.into_iter().unzip();
        Ok(QuantizerTables {
            n,
            r_len: plan.r1_len(),
            px,
            w,
            ideal,
        })
    }

    /// `p̃(v | x)` with `R` uniform.
    pub fn encoder_prob(&self, x: usize, v: usize) -> f64 {
        self.w[x][v] / (1u64 << self.r_len) as f64
    }

    /// `p̃(v | x, R = r)`; zero unless `v` carries `r`.
    pub fn encoder_prob_given_r(&self, x: usize, v: usize) -> f64 {
        self.w[x][v]
    }

    pub fn ideal_prob(&self, x: usize, v: usize) -> f64 {
        self.ideal[x][v]
    }

    /// `(p_XV, p̃_XV)` flattened as `x · 2^N + v`.
    pub fn joint_pair(&self) -> (Vec<f64>, Vec<f64>) {
        let size = 1usize << self.n;
        let mut p = Vec::with_capacity(size * size);
        let mut q = Vec::with_capacity(size * size);
        for x in 0..size {
            for v in 0..size {
                p.push(self.px[x] * self.ideal[x][v]);
                q.push(self.px[x] * self.encoder_prob(x, v));
            }
        }
        (p, q)
    }
}

/// Exact per-block pmf `p(a^{1:N}, b^{1:N})` flattened as `a · 2^N + b`.
fn pair_block_pmf(pmf: &JointPmf, a: Var, b: Var, n: usize) -> Result<Vec<f64>> {
    let m = pmf.marginal(&[a, b])?;
    let size = 1usize << n;
    Ok((0..size * size)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i / size, i % size);
            (0..n).map(|t| m.prob(((x >> t) & 1) | (((y >> t) & 1) << 1))).product()
        })
        .collect())
}

/// `q(v, s) = Σ_x p(x, s) · law(x, v)`, flattened as `v · 2^N + s`.
fn push_through(pxs: &[f64], n: usize, law: impl Fn(usize, usize) -> f64 + Sync) -> Vec<f64> {
    let size = 1usize << n;
    (0..size * size)
        .into_par_iter()
        .map(|i| {
            let (v, s) = (i / size, i % size);
            (0..size).map(|x| pxs[x * size + s] * law(x, v)).sum()
        })
        .collect()
}

/// Exact Bob failure probabilities for one quantized block.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuantizerFailure {
    /// `P[V̂ ≠ Ṽ]` under the real encoder.
    pub p_fail_encoder: f64,
    /// `P[V̂ ≠ V]` if `V` followed the ideal law.
    pub p_fail_ideal: f64,
    /// `½ V(p_XV, p̃_XV)`.
    pub half_l1: f64,
}

impl QuantizerFailure {
    pub fn bound(&self) -> f64 {
        self.half_l1 + self.p_fail_ideal
    }
}

/// Sweeps every `(y, v)` pair: Bob decodes from `y` with `v`'s frozen bits.
pub fn quantizer_failure(
    spec: &JointSourceSpec,
    channel: &TestChannel,
    plan: &QuantizedPlan,
    tables: &QuantizerTables,
) -> Result<QuantizerFailure> {
    let n = plan.n;
    let size = 1usize << n;
    let pmf = joint_pmf(spec)?;
    let bob = pmf.with_auxiliary(channel)?.pair_model(Var::Aux, &[Var::Terminal(2)])?;
    let pxy = pair_block_pmf(&pmf, Var::Terminal(1), Var::Terminal(2), n)?;
    let q_enc = push_through(&pxy, n, |x, v| tables.encoder_prob(x, v));
    let q_ideal = push_through(&pxy, n, |x, v| tables.ideal_prob(x, v));
    let blocks: Vec<BitBlock> = (0..size)
        .map(|v| BitBlock::new(Bits::from_u64(v as u64, n)))
        .collect::<Result<_>>()?;
    let (fe, fi) = (0..size * size)
        .into_par_iter()
        .map(|i| {
            let (v, y) = (i / size, i % size);
            if q_enc[i] == 0.0 && q_ideal[i] == 0.0 {
                return Ok((0.0, 0.0));
            }
            let vb = &blocks[v];
            let vals = extract(vb, &plan.frozen_set)?;
            let frozen = FrozenMap::new(plan.frozen_set.clone(), vals)?;
            let v_hat = sc_decode(&side_symbols(&[&blocks[y]], n), &frozen, &bob)?;
            let bad = (v_hat != *vb) as u8 as f64;
            Ok((q_enc[i] * bad, q_ideal[i] * bad))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let (p, q) = tables.joint_pair();
    Ok(QuantizerFailure {
        p_fail_encoder: fe,
        p_fail_ideal: fi,
        half_l1: 0.5 * super::info::variational_distance(&p, &q)?,
    })
}

/// `I(Ṽ[set]; Z)` for one block with `R` uniform.
pub fn quantizer_secrecy(
    spec: &JointSourceSpec,
    plan: &QuantizedPlan,
    tables: &QuantizerTables,
    set: &crate::polar_core::IndexSet,
) -> Result<f64> {
    if !spec.has_eve() {
        return Err(invalid("source has no eavesdropper"));
    }
    let n = plan.n;
    let size = 1usize << n;
    let pxz = pair_block_pmf(&joint_pmf(spec)?, Var::Terminal(1), Var::Eve, n)?;
    let qvz = push_through(&pxz, n, |x, v| tables.encoder_prob(x, v));
    let mut t = JointTable::new(&["S", "Z"]);
    for v in 0..size {
        let s = extract(&Bits::from_u64(v as u64, n), set)?.to_u64();
        for z in 0..size {
            t.add(&[s, z as u64], qvz[v * size + z]);
        }
    }
    Ok(t.mutual_information(&[0], &[1]))
}

/// Quantized models over `k` blocks: components `K`, `Kt`, `M`, `R1`, `Z`,
/// `S0` (initial seed or all pads) and, with `keep_x`, `X`.
///
/// `R1` is shared by all blocks, so the per-block cells are built per value
/// of `R1` and the chain is enumerated conditionally on it.
pub fn exact_quantized(
    spec: &JointSourceSpec,
    channel: &TestChannel,
    sets: &IndexSetBundle,
    k: usize,
    keep_x: bool,
) -> Result<ExactDistribution> {
    let plan = QuantizedPlan::new(spec, channel, sets)?;
    let n = plan.n;
    let size = 1usize << n;
    let has_z = spec.has_eve();
    if keep_x && has_z {
        return Err(invalid("enumerating X together with Z is not supported"));
    }
    let secret_bits = if plan.zero_leakage() { plan.secret_len() * k } else { plan.secret_len() };
    let cell_log2 = (n * (1 + keep_x as usize + has_z as usize)) as f64;
    check_budget(plan.r1_len() as f64 + secret_bits as f64 + k as f64 * (cell_log2 - plan.r1_len() as f64))?;
    let tables = QuantizerTables::new(spec, channel, &plan)?;
    let pxz = if has_z {
        Some(pair_block_pmf(&joint_pmf(spec)?, Var::Terminal(1), Var::Eve, n)?)
    } else {
        None
    };
    // p(v, z | r) for every v carrying r (z = 0 when absent).
    let qvz = pxz.as_ref().map(|p| push_through(p, n, |x, v| tables.encoder_prob_given_r(x, v)));
    let vblocks: Vec<BitBlock> = (0..size)
        .map(|v| BitBlock::new(Bits::from_u64(v as u64, n)))
        .collect::<Result<_>>()?;
    let names = ["K", "Kt", "M", "R1", "Z", "S0", "X"];
    let mut table = JointTable::new(&names);
    let mut log2_leaves = f64::NEG_INFINITY;
    let nr = 1u64 << plan.r1_len();
    for r in 0..nr {
        let rb = Bits::from_u64(r, plan.r1_len());
        // (v, z, x, weight) cells with this r.
        let mut cells: Vec<((usize, usize, usize), f64)> = Vec::new();
        for v in 0..size {
            if extract(&vblocks[v], &plan.encoder.v_ux)? != rb {
                continue;
            }
            match (&qvz, keep_x) {
                (Some(q), _) => {
                    for z in 0..size {
                        cells.push(((v, z, 0), q[v * size + z]));
                    }
                }
                (None, true) => {
                    for x in 0..size {
                        cells.push(((v, 0, x), tables.px[x] * tables.encoder_prob_given_r(x, v)));
                    }
                }
                (None, false) => {
                    let w = (0..size).map(|x| tables.px[x] * tables.encoder_prob_given_r(x, v)).sum();
                    cells.push(((v, 0, 0), w));
                }
            }
        }
        cells.retain(|c| c.1 > 0.0);
        let leaves = plan.r1_len() as f64 + leaves_log2(secret_bits, cells.len(), k);
        log2_leaves = log2_leaves.max(leaves);
        check_budget(leaves)?;
        let part = enumerate(&names, secret_bits, &cells, k, |s, picked| {
            let secret = Bits::from_u64(s, secret_bits);
            let sl = plan.secret_len();
            let mut seed = secret.slice(0, sl);
            let (mut key, mut kt, mut m, mut z, mut x) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (i, &&(v, zz, xx)) in picked.iter().enumerate() {
                let blk = plan.split(vblocks[v].clone())?;
                let pad = if plan.zero_leakage() { secret.slice(i * sl, sl) } else { seed.clone() };
                for (_, payload) in plan.message(&blk, &pad)? {
                    m.push(payload);
                }
                key.push(blk.key);
                kt.push(blk.seed_next.clone());
                seed = blk.seed_next;
                if has_z {
                    z.push(Bits::from_u64(zz as u64, n));
                }
                if keep_x {
                    x.push(Bits::from_u64(xx as u64, n));
                }
            }
            Ok(vec![
                key_of(&cat(&key))?,
                key_of(&cat(&kt))?,
                key_of(&cat(&m))?,
                r,
                key_of(&cat(&z))?,
                s,
                key_of(&cat(&x))?,
            ])
        })?;
        let mut scaled = JointTable::new(&names);
        for (o, w) in part.iter() {
            scaled.add(o, w / nr as f64);
        }
        table.merge(scaled);
    }
    let key_bits = plan.split(vblocks[0].clone())?.key.len();
    Ok(ExactDistribution {
        table,
        log2_leaves,
        widths: widths(&[
            ("K", key_bits * k),
            ("Kt", plan.a_set.len() * k),
            ("R1", plan.r1_len()),
            ("Z", if has_z { n * k } else { 0 }),
            ("S0", secret_bits),
            ("X", if keep_x { n * k } else { 0 }),
        ]),
    })
}

/// The default exact distribution of a model and its key/view components.
pub fn exact_protocol_distribution(
    spec: &JointSourceSpec,
    channel: Option<&TestChannel>,
    sets: &IndexSetBundle,
    k: usize,
) -> Result<(ExactDistribution, Vec<&'static str>, Vec<&'static str>)> {
    let ch = || channel.ok_or_else(|| invalid(format!("{} needs a test channel", sets.model)));
    Ok(match sets.model {
        ModelTag::Model1 => (exact_model1(spec, sets, k)?, vec!["K"], vec!["M", "Z"]),
        ModelTag::Model2 => (exact_quantized(spec, ch()?, sets, k, false)?, vec!["K"], vec!["R1", "M", "Z"]),
        ModelTag::BioGen => (exact_quantized(spec, ch()?, sets, k, false)?, vec!["K"], vec!["R1", "M"]),
        ModelTag::BioZero => (exact_quantized(spec, ch()?, sets, k, true)?, vec!["K", "X"], vec!["M"]),
        ModelTag::Model3Star => (exact_model3_star(spec, sets)?, vec!["K"], vec!["M"]),
        ModelTag::Model3Tri => (exact_model3_tri(spec, sets, k)?, vec!["K"], vec!["M", "Z"]),
        ModelTag::Model4 => (exact_model4(spec, sets)?, vec!["K"], vec!["M"]),
    })
}

/// Exact leakage and uniformity of a model's key against Eve's full view.
pub fn exact_secrecy(
    spec: &JointSourceSpec,
    channel: Option<&TestChannel>,
    sets: &IndexSetBundle,
    k: usize,
) -> Result<SecrecyReport> {
    let (d, key, view) = exact_protocol_distribution(spec, channel, sets, k)?;
    let mut r = d.secrecy(&key[..1], &view);
    if sets.model == ModelTag::BioZero {
        r.leakage_bits = d.mi(&key, &view);
    }
    Ok(r)
}
