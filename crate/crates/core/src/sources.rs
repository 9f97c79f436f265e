//! Memoryless joint sources over the terminals' bits and the eavesdropper's bit.
//!
//! A [`JointSourceSpec`] is the declarative form (loaded from JSON); a
//! [`JointPmf`] is the per-symbol table over the variables it defines.
//! Terminals are numbered from 1. In two-terminal models terminal 1 is
//! Alice's `X`, terminal 2 is Bob's `Y`.
//!
//! JSON examples, one per variant:
//!
//! ```json
//! {"kind":"dbms_chain","p_x":0.5,"p":0.11,"q":0.3,"z_present":true}
//! {"kind":"broadcast_star","p_x1":0.5,"crossovers":[0.05,0.2]}
//! {"kind":"markov_tree","m":3,"edges":[{"a":1,"b":2,"p":0.1},{"a":2,"b":3,"p":0.2}]}
//! {"kind":"generic_table","terminals":2,"z_present":false,"pmf":[0.45,0.05,0.05,0.45]}
//! ```
//!
//! Generic tables index tuples by bit position: bit `i-1` is terminal `i`,
//! bit `m` is Eve's bit when present.

use std::collections::VecDeque;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::polar_core::{BitBlock, Bits};
use crate::sc_codec::SymbolModel;

const PMF_TOL: f64 = 1e-9;
const MAX_TABLE_VARS: usize = 16;
const MAX_GENERIC_BITS: usize = 8;

/// One tree edge with its BSC crossover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JointSourceSpec {
    /// `X ~ B(p_x)`, `Y = X ⊕ B(p)`, `Z = Y ⊕ B(q)`.
    DbmsChain {
        p_x: f64,
        p: f64,
        q: f64,
        z_present: bool,
    },
    /// `X_1 ~ B(p_x1)` and `X_i = X_1 ⊕ B(p_{i-1})` for `i = 2..=m`.
    BroadcastStar { p_x1: f64, crossovers: Vec<f64> },
    /// Uniform marginals with pairwise BSC edges along a tree.
    MarkovTree { m: usize, edges: Vec<TreeEdge> },
    GenericTable {
        terminals: usize,
        z_present: bool,
        pmf: Vec<f64>,
    },
}

/// A random variable of the joint source.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    Terminal(usize),
    Eve,
    /// The quantization auxiliary `U` of the rate-limited models.
    Aux,
}

impl std::fmt::Display for Var {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Var::Terminal(i) => write!(f, "X{i}"),
            Var::Eve => write!(f, "Z"),
            Var::Aux => write!(f, "U"),
        }
    }
}

/// Test channel `p_{U|X}` from terminal 1 to the auxiliary `U`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestChannel {
    Identity,
    Bsc { beta: f64 },
    /// `p_u_given_x[x][u]`.
    Matrix { p_u_given_x: [[f64; 2]; 2] },
}

impl TestChannel {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        match self {
            TestChannel::Identity => [[1.0, 0.0], [0.0, 1.0]],
            TestChannel::Bsc { beta } => [[1.0 - beta, *beta], [*beta, 1.0 - beta]],
            TestChannel::Matrix { p_u_given_x } => *p_u_given_x,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for row in self.matrix() {
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) || (row[0] + row[1] - 1.0).abs() > PMF_TOL
            {
                return Err(invalid("test channel rows must be probability vectors"));
            }
        }
        Ok(())
    }
}

/// Per-symbol pmf over an ordered variable list; table index bit `k` is `vars[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    vars: Vec<Var>,
    table: Vec<f64>,
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || v.is_nan() {
        return Err(invalid(format!("{name} = {v} is not a probability")));
    }
    Ok(())
}

impl JointSourceSpec {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: JointSourceSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn terminals(&self) -> usize {
        match self {
            JointSourceSpec::DbmsChain { .. } => 2,
            JointSourceSpec::BroadcastStar { crossovers, .. } => crossovers.len() + 1,
            JointSourceSpec::MarkovTree { m, .. } => *m,
            JointSourceSpec::GenericTable { terminals, .. } => *terminals,
        }
    }

    pub fn has_eve(&self) -> bool {
        match self {
            JointSourceSpec::DbmsChain { z_present, .. } => *z_present,
            JointSourceSpec::GenericTable { z_present, .. } => *z_present,
            _ => false,
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut v: Vec<Var> = (1..=self.terminals()).map(Var::Terminal).collect();
        if self.has_eve() {
            v.push(Var::Eve);
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            JointSourceSpec::DbmsChain { p_x, p, q, .. } => {
                check_prob("p_x", *p_x)?;
                check_prob("p", *p)?;
                check_prob("q", *q)?;
            }
            JointSourceSpec::BroadcastStar { p_x1, crossovers } => {
                check_prob("p_x1", *p_x1)?;
                if crossovers.is_empty() {
                    return Err(invalid("broadcast star needs at least two terminals"));
                }
                for &c in crossovers {
                    check_prob("crossover", c)?;
                }
                if crossovers.len() + 1 > MAX_TABLE_VARS {
                    return Err(invalid("too many terminals for a pmf table"));
                }
            }
            JointSourceSpec::MarkovTree { m, edges } => {
                validate_tree(*m, edges)?;
            }
            JointSourceSpec::GenericTable {
                terminals,
                z_present,
                pmf,
            } => {
                let bits = terminals + usize::from(*z_present);
                if *terminals == 0 || bits > MAX_GENERIC_BITS {
                    return Err(invalid(format!(
                        "generic table supports 1..={MAX_GENERIC_BITS} bits per symbol"
                    )));
                }
                if pmf.len() != 1 << bits {
                    return Err(invalid(format!(
                        "generic table needs {} entries, got {}",
                        1 << bits,
                        pmf.len()
                    )));
                }
                if pmf.iter().any(|&v| v < 0.0 || v.is_nan()) {
                    return Err(invalid("generic table has negative entries"));
                }
                let s: f64 = pmf.iter().sum();
                if (s - 1.0).abs() > PMF_TOL {
                    return Err(invalid(format!("generic table sums to {s}")));
                }
            }
        }
        Ok(())
    }
}

fn validate_tree(m: usize, edges: &[TreeEdge]) -> Result<()> {
    if m < 2 || m > MAX_TABLE_VARS {
        return Err(invalid(format!("tree needs 2..={MAX_TABLE_VARS} vertices")));
    }
    if edges.len() != m - 1 {
        return Err(invalid(format!(
            "tree on {m} vertices needs {} edges, got {}",
            m - 1,
            edges.len()
        )));
    }
    for e in edges {
        check_prob("edge crossover", e.p)?;
        if e.a == 0 || e.b == 0 || e.a > m || e.b > m || e.a == e.b {
            return Err(invalid(format!("bad edge ({}, {})", e.a, e.b)));
        }
    }
    let adj = adjacency(m, edges);
    let mut seen = vec![false; m + 1];
    let mut queue = VecDeque::from([1usize]);
    seen[1] = true;
    while let Some(v) = queue.pop_front() {
        for &(w, _) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    if seen[1..].iter().any(|s| !s) {
        return Err(invalid("tree edges do not connect all vertices"));
    }
    Ok(())
}

/// Adjacency lists indexed by vertex (index 0 unused): `(neighbor, crossover)`.
pub fn adjacency(m: usize, edges: &[TreeEdge]) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); m + 1];
    for e in edges {
        adj[e.a].push((e.b, e.p));
        adj[e.b].push((e.a, e.p));
    }
    for a in adj.iter_mut() {
        a.sort_by_key(|&(w, _)| w);
    }
    adj
}

/// The per-symbol pmf table over `spec.vars()`.
pub fn joint_pmf(spec: &JointSourceSpec) -> Result<JointPmf> {
    spec.validate()?;
    let vars = spec.vars();
    let size = 1usize << vars.len();
    let bit = |t: usize, k: usize| (t >> k) & 1;
    let bern = |p: f64, b: usize| if b == 1 { p } else { 1.0 - p };
    let flip = |p: f64, a: usize, b: usize| if a == b { 1.0 - p } else { p };
    let table: Vec<f64> = match spec {
        JointSourceSpec::DbmsChain {
            p_x, p, q, z_present, ..
        } => (0..size)
            .map(|t| {
                let (x, y) = (bit(t, 0), bit(t, 1));
                let mut w = bern(*p_x, x) * flip(*p, x, y);
                if *z_present {
                    w *= flip(*q, y, bit(t, 2));
                }
                w
            })
            .collect(),
        JointSourceSpec::BroadcastStar { p_x1, crossovers } => (0..size)
            .map(|t| {
                let x1 = bit(t, 0);
                crossovers
                    .iter()
                    .enumerate()
                    .fold(bern(*p_x1, x1), |w, (k, &c)| w * flip(c, x1, bit(t, k + 1)))
            })
            .collect(),
        JointSourceSpec::MarkovTree { edges, .. } => (0..size)
            .map(|t| {
                edges
                    .iter()
                    .fold(0.5, |w, e| w * flip(e.p, bit(t, e.a - 1), bit(t, e.b - 1)))
            })
            .collect(),
        JointSourceSpec::GenericTable { pmf, .. } => pmf.clone(),
    };
    Ok(JointPmf { vars, table })
}

impl JointPmf {
    pub fn new(vars: Vec<Var>, table: Vec<f64>) -> Result<Self> {
        if table.len() != 1 << vars.len() {
            return Err(invalid("pmf table size does not match variable count"));
        }
        Ok(JointPmf { vars, table })
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn position(&self, v: Var) -> Result<usize> {
        self.vars
            .iter()
            .position(|&w| w == v)
            .ok_or_else(|| invalid(format!("variable {v} not in source")))
    }

    /// Probability of a full tuple given as one bit per variable.
    pub fn prob(&self, tuple: usize) -> f64 {
        self.table[tuple]
    }

    /// Pmf over `vars` (in that order).
    pub fn marginal(&self, vars: &[Var]) -> Result<JointPmf> {
        let pos: Vec<usize> = vars.iter().map(|&v| self.position(v)).collect::<Result<_>>()?;
        let mut table = vec![0.0; 1 << vars.len()];
        for (t, &w) in self.table.iter().enumerate() {
            table[project(t, &pos)] += w;
        }
        Ok(JointPmf {
            vars: vars.to_vec(),
            table,
        })
    }

    /// Appends `U` drawn through `channel` from terminal 1.
    pub fn with_auxiliary(&self, channel: &TestChannel) -> Result<JointPmf> {
        channel.validate()?;
        let x = self.position(Var::Terminal(1))?;
        let m = channel.matrix();
        let k = self.vars.len();
        let mut table = vec![0.0; self.table.len() * 2];
        for (t, &w) in self.table.iter().enumerate() {
            let xb = (t >> x) & 1;
            table[t] += w * m[xb][0];
            table[t | (1 << k)] += w * m[xb][1];
        }
        let mut vars = self.vars.clone();
        vars.push(Var::Aux);
        Ok(JointPmf { vars, table })
    }

    /// The per-symbol model `p(target, side)` used by the polar routines.
    pub fn pair_model(&self, target: Var, side: &[Var]) -> Result<SymbolModel> {
        if side.len() > 4 {
            return Err(invalid("side information is limited to 4 bits per symbol"));
        }
        let tpos = self.position(target)?;
        let pos: Vec<usize> = side.iter().map(|&v| self.position(v)).collect::<Result<_>>()?;
        let mut probs = vec![[0.0; 2]; 1 << side.len()];
        for (t, &w) in self.table.iter().enumerate() {
            probs[project(t, &pos)][(t >> tpos) & 1] += w;
        }
        SymbolModel::new(probs)
    }

    pub fn entropy(&self, vars: &[Var]) -> Result<f64> {
        Ok(crate::metrics::entropy_of(self.marginal(vars)?.table.iter().copied()))
    }

    /// `H(a | b)` in bits.
    pub fn conditional_entropy(&self, a: &[Var], b: &[Var]) -> Result<f64> {
        let mut ab = a.to_vec();
        ab.extend_from_slice(b);
        Ok(self.entropy(&ab)? - self.entropy(b)?)
    }

    /// `I(a; b)` in bits.
    pub fn mutual_information(&self, a: &[Var], b: &[Var]) -> Result<f64> {
        let mut ab = a.to_vec();
        ab.extend_from_slice(b);
        let joint = self.marginal(&ab)?;
        let pa = self.marginal(a)?;
        let pb = self.marginal(b)?;
        let na = a.len();
        let mask = (1usize << na) - 1;
        Ok(joint
            .table
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(t, &w)| w * (w / (pa.table[t & mask] * pb.table[t >> na])).log2())
            .sum::<f64>()
            .max(0.0))
    }
}

/// Gathers the bits of `t` at positions `pos` into a compact index.
pub(crate) fn project(t: usize, pos: &[usize]) -> usize {
    pos.iter()
        .enumerate()
        .fold(0, |acc, (k, &p)| acc | (((t >> p) & 1) << k))
}

/// One i.i.d. realization of `N` symbols, one block per variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBlock {
    pub vars: Vec<Var>,
    pub blocks: Vec<BitBlock>,
}

impl SampleBlock {
    pub fn n(&self) -> usize {
        self.blocks[0].n()
    }

    pub fn get(&self, v: Var) -> Option<&BitBlock> {
        self.vars.iter().position(|&w| w == v).map(|k| &self.blocks[k])
    }

    pub fn terminal(&self, i: usize) -> &BitBlock {
        self.get(Var::Terminal(i))
            .unwrap_or_else(|| panic!("sample has no terminal {i}"))
    }

    pub fn eve(&self) -> Option<&BitBlock> {
        self.get(Var::Eve)
    }

    /// The per-coordinate tuple index over `vars` (same bit layout as [`JointPmf`]).
    pub fn symbol(&self, pos: usize) -> usize {
        self.blocks
            .iter()
            .enumerate()
            .fold(0, |acc, (k, b)| acc | ((b.bit(pos) as usize) << k))
    }

    pub fn from_symbols(vars: Vec<Var>, symbols: &[usize]) -> Result<Self> {
        let n = symbols.len();
        let blocks = (0..vars.len())
            .map(|k| {
                let mut b = Bits::zeros(n);
                for (i, &s) in symbols.iter().enumerate() {
                    b.set(i, (s >> k) & 1 == 1);
                }
                BitBlock::new(b)
            })
            .collect::<Result<_>>()?;
        Ok(SampleBlock { vars, blocks })
    }
}

/// Inverse-CDF sampler over a pmf table.
#[derive(Clone, Debug)]
pub struct TupleSampler {
    cdf: Vec<f64>,
}

impl TupleSampler {
    pub fn new(table: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = table
            .iter()
            .map(|&w| {
                acc += w;
                acc
            })
            .collect();
        TupleSampler { cdf }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().unwrap_or(&1.0);
        let u: f64 = rng.gen::<f64>() * total;
        let k = self.cdf.partition_point(|&c| c <= u);
        // Never land on a zero-mass tuple at the top end.
        let mut k = k.min(self.cdf.len() - 1);
        while k > 0 && self.cdf[k] == self.cdf[k - 1] {
            k -= 1;
        }
        k
    }
}

/// `N` i.i.d. symbols from the spec, sampled by inverse CDF over the tuple table.
pub fn sample_block<R: Rng + ?Sized>(spec: &JointSourceSpec, n: usize, rng: &mut R) -> Result<SampleBlock> {
    if !n.is_power_of_two() {
        return Err(invalid(format!("N = {n} is not a power of two")));
    }
    let pmf = joint_pmf(spec)?;
    Ok(sample_from_pmf(&pmf, n, rng))
}

pub fn sample_from_pmf<R: Rng + ?Sized>(pmf: &JointPmf, n: usize, rng: &mut R) -> SampleBlock {
    let sampler = TupleSampler::new(&pmf.table);
    let symbols: Vec<usize> = (0..n).map(|_| sampler.draw(rng)).collect();
    SampleBlock::from_symbols(pmf.vars.clone(), &symbols).expect("power-of-two block")
}

/// Markov-tree sampling by walking edges outward from vertex 1.
pub fn sample_tree_generative<R: Rng + ?Sized>(
    m: usize,
    edges: &[TreeEdge],
    n: usize,
    rng: &mut R,
) -> Result<SampleBlock> {
    validate_tree(m, edges)?;
    let adj = adjacency(m, edges);
    let mut symbols = vec![0usize; n];
    for s in symbols.iter_mut() {
        let mut val = vec![None; m + 1];
        val[1] = Some(rng.gen_bool(0.5));
        let mut queue = VecDeque::from([1usize]);
        while let Some(v) = queue.pop_front() {
            for &(w, p) in &adj[v] {
                if val[w].is_none() {
                    val[w] = Some(val[v].unwrap() ^ rng.gen_bool(p));
                    queue.push_back(w);
                }
            }
        }
        *s = (1..=m).fold(0, |acc, v| acc | ((val[v].unwrap() as usize) << (v - 1)));
    }
    SampleBlock::from_symbols((1..=m).map(Var::Terminal).collect(), &symbols)
}

/// A Markov tree rooted at one vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct RootedTree {
    pub m: usize,
    pub root: usize,
    /// `parent[v]`, `None` for the root (index 0 unused).
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<usize>,
    /// Children sorted by index.
    pub children: Vec<Vec<usize>>,
    crossover: Vec<Vec<f64>>,
}

impl RootedTree {
    pub fn new(m: usize, edges: &[TreeEdge], root: usize) -> Result<Self> {
        validate_tree(m, edges)?;
        if root == 0 || root > m {
            return Err(invalid(format!("root {root} outside 1..={m}")));
        }
        let adj = adjacency(m, edges);
        let mut crossover = vec![vec![f64::NAN; m + 1]; m + 1];
        for e in edges {
            crossover[e.a][e.b] = e.p;
            crossover[e.b][e.a] = e.p;
        }
        let mut parent = vec![None; m + 1];
        let mut depth = vec![0; m + 1];
        let mut children = vec![Vec::new(); m + 1];
        let mut seen = vec![false; m + 1];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    depth[w] = depth[v] + 1;
                    children[v].push(w);
                    queue.push_back(w);
                }
            }
        }
        Ok(RootedTree {
            m,
            root,
            parent,
            depth,
            children,
            crossover,
        })
    }

    pub fn crossover(&self, a: usize, b: usize) -> f64 {
        self.crossover[a][b]
    }

    pub fn max_depth(&self) -> usize {
        (1..=self.m).map(|v| self.depth[v]).max().unwrap_or(0)
    }

    /// Vertices at distance `d` from the root, in index order.
    pub fn at_depth(&self, d: usize) -> Vec<usize> {
        (1..=self.m).filter(|&v| self.depth[v] == d).collect()
    }

    /// The child with the largest crossover (lowest index on ties).
    pub fn j_star(&self, j: usize) -> Option<usize> {
        self.children[j].iter().copied().fold(None, |best, c| match best {
            Some(b) if self.crossover(j, b) >= self.crossover(j, c) => Some(b),
            _ => Some(c),
        })
    }

    /// `v, parent(v), …, root`.
    pub fn path_to_root(&self, v: usize) -> Vec<usize> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegradeFlags {
    pub markov_chain_xyz: bool,
}

/// Whether `X1 → X2 → Z` holds, i.e. `p(x,y,z) p(y) = p(x,y) p(y,z)` within 1e-9.
pub fn degrade_check(spec: &JointSourceSpec) -> Result<DegradeFlags> {
    if !spec.has_eve() {
        return Ok(DegradeFlags {
            markov_chain_xyz: true,
        });
    }
    let pmf = joint_pmf(spec)?;
    let (x, y, z) = (Var::Terminal(1), Var::Terminal(2), Var::Eve);
    let xyz = pmf.marginal(&[x, y, z])?;
    let xy = pmf.marginal(&[x, y])?;
    let yz = pmf.marginal(&[y, z])?;
    let py = pmf.marginal(&[y])?;
    let ok = (0..8usize).all(|t| {
        let (xb, yb, zb) = (t & 1, (t >> 1) & 1, (t >> 2) & 1);
        let lhs = xyz.table[t] * py.table[yb];
        let rhs = xy.table[xb | (yb << 1)] * yz.table[yb | (zb << 1)];
        (lhs - rhs).abs() <= PMF_TOL
    });
    Ok(DegradeFlags {
        markov_chain_xyz: ok,
    })
}
