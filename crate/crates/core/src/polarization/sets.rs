use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stats::{exact_index_stats, mc_index_stats, ConditioningContext, Method, PolarIndexStats};
use super::{ModelTag, Thresholds};
use crate::capacity::min_mi_edge;
use crate::error::{invalid, structural, Error, Result};
use crate::polar_core::IndexSet;
use crate::sources::{joint_pmf, JointPmf, JointSourceSpec, RootedTree, TestChannel, Var};

/// Statistics keyed by [`ConditioningContext::name`].
pub type StatsBundle = BTreeMap<String, PolarIndexStats>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub thresholds: Thresholds,
    /// Overrides the Markov-tree root; must be an endpoint of a min-MI edge.
    pub model4_root: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Construction {
    Exact,
    MonteCarlo { samples: usize },
}

/// Index sets for one model at one block length, plus the statistics they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexSetBundle {
    pub model: ModelTag,
    pub n: usize,
    pub method: Method,
    pub samples: Option<usize>,
    pub beta: f64,
    pub delta_h: f64,
    pub delta_v: f64,
    /// Model parameters chosen during construction (`i_min`, `n0`, `n1`).
    pub params: BTreeMap<String, usize>,
    pub sets: BTreeMap<String, IndexSet>,
    pub stats: StatsBundle,
}

#[derive(Serialize, Deserialize)]
struct BundleRepr {
    model: ModelTag,
    n: usize,
    method: Method,
    samples: Option<usize>,
    beta: f64,
    delta_h: f64,
    delta_v: f64,
    params: BTreeMap<String, usize>,
    sets: BTreeMap<String, Vec<usize>>,
    stats: StatsBundle,
}

impl Serialize for IndexSetBundle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BundleRepr {
            model: self.model,
            n: self.n,
            method: self.method,
            samples: self.samples,
            beta: self.beta,
            delta_h: self.delta_h,
            delta_v: self.delta_v,
            params: self.params.clone(),
            sets: self
                .sets
                .iter()
                .map(|(k, v)| (k.clone(), v.indices().to_vec()))
                .collect(),
            stats: self.stats.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for IndexSetBundle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = BundleRepr::deserialize(d)?;
        let sets = r
            .sets
            .into_iter()
            .map(|(k, v)| IndexSet::new(r.n, v).map(|s| (k, s)))
            .collect::<Result<_>>()
            .map_err(serde::de::Error::custom)?;
        Ok(IndexSetBundle {
            model: r.model,
            n: r.n,
            method: r.method,
            samples: r.samples,
            beta: r.beta,
            delta_h: r.delta_h,
            delta_v: r.delta_v,
            params: r.params,
            sets,
            stats: r.stats,
        })
    }
}

/// One verified invariant with its outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl InvariantCheck {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        InvariantCheck {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    fn subset(name: &str, a: &IndexSet, b: &IndexSet) -> Self {
        let extra = a.difference(b);
        InvariantCheck::new(
            name,
            extra.is_empty(),
            if extra.is_empty() {
                format!("{} ⊆ {} members", a.len(), b.len())
            } else {
                format!("indices {:?} escape", extra.indices())
            },
        )
    }

    fn eq(name: &str, a: &IndexSet, b: &IndexSet) -> Self {
        InvariantCheck::new(name, a == b, format!("{:?} vs {:?}", a.indices(), b.indices()))
    }

    fn size(name: &str, a: usize, b: usize) -> Self {
        InvariantCheck::new(name, a == b, format!("{a} vs {b}"))
    }
}

impl IndexSetBundle {
    pub fn set(&self, name: &str) -> Result<&IndexSet> {
        self.sets
            .get(name)
            .ok_or_else(|| structural(format!("bundle for {} has no set '{name}'", self.model)))
    }

    pub fn param(&self, name: &str) -> Result<usize> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| structural(format!("bundle for {} has no parameter '{name}'", self.model)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Structural and inclusion checks on the stored sets.
    pub fn check_invariants(&self, spec: &JointSourceSpec) -> Result<Vec<InvariantCheck>> {
        let mut out = Vec::new();
        match self.model {
            ModelTag::Model1 => {
                let (v, h, a) = (self.set("V_X|Z")?, self.set("H_X|Y")?, self.set("A_XYZ")?);
                seed_split_checks(&mut out, v, h, a, self)?;
            }
            ModelTag::Model2 | ModelTag::BioGen => {
                let (vsec, aname) = if self.model == ModelTag::Model2 {
                    ("V_U|Z", "A_UYZ")
                } else {
                    ("V_U", "A_UXY")
                };
                let (v, h, vx, a) = (
                    self.set(vsec)?,
                    self.set("H_U|Y")?,
                    self.set("V_U|X")?,
                    self.set(aname)?,
                );
                let hm = h.difference(vx);
                out.push(InvariantCheck::subset("V_U|X ⊆ H_U|Y", vx, h));
                out.push(InvariantCheck::subset("A ⊆ V\\H", a, &v.difference(h)));
                out.push(InvariantCheck::size("|A| = |(H\\V_U|X)\\V|", a.len(), hm.difference(v).len()));
                out.push(InvariantCheck::eq("F = (H\\V_U|X) ∩ V", self.set("F")?, &hm.intersection(v)));
                out.push(InvariantCheck::eq("F' = (H\\V_U|X) \\ V", self.set("F'")?, &hm.difference(v)));
                let key = if self.model == ModelTag::Model2 { "K" } else { "S" };
                out.push(InvariantCheck::eq("K = (V\\H)\\A", self.set(key)?, &v.difference(h).difference(a)));
            }
            ModelTag::BioZero => {
                let (v, h, vx) = (self.set("V_U")?, self.set("H_U|Y")?, self.set("V_U|X")?);
                out.push(InvariantCheck::subset("V_U|X ⊆ H_U|Y", vx, h));
                out.push(InvariantCheck::eq("S_core = V_U\\H_U|Y", self.set("S_core")?, &v.difference(h)));
                let hm = h.difference(vx);
                out.push(InvariantCheck::eq("F ∪ F' = H_U|Y\\V_U|X", &self.set("F")?.union(self.set("F'")?), &hm));
            }
            ModelTag::Model3Star => {
                let hmin = self.set("H")?;
                let v = self.set("V_X1")?;
                for j in 2..=spec.terminals() {
                    let hj = self.set(&format!("H_X1|X{j}"))?;
                    out.push(InvariantCheck::subset(&format!("H_X1|X{j} ⊆ H_X1|X_imin"), hj, hmin));
                }
                out.push(InvariantCheck::eq("K = V\\H", self.set("K")?, &v.difference(hmin)));
                out.push(InvariantCheck::eq("F = V∩H", self.set("F")?, &v.intersection(hmin)));
                out.push(InvariantCheck::eq("F' = H\\V", self.set("F'")?, &hmin.difference(v)));
            }
            ModelTag::Model3Tri => {
                let v = self.set("V_X2")?;
                let h21 = self.set("H_X2|X1")?;
                let h23 = self.set("H_X2|X3")?;
                let (k, kbar) = (self.set("K")?, self.set("Kbar")?);
                out.push(InvariantCheck::eq("K ∪ Kbar = V\\H_2|1", &k.union(kbar), &v.difference(h21)));
                out.push(InvariantCheck::new("K ∩ Kbar = ∅", k.is_disjoint(kbar), ""));
                out.push(InvariantCheck::subset("Kbar ⊆ H_2|3", kbar, h23));
                let fxm = self.set("F_XM")?;
                let f21 = self.set("F21")?;
                let f23 = self.set("F23")?;
                out.push(InvariantCheck::subset("F_XM ⊆ F21\\F23", fxm, &f21.difference(f23)));
                out.push(InvariantCheck::size("|F_XM| = |Kbar|", fxm.len(), kbar.len()));
            }
            ModelTag::Model4 => {
                let JointSourceSpec::MarkovTree { m, edges } = spec else {
                    return Err(invalid("model4 needs a Markov-tree source"));
                };
                let tree = RootedTree::new(*m, edges, self.param("n0")?)?;
                let n1 = self.param("n1")?;
                let root_h = self.set(&h_name(tree.root, n1))?;
                for j0 in 1..=*m {
                    let Some(star) = pub_partner(&tree, j0, n1) else {
                        continue;
                    };
                    let hstar = self.set(&h_name(j0, star))?;
                    for &i in &tree.children[j0] {
                        let hi = self.set(&h_name(j0, i))?;
                        out.push(InvariantCheck::subset(
                            &format!("H_X{j0}|X{i} ⊆ H_X{j0}|X{star}"),
                            hi,
                            hstar,
                        ));
                    }
                    if j0 != tree.root {
                        out.push(InvariantCheck::subset(
                            &format!("H_X{j0}|X{star} ⊆ H_X{}|X{n1}", tree.root),
                            hstar,
                            root_h,
                        ));
                    }
                }
                out.push(InvariantCheck::eq("K = complement of root H", self.set("K")?, &root_h.complement()));
            }
        }
        Ok(out)
    }
}

fn seed_split_checks(
    out: &mut Vec<InvariantCheck>,
    v: &IndexSet,
    h: &IndexSet,
    a: &IndexSet,
    b: &IndexSetBundle,
) -> Result<()> {
    out.push(InvariantCheck::subset("A ⊆ V\\H", a, &v.difference(h)));
    out.push(InvariantCheck::size("|A| = |H\\V|", a.len(), h.difference(v).len()));
    out.push(InvariantCheck::eq("K = (V\\H)\\A", b.set("K")?, &v.difference(h).difference(a)));
    out.push(InvariantCheck::eq("F = V∩H", b.set("F")?, &v.intersection(h)));
    out.push(InvariantCheck::eq("F' = H\\V", b.set("F'")?, &h.difference(v)));
    Ok(())
}

pub(crate) fn h_name(a: usize, b: usize) -> String {
    format!("H_X{a}|X{b}")
}

/// The child whose side information vertex `j` publishes against, if `j` publishes.
pub(crate) fn pub_partner(tree: &RootedTree, j: usize, n1: usize) -> Option<usize> {
    if j == tree.root {
        Some(n1)
    } else {
        tree.j_star(j)
    }
}

/// `(n0, n1)`: the root and its partner on a min-MI edge.
pub fn model4_root(spec: &JointSourceSpec, root: Option<usize>) -> Result<(usize, usize)> {
    let ((a, b), best) = min_mi_edge(spec)?;
    let Some(r) = root else {
        return Ok((a, b));
    };
    let JointSourceSpec::MarkovTree { edges, .. } = spec else {
        unreachable!("min_mi_edge checked the variant");
    };
    let pmf = joint_pmf(spec)?;
    for e in edges {
        if e.a != r && e.b != r {
            continue;
        }
        let other = if e.a == r { e.b } else { e.a };
        let mi = pmf.mutual_information(&[Var::Terminal(r)], &[Var::Terminal(other)])?;
        if (mi - best).abs() <= 1e-12 {
            return Ok((r, other));
        }
    }
    Err(invalid(format!("root {r} is not an endpoint of a min-MI edge")))
}

/// The source pmf a model is polarized on, with the auxiliary `U` appended when it quantizes.
pub fn source_pmf(model: ModelTag, spec: &JointSourceSpec, channel: Option<&TestChannel>) -> Result<JointPmf> {
    let pmf = joint_pmf(spec)?;
    if model.uses_test_channel() {
        let ch = channel.ok_or_else(|| invalid(format!("{model} needs a test channel")))?;
        pmf.with_auxiliary(ch)
    } else {
        Ok(pmf)
    }
}

fn ctx(target: Var, side: &[Var]) -> ConditioningContext {
    ConditioningContext::new(target, side)
}

/// The conditioning contexts a model's sets are built from.
pub fn required_contexts(model: ModelTag, spec: &JointSourceSpec) -> Result<Vec<ConditioningContext>> {
    let t = Var::Terminal;
    let eve: &[Var] = if spec.has_eve() { &[Var::Eve] } else { &[] };
    let need_terminals = |k: usize| -> Result<()> {
        if spec.terminals() < k {
            return Err(invalid(format!("{model} needs at least {k} terminals")));
        }
        Ok(())
    };
    Ok(match model {
        ModelTag::Model1 => {
            need_terminals(2)?;
            vec![ctx(t(1), &[t(2)]), ctx(t(1), eve)]
        }
        ModelTag::Model2 => {
            need_terminals(2)?;
            let mut v = vec![ctx(Var::Aux, &[]), ctx(Var::Aux, &[t(1)]), ctx(Var::Aux, &[t(2)])];
            if spec.has_eve() {
                v.push(ctx(Var::Aux, &[Var::Eve]));
            }
            v
        }
        ModelTag::BioGen | ModelTag::BioZero => {
            need_terminals(2)?;
            vec![ctx(Var::Aux, &[]), ctx(Var::Aux, &[t(1)]), ctx(Var::Aux, &[t(2)])]
        }
        ModelTag::Model3Star => {
            let JointSourceSpec::BroadcastStar { .. } = spec else {
                return Err(invalid("model3-star needs a broadcast-star source"));
            };
            let mut v = vec![ctx(t(1), &[])];
            v.extend((2..=spec.terminals()).map(|j| ctx(t(1), &[t(j)])));
            v
        }
        ModelTag::Model3Tri => {
            if spec.terminals() != 3 {
                return Err(invalid("model3-tri needs exactly three terminals"));
            }
            vec![ctx(t(2), &[]), ctx(t(2), &[t(1)]), ctx(t(2), &[t(3)])]
        }
        ModelTag::Model4 => {
            let JointSourceSpec::MarkovTree { edges, .. } = spec else {
                return Err(invalid("model4 needs a Markov-tree source"));
            };
            let mut v = Vec::new();
            for e in edges {
                v.push(ctx(t(e.a), &[t(e.b)]));
                v.push(ctx(t(e.b), &[t(e.a)]));
            }
            v.sort();
            v
        }
    })
}

/// Computes the required statistics and builds the bundle.
pub fn construct<R: Rng + ?Sized>(
    model: ModelTag,
    spec: &JointSourceSpec,
    channel: Option<&TestChannel>,
    n: usize,
    method: Construction,
    opts: &BuildOptions,
    rng: &mut R,
) -> Result<IndexSetBundle> {
    let pmf = source_pmf(model, spec, channel)?;
    let mut stats = StatsBundle::new();
    for c in required_contexts(model, spec)? {
        let s = match method {
            Construction::Exact => exact_index_stats(&pmf, n, &c)?,
            Construction::MonteCarlo { samples } => mc_index_stats(&pmf, n, &c, samples, rng)?,
        };
        stats.insert(c.name(), s);
    }
    build_index_sets(model, spec, &stats, opts)
}

struct Thr<'a> {
    stats: &'a StatsBundle,
    dh: f64,
    dv: f64,
}

impl Thr<'_> {
    fn get(&self, c: &ConditioningContext) -> Result<&PolarIndexStats> {
        self.stats
            .get(&c.name())
            .ok_or_else(|| invalid(format!("missing statistics for context {}", c.name())))
    }

    fn h(&self, c: &ConditioningContext) -> Result<IndexSet> {
        let s = self.get(c)?;
        Ok(IndexSet::from_mask(&s.h_cond.iter().map(|&v| v >= self.dh).collect::<Vec<_>>()))
    }

    fn v(&self, c: &ConditioningContext) -> Result<IndexSet> {
        let s = self.get(c)?;
        Ok(IndexSet::from_mask(&s.h_cond.iter().map(|&v| v >= 1.0 - self.dv).collect::<Vec<_>>()))
    }
}

/// The `count` members of `cand` with the highest entropy under `scores`; ties go to lower indices.
fn select_top(cand: &IndexSet, scores: &[f64], count: usize) -> IndexSet {
    let mut order: Vec<usize> = cand.iter().collect();
    order.sort_by(|&a, &b| scores[b - 1].total_cmp(&scores[a - 1]).then(a.cmp(&b)));
    IndexSet::new(cand.n_total(), order.into_iter().take(count)).expect("members of cand")
}

/// Thresholds `stats` and derives every set the model's protocol uses.
pub fn build_index_sets(
    model: ModelTag,
    spec: &JointSourceSpec,
    stats: &StatsBundle,
    opts: &BuildOptions,
) -> Result<IndexSetBundle> {
    opts.thresholds.validate()?;
    let first = stats
        .values()
        .next()
        .ok_or_else(|| invalid("empty statistics bundle"))?;
    let n = first.n;
    if stats.values().any(|s| s.n != n || s.method != first.method) {
        return Err(invalid("statistics disagree on block length or method"));
    }
    let thr = Thr {
        stats,
        dh: opts.thresholds.delta_h(n),
        dv: opts.thresholds.delta_v(n),
    };
    let mut sets = BTreeMap::new();
    let mut params = BTreeMap::new();
    let t = Var::Terminal;
    let eve: &[Var] = if spec.has_eve() { &[Var::Eve] } else { &[] };
    let mut put = |name: &str, s: IndexSet| {
        sets.insert(name.to_string(), s);
    };
    match model {
        ModelTag::Model1 => {
            let cz = ctx(t(1), eve);
            let v = thr.v(&cz)?;
            let h = thr.h(&ctx(t(1), &[t(2)]))?;
            let need = h.difference(&v).len();
            let cand = v.difference(&h);
            if cand.len() < need {
                return Err(Error::Infeasible(format!(
                    "|V_X|Z \\ H_X|Y| = {} < |H_X|Y \\ V_X|Z| = {need}; A_XYZ does not exist",
                    cand.len()
                )));
            }
            let a = select_top(&cand, &thr.get(&cz)?.h_cond, need);
            put("K", cand.difference(&a));
            put("F", v.intersection(&h));
            put("F'", h.difference(&v));
            put("A_XYZ", a);
            put("V_X|Z", v);
            put("H_X|Y", h);
        }
        ModelTag::Model2 | ModelTag::BioGen | ModelTag::BioZero => {
            let u = Var::Aux;
            let sec_ctx = if model == ModelTag::Model2 { ctx(u, eve) } else { ctx(u, &[]) };
            let v = thr.v(&sec_ctx)?;
            let h_u = thr.h(&ctx(u, &[]))?;
            let vx = thr.v(&ctx(u, &[t(1)]))?;
            let hy = thr.h(&ctx(u, &[t(2)]))?;
            let hm = hy.difference(&vx);
            put("H_U", h_u);
            put("V_U|X", vx);
            put("H_U|Y", hy.clone());
            put("F", hm.intersection(&v));
            put("F'", hm.difference(&v));
            if model == ModelTag::BioZero {
                put("S_core", v.difference(&hy));
                put("V_U", v);
            } else {
                let need = hm.difference(&v).len();
                let cand = v.difference(&hy);
                if cand.len() < need {
                    return Err(Error::Infeasible(format!(
                        "|V \\ H_U|Y| = {} < |(H_U|Y \\ V_U|X) \\ V| = {need}; the seed set does not exist",
                        cand.len()
                    )));
                }
                let a = select_top(&cand, &thr.get(&sec_ctx)?.h_cond, need);
                let (vname, aname, kname) = if model == ModelTag::Model2 {
                    ("V_U|Z", "A_UYZ", "K")
                } else {
                    ("V_U", "A_UXY", "S")
                };
                put(kname, cand.difference(&a));
                put(aname, a);
                put(vname, v);
            }
        }
        ModelTag::Model3Star => {
            let cap = crate::capacity::broadcast_capacity(spec)?;
            let imin = cap.aux["argmin_terminal"] as usize;
            params.insert("i_min".to_string(), imin);
            let v = thr.v(&ctx(t(1), &[]))?;
            for j in 2..=spec.terminals() {
                put(&format!("H_X1|X{j}"), thr.h(&ctx(t(1), &[t(j)]))?);
            }
            let h = thr.h(&ctx(t(1), &[t(imin)]))?;
            put("K", v.difference(&h));
            put("F", v.intersection(&h));
            put("F'", h.difference(&v));
            put("H", h);
            put("V_X1", v);
        }
        ModelTag::Model3Tri => {
            check_tri_labeling(spec)?;
            let v = thr.v(&ctx(t(2), &[]))?;
            let h21 = thr.h(&ctx(t(2), &[t(1)]))?;
            let h23 = thr.h(&ctx(t(2), &[t(3)]))?;
            let k = v.difference(&h21).difference(&h23);
            let kbar = v.difference(&h21).intersection(&h23);
            let f21 = h21.intersection(&v);
            let fbar21 = h21.difference(&v);
            let f23 = h23.intersection(&v);
            let fbar23 = h23.difference(&v);
            let cand = f21.difference(&f23);
            if cand.len() < kbar.len() {
                return Err(Error::Infeasible(format!(
                    "|F_2|1 \\ F_2|3| = {} < |Kbar| = {}; F_XM does not exist",
                    cand.len(),
                    kbar.len()
                )));
            }
            let fxm = cand.lowest(kbar.len());
            put("F2", f21.difference(&fxm));
            put("Fp", fbar21.union(&fbar23));
            put("Fbar_last", f23.difference(&f21));
            put("F_XM", fxm);
            put("K", k);
            put("Kbar", kbar);
            put("F21", f21);
            put("Fbar21", fbar21);
            put("F23", f23);
            put("Fbar23", fbar23);
            put("H_X2|X1", h21);
            put("H_X2|X3", h23);
            put("V_X2", v);
        }
        ModelTag::Model4 => {
            let (n0, n1) = model4_root(spec, opts.model4_root)?;
            params.insert("n0".to_string(), n0);
            params.insert("n1".to_string(), n1);
            let JointSourceSpec::MarkovTree { edges, .. } = spec else {
                unreachable!("model4_root checked the variant");
            };
            for e in edges {
                put(&h_name(e.a, e.b), thr.h(&ctx(t(e.a), &[t(e.b)]))?);
                put(&h_name(e.b, e.a), thr.h(&ctx(t(e.b), &[t(e.a)]))?);
            }
            let root_h = thr.h(&ctx(t(n0), &[t(n1)]))?;
            put("K", root_h.complement());
        }
    }
    Ok(IndexSetBundle {
        model,
        n,
        method: first.method,
        samples: first.samples,
        beta: opts.thresholds.beta,
        delta_h: thr.dh,
        delta_v: thr.dv,
        params,
        sets,
        stats: stats.clone(),
    })
}

/// Terminal 2 must be the best-connected terminal and terminal 1 its weakest partner.
fn check_tri_labeling(spec: &JointSourceSpec) -> Result<()> {
    let pmf = joint_pmf(spec)?;
    let mi = |a: usize, b: usize| pmf.mutual_information(&[Var::Terminal(a)], &[Var::Terminal(b)]);
    let (i12, i13, i23) = (mi(1, 2)?, mi(1, 3)?, mi(2, 3)?);
    let best = [i12.min(i13), i12.min(i23), i13.min(i23)]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    const TOL: f64 = 1e-12;
    if i12 + TOL < best || i23 + TOL < i12 {
        return Err(invalid(format!(
            "terminal labeling must satisfy I(X1;X2) = max_j min_i I(Xj;Xi) = min_i I(X2;Xi); got I12={i12:.6}, I13={i13:.6}, I23={i23:.6}"
        )));
    }
    Ok(())
}
