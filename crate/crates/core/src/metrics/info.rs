use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use serde::{Deserialize, Serialize};

use crate::error::{structural, Error, Result};

/// Maximum number of components in a [`JointTable`] outcome.
pub const MAX_COMPONENTS: usize = 8;

pub type Outcome = [u64; MAX_COMPONENTS];

/// Fixed-key hashing keeps iteration order, and so float sums, reproducible.
pub type OutcomeMap = HashMap<Outcome, f64, BuildHasherDefault<DefaultHasher>>;

/// `−Σ p log2 p` over the nonzero masses.
pub fn entropy_of(it: impl Iterator<Item = f64>) -> f64 {
    -it.filter(|&p| p > 0.0).map(|p| p * p.log2()).sum::<f64>()
}

/// A finite joint pmf over outcomes made of up to eight packed components.
#[derive(Clone, Debug, Default)]
pub struct JointTable {
    names: Vec<String>,
    cells: OutcomeMap,
}

impl JointTable {
    pub fn new(names: &[&str]) -> Self {
        assert!(names.len() <= MAX_COMPONENTS);
        JointTable {
            names: names.iter().map(|s| s.to_string()).collect(),
            cells: OutcomeMap::default(),
        }
    }

    pub fn arity(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Index of a component by name.
    pub fn component(&self, name: &str) -> usize {
        self.names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("no component '{name}'"))
    }

    pub fn components(&self, names: &[&str]) -> Vec<usize> {
        names.iter().map(|n| self.component(n)).collect()
    }

    #[inline]
    pub fn add(&mut self, outcome: &[u64], w: f64) {
        if w == 0.0 {
            return;
        }
        let mut key = [0u64; MAX_COMPONENTS];
        key[..outcome.len()].copy_from_slice(outcome);
        *self.cells.entry(key).or_insert(0.0) += w;
    }

    pub fn merge(&mut self, other: JointTable) {
        for (k, w) in other.cells {
            *self.cells.entry(k).or_insert(0.0) += w;
        }
    }

    pub fn support(&self) -> usize {
        self.cells.len()
    }

    pub fn total(&self) -> f64 {
        self.cells.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Outcome, f64)> {
        self.cells.iter().map(|(k, &w)| (k, w))
    }

    fn project(key: &Outcome, comps: &[usize]) -> Outcome {
        let mut out = [0u64; MAX_COMPONENTS];
        for (k, &c) in comps.iter().enumerate() {
            out[k] = key[c];
        }
        out
    }

    pub fn marginal(&self, comps: &[usize]) -> OutcomeMap {
        let mut m = OutcomeMap::default();
        for (k, &w) in &self.cells {
            *m.entry(Self::project(k, comps)).or_insert(0.0) += w;
        }
        m
    }

    pub fn entropy(&self, comps: &[usize]) -> f64 {
        entropy_of(self.marginal(comps).into_values())
    }

    /// `I(A; B)` computed term-wise, so an exactly independent pair gives zero
    /// up to rounding of each ratio.
    pub fn mutual_information(&self, a: &[usize], b: &[usize]) -> f64 {
        let ab: Vec<usize> = a.iter().chain(b).copied().collect();
        let pab = self.marginal(&ab);
        let pa = self.marginal(a);
        let pb = self.marginal(b);
        let na = a.len();
        pab.iter()
            .filter(|(_, &w)| w > 0.0)
            .map(|(k, &w)| {
                let mut ka = [0u64; MAX_COMPONENTS];
                let mut kb = [0u64; MAX_COMPONENTS];
                ka[..na].copy_from_slice(&k[..na]);
                kb[..b.len()].copy_from_slice(&k[na..na + b.len()]);
                w * (w / (pa[&ka] * pb[&kb])).log2()
            })
            .sum()
    }

    /// `I(A; B | C) = H(AC) + H(BC) − H(ABC) − H(C)`.
    pub fn conditional_mutual_information(&self, a: &[usize], b: &[usize], c: &[usize]) -> f64 {
        let cat = |x: &[usize], y: &[usize]| -> Vec<usize> { x.iter().chain(y).copied().collect() };
        self.entropy(&cat(a, c)) + self.entropy(&cat(b, c)) - self.entropy(&cat(&cat(a, b), c))
            - self.entropy(c)
    }

    pub fn by_name_mi(&self, a: &[&str], b: &[&str]) -> f64 {
        self.mutual_information(&self.components(a), &self.components(b))
    }

    pub fn by_name_entropy(&self, a: &[&str]) -> f64 {
        self.entropy(&self.components(a))
    }
}

/// Mutual information between two component groups of a joint pmf.
pub fn mutual_information(joint: &JointTable, a: &[usize], b: &[usize]) -> f64 {
    joint.mutual_information(a, b)
}

fn same_support(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(structural(format!(
            "distributions over {} and {} outcomes",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// `V(p, q) = Σ |p − q|` (unnormalized L1).
pub fn variational_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    same_support(p, q)?;
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

/// `D(p ‖ q)` in bits; [`Error::InfiniteDivergence`] when `q = 0 < p` somewhere.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    same_support(p, q)?;
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::InfiniteDivergence);
            }
            d += a * (a / b).log2();
        }
    }
    Ok(d)
}

/// Pinsker in the L1 convention: `V ≤ √(2 ln 2 · D_bits)`.
pub fn pinsker_bound(d_bits: f64) -> f64 {
    (2.0 * std::f64::consts::LN_2 * d_bits.max(0.0)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecrecyMethod {
    Exact,
    PlugIn,
}

/// Leakage `I(K; view)` and uniformity `|K| − H(K)` in bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecrecyReport {
    pub leakage_bits: f64,
    pub uniformity_bits: f64,
    pub key_bits: usize,
    pub method: SecrecyMethod,
    /// Enumerated support size (exact) or trial count (plug-in).
    pub size: usize,
    /// Plug-in only: an upper envelope on the estimator bias under independence.
    pub bias_bound: Option<f64>,
}

impl SecrecyReport {
    /// Both figures respect the numerical floor of −1e−9.
    pub fn is_sane(&self) -> bool {
        self.leakage_bits >= -1e-9 && self.uniformity_bits >= -1e-9
    }
}

/// Plug-in estimates from paired (key, Eve-view) samples; diagnostic only.
///
/// The bias bound is the mean plus four standard deviations of the plug-in
/// MI under independence, `(df + 4√(2 df)) / (2 T ln 2)` with
/// `df = (|supp K| − 1)(|supp view| − 1)`.
pub fn plug_in_secrecy(samples: &[(crate::polar_core::Bits, crate::polar_core::Bits)], key_bits: usize) -> SecrecyReport {
    let t = samples.len().max(1) as f64;
    let mut kid: HashMap<&crate::polar_core::Bits, u64> = HashMap::new();
    let mut vid: HashMap<&crate::polar_core::Bits, u64> = HashMap::new();
    let mut table = JointTable::new(&["K", "V"]);
    for (k, v) in samples {
        let nk = kid.len() as u64;
        let a = *kid.entry(k).or_insert(nk);
        let nv = vid.len() as u64;
        let b = *vid.entry(v).or_insert(nv);
        table.add(&[a, b], 1.0 / t);
    }
    let df = (kid.len().saturating_sub(1) * vid.len().saturating_sub(1)) as f64;
    SecrecyReport {
        leakage_bits: table.mutual_information(&[0], &[1]),
        uniformity_bits: key_bits as f64 - table.entropy(&[0]),
        key_bits,
        method: SecrecyMethod::PlugIn,
        size: samples.len(),
        bias_bound: Some((df + 4.0 * (2.0 * df).sqrt()) / (2.0 * t * std::f64::consts::LN_2)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRate {
    pub trials: usize,
    pub errors: usize,
    pub rate: f64,
    /// Binomial standard deviation of the rate estimate.
    pub sigma: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ErrorRate {
    /// Wilson 95% interval.
    pub fn from_counts(errors: usize, trials: usize) -> Self {
        let n = trials.max(1) as f64;
        let p = errors as f64 / n;
        let z = 1.959_963_985;
        let denom = 1.0 + z * z / n;
        let center = (p + z * z / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        ErrorRate {
            trials,
            errors,
            rate: p,
            sigma: (p * (1.0 - p) / n).sqrt(),
            ci_low: (center - half).max(0.0),
            ci_high: (center + half).min(1.0),
        }
    }
}

/// Runs `failed(trial)` for each trial in parallel and counts failures.
///
/// Each trial must derive its own randomness from its index, which keeps the
/// count independent of scheduling.
pub fn empirical_error_rate<F>(trials: usize, failed: F) -> ErrorRate
where
    F: Fn(usize) -> bool + Sync,
{
    use rayon::prelude::*;
    let errors = (0..trials).into_par_iter().filter(|&t| failed(t)).count();
    ErrorRate::from_counts(errors, trials)
}
