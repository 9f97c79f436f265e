use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{structural, Error, Result};

/// A sorted set of 1-based indices into a block of length `n`.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "IndexSetRepr")]
pub struct IndexSet {
    n: usize,
    #[serde(rename = "indices")]
    idx: Vec<usize>,
}

impl IndexSet {
    pub fn empty(n: usize) -> Self {
        IndexSet { n, idx: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        IndexSet {
            n,
            idx: (1..=n).collect(),
        }
    }

    /// Builds a set from arbitrary indices; duplicates collapse, order is normalized.
    pub fn new(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut idx: Vec<usize> = indices.into_iter().collect();
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&i| i == 0 || i > n) {
            return Err(structural(format!("index {bad} outside [1, {n}]")));
        }
        Ok(IndexSet { n, idx })
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        IndexSet {
            n: mask.len(),
            idx: (0..mask.len()).filter(|&i| mask[i]).map(|i| i + 1).collect(),
        }
    }

    pub fn n_total(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.idx.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.idx.binary_search(&i).is_ok()
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for &i in &self.idx {
            m[i - 1] = true;
        }
        m
    }

    fn combine(&self, other: &IndexSet, keep: impl Fn(bool, bool) -> bool) -> IndexSet {
        assert_eq!(self.n, other.n, "index sets over different block lengths");
        let a = self.mask();
        let b = other.mask();
        IndexSet {
            n: self.n,
            idx: (0..self.n).filter(|&i| keep(a[i], b[i])).map(|i| i + 1).collect(),
        }
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        self.combine(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> IndexSet {
        IndexSet::full(self.n).difference(self)
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.n == other.n && self.idx.iter().all(|&i| other.contains(i))
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.intersection(other).is_empty()
    }

    /// The first `count` members in index order.
    pub fn lowest(&self, count: usize) -> IndexSet {
        IndexSet {
            n: self.n,
            idx: self.idx.iter().take(count).copied().collect(),
        }
    }
}

#[derive(Deserialize)]
struct IndexSetRepr {
    n: usize,
    #[serde(rename = "indices")]
    idx: Vec<usize>,
}

impl TryFrom<IndexSetRepr> for IndexSet {
    type Error = Error;
    fn try_from(r: IndexSetRepr) -> Result<Self> {
        IndexSet::new(r.n, r.idx)
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.idx.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}/{}", self.n)
    }
}
