//! Per-index polarization statistics and the index sets derived from them.
//!
//! Statistics come from [`exact_index_stats`] (full enumeration) or
//! [`mc_index_stats`] (genie-aided sampling). [`build_index_sets`] thresholds
//! them into `H` (`h ≥ δ`) and `V` (`h ≥ 1 − δ`) sets and derives each
//! model's key, seed and public-message partitions.

mod sets;
mod stats;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use sets::{
    build_index_sets, construct, model4_root, required_contexts, source_pmf, BuildOptions, Construction,
    IndexSetBundle, InvariantCheck, StatsBundle,
};
pub(crate) use sets::{h_name, pub_partner};
pub use stats::{
    bhattacharyya, check_combine_bound, combine_bound, exact_index_stats, mc_index_stats,
    CombineBound, CombineBoundReport, ConditioningContext, Method, PolarIndexStats,
    EXACT_BUDGET_LOG2,
};

use crate::error::{invalid, Error};

/// `δ_N = 2^{−N^β}`.
pub fn delta_n(n: usize, beta: f64) -> f64 {
    2f64.powf(-(n as f64).powf(beta))
}

/// Threshold policy: the default `δ_N` unless an absolute value overrides it.
///
/// `delta` overrides both thresholds; `delta_v` overrides only the one used
/// for very-high-entropy sets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub beta: f64,
    pub delta: Option<f64>,
    pub delta_v: Option<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            beta: 0.25,
            delta: None,
            delta_v: None,
        }
    }
}

impl Thresholds {
    pub fn with_delta(delta: f64) -> Self {
        Thresholds {
            delta: Some(delta),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return Err(invalid(format!("beta = {} outside (0, 1/2)", self.beta)));
        }
        for d in [self.delta, self.delta_v].into_iter().flatten() {
            if !(d > 0.0 && d < 0.5) {
                return Err(invalid(format!("delta = {d} outside (0, 1/2)")));
            }
        }
        Ok(())
    }

    pub fn delta_h(&self, n: usize) -> f64 {
        self.delta.unwrap_or_else(|| delta_n(n, self.beta))
    }

    pub fn delta_v(&self, n: usize) -> f64 {
        self.delta_v.or(self.delta).unwrap_or_else(|| delta_n(n, self.beta))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelTag {
    #[serde(rename = "model1")]
    Model1,
    #[serde(rename = "model2")]
    Model2,
    #[serde(rename = "model3-star")]
    Model3Star,
    #[serde(rename = "model3-tri")]
    Model3Tri,
    #[serde(rename = "model4")]
    Model4,
    #[serde(rename = "bio-gen")]
    BioGen,
    #[serde(rename = "bio-zero")]
    BioZero,
}

impl ModelTag {
    pub const ALL: [ModelTag; 7] = [
        ModelTag::Model1,
        ModelTag::Model2,
        ModelTag::Model3Star,
        ModelTag::Model3Tri,
        ModelTag::Model4,
        ModelTag::BioGen,
        ModelTag::BioZero,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelTag::Model1 => "model1",
            ModelTag::Model2 => "model2",
            ModelTag::Model3Star => "model3-star",
            ModelTag::Model3Tri => "model3-tri",
            ModelTag::Model4 => "model4",
            ModelTag::BioGen => "bio-gen",
            ModelTag::BioZero => "bio-zero",
        }
    }

    /// Models that quantize through an auxiliary `U`.
    pub fn uses_test_channel(&self) -> bool {
        matches!(self, ModelTag::Model2 | ModelTag::BioGen | ModelTag::BioZero)
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        ModelTag::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown model '{s}'")))
    }
}
