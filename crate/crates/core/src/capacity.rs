//! Closed-form reference rates for the secret-key models.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sources::{degrade_check, joint_pmf, JointSourceSpec, TestChannel, Var};

const ROOT_TOL: f64 = 1e-9;
const ROOT_MAX_ITER: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// Bits per source symbol.
    pub value: f64,
    pub model: String,
    /// Auxiliary quantities such as `beta0` or the argmin terminals.
    pub aux: BTreeMap<String, f64>,
    pub warning: Option<String>,
}

impl CapacityResult {
    fn new(model: &str, value: f64) -> Self {
        CapacityResult {
            value,
            model: model.to_string(),
            aux: BTreeMap::new(),
            warning: None,
        }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.aux.insert(key.to_string(), v);
        self
    }
}

fn check_unit(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::Structural(format!("{name} = {p} outside [0, 1]")));
    }
    Ok(())
}

/// Binary entropy in bits.
pub fn hb(p: f64) -> Result<f64> {
    check_unit("p", p)?;
    Ok(hb_unchecked(p))
}

pub(crate) fn hb_unchecked(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Binary convolution `a ⋆ b = (1 − a) b + a (1 − b)`.
pub fn star(a: f64, b: f64) -> Result<f64> {
    check_unit("a", a)?;
    check_unit("b", b)?;
    Ok(star_unchecked(a, b))
}

fn star_unchecked(a: f64, b: f64) -> f64 {
    (1.0 - a) * b + a * (1.0 - b)
}

/// `I(X;Y) − I(X;Z)` for terminals 1, 2 and Eve; flagged when `X → Y → Z` fails.
pub fn cwsk_unlimited(spec: &JointSourceSpec) -> Result<CapacityResult> {
    let pmf = joint_pmf(spec)?;
    let (x, y) = (Var::Terminal(1), Var::Terminal(2));
    let ixy = pmf.mutual_information(&[x], &[y])?;
    let ixz = if spec.has_eve() {
        pmf.mutual_information(&[x], &[Var::Eve])?
    } else {
        0.0
    };
    let mut r = CapacityResult::new("wsk_unlimited", ixy - ixz)
        .with("i_xy", ixy)
        .with("i_xz", ixz);
    if !degrade_check(spec)?.markov_chain_xyz {
        r.warning = Some("source is not degraded; value is an achievable rate, not the capacity".into());
    }
    Ok(r)
}

fn example1_gap(p: f64, beta: f64) -> f64 {
    hb_unchecked(star_unchecked(p, beta)) - hb_unchecked(beta)
}

/// Rate-limited capacity of the uniform BSC chain with public rate `r_p`.
pub fn example1_capacity(p: f64, q: f64, r_p: f64) -> Result<CapacityResult> {
    if !(p > 0.0 && p < 0.5 && q > 0.0 && q < 0.5) {
        return Err(invalid("example-1 capacity needs p, q in (0, 1/2)"));
    }
    if !(r_p >= 0.0) {
        return Err(invalid("public rate must be nonnegative"));
    }
    let hp = hb_unchecked(p);
    if r_p >= hp {
        let v = hb_unchecked(star_unchecked(p, q)) - hp;
        return Ok(CapacityResult::new("example1", v).with("beta0", 0.0).with("r_p", r_p));
    }
    // gap(0) = H_b(p) > r_p and gap(1/2) = 0 ≤ r_p; the gap decreases on [0, 1/2].
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    let mut iters = 0;
    while hi - lo > ROOT_TOL && iters < ROOT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if example1_gap(p, mid) > r_p {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    let beta0 = 0.5 * (lo + hi);
    if (example1_gap(p, beta0) - r_p).abs() > 1e-6 {
        return Err(Error::NoRoot(format!("no beta0 in [0, 1/2] for r_p = {r_p}")));
    }
    let pb = star_unchecked(p, beta0);
    let v = hb_unchecked(star_unchecked(pb, q)) - hb_unchecked(pb);
    Ok(CapacityResult::new("example1", v)
        .with("beta0", beta0)
        .with("r_p", r_p))
}

/// `min_i I(X_1; X_i)` with the lowest-index argmin terminal.
pub fn broadcast_capacity(spec: &JointSourceSpec) -> Result<CapacityResult> {
    let JointSourceSpec::BroadcastStar { .. } = spec else {
        return Err(invalid("broadcast capacity needs a broadcast-star source"));
    };
    let pmf = joint_pmf(spec)?;
    let mut best = (f64::INFINITY, 0usize);
    for j in 2..=spec.terminals() {
        let i = pmf.mutual_information(&[Var::Terminal(1)], &[Var::Terminal(j)])?;
        if i < best.0 {
            best = (i, j);
        }
    }
    Ok(CapacityResult::new("broadcast", best.0).with("argmin_terminal", best.1 as f64))
}

/// `min` over tree edges of the pairwise MI, with the first argmin edge.
pub fn tree_capacity(spec: &JointSourceSpec) -> Result<CapacityResult> {
    let (edge, value) = min_mi_edge(spec)?;
    Ok(CapacityResult::new("markov_tree", value)
        .with("edge_a", edge.0 as f64)
        .with("edge_b", edge.1 as f64))
}

/// The tree edge minimizing `I(X_a; X_b)`, normalized to `a < b`; ties go to
/// the lexicographically smallest edge.
pub fn min_mi_edge(spec: &JointSourceSpec) -> Result<((usize, usize), f64)> {
    let JointSourceSpec::MarkovTree { edges, .. } = spec else {
        return Err(invalid("tree capacity needs a Markov-tree source"));
    };
    let pmf = joint_pmf(spec)?;
    let mut cand: Vec<((usize, usize), f64)> = edges
        .iter()
        .map(|e| {
            let (a, b) = (e.a.min(e.b), e.a.max(e.b));
            pmf.mutual_information(&[Var::Terminal(a)], &[Var::Terminal(b)])
                .map(|i| ((a, b), i))
        })
        .collect::<Result<_>>()?;
    cand.sort_by(|x, y| x.0.cmp(&y.0));
    let best = cand
        .iter()
        .fold(None::<((usize, usize), f64)>, |acc, &c| match acc {
            Some(a) if a.1 <= c.1 + 1e-15 => Some(a),
            _ => Some(c),
        })
        .expect("tree has edges");
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub key_rate: f64,
    pub public_rate: f64,
}

/// `(I(Y;U) − I(Z;U), I(U;X) − I(U;Y))` for the given test channel.
pub fn model2_rate_point(spec: &JointSourceSpec, channel: &TestChannel) -> Result<RatePoint> {
    let pmf = joint_pmf(spec)?.with_auxiliary(channel)?;
    let u = [Var::Aux];
    let iyu = pmf.mutual_information(&[Var::Terminal(2)], &u)?;
    let izu = if spec.has_eve() {
        pmf.mutual_information(&[Var::Eve], &u)?
    } else {
        0.0
    };
    let ixu = pmf.mutual_information(&[Var::Terminal(1)], &u)?;
    Ok(RatePoint {
        key_rate: iyu - izu,
        public_rate: ixu - iyu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_and_convolution_values() {
        assert_eq!(hb(0.0).unwrap(), 0.0);
        assert_eq!(hb(1.0).unwrap(), 0.0);
        assert_eq!(hb(0.5).unwrap(), 1.0);
        assert_eq!(star(0.3, 0.0).unwrap(), 0.3);
        assert_eq!(star(0.3, 0.5).unwrap(), 0.5);
        assert!((star(0.1, 0.1).unwrap() - 0.18).abs() < 1e-15);
        assert!(hb(1.5).is_err());
    }

    #[test]
    fn example1_unconstrained_branch() {
        let r = example1_capacity(0.1, 0.1, 1.0).unwrap();
        let expect = hb(0.18).unwrap() - hb(0.1).unwrap();
        assert!((r.value - expect).abs() < 1e-15);
        assert!((r.value - 0.2111).abs() < 1e-4);
    }

    #[test]
    fn example1_zero_rate_gives_zero() {
        let r = example1_capacity(0.1, 0.1, 0.0).unwrap();
        assert!(r.value.abs() < 1e-8);
        assert!((r.aux["beta0"] - 0.5).abs() < 1e-4);
    }
}
