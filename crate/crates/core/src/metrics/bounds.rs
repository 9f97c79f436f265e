//! Finite-length bounds driven by the polarization threshold `δ_N`.

use std::f64::consts::LN_2;

fn shaped(c: f64, n: usize, delta: f64) -> f64 {
    let n = n as f64;
    let a = c * (2.0 * LN_2).sqrt() * (n * delta).sqrt();
    if a <= 0.0 {
        return 0.0;
    }
    a * (n - a.log2())
}

/// Encoder-induced leakage term `δ* = −c·N·√δ·log2(c·√δ)`, `c = 3√(2N ln 2)`.
pub fn delta_star(n: usize, delta: f64) -> f64 {
    let c = 3.0 * (2.0 * n as f64 * LN_2).sqrt() * delta.sqrt();
    if c <= 0.0 {
        return 0.0;
    }
    -c * n as f64 * c.log2()
}

/// `δ1 = a(N − log2 a)`, `a = 2√(2 ln 2)·√(Nδ)`.
pub fn delta1(n: usize, delta: f64) -> f64 {
    shaped(2.0, n, delta)
}

/// As [`delta1`] with factor 6.
pub fn delta2(n: usize, delta: f64) -> f64 {
    shaped(6.0, n, delta)
}

/// As [`delta1`] with factor 3.
pub fn delta3(n: usize, delta: f64) -> f64 {
    shaped(3.0, n, delta)
}

/// Per-block leakage bound of a quantized block: `2δ1 + δ2 + δ3`.
pub fn block_leakage_bound(n: usize, delta: f64) -> f64 {
    2.0 * delta1(n, delta) + delta2(n, delta) + delta3(n, delta)
}

/// Leakage bound of a `k`-block quantized chain.
pub fn chain_leakage_bound(n: usize, k: usize, delta: f64) -> f64 {
    let k = k as f64;
    (k - 1.0) * (k + 2.0) / 2.0 * delta2(n, delta) + k * block_leakage_bound(n, delta)
}

/// Uniformity bound of a `k`-block quantized chain: `k(δ1 + δ2)`.
pub fn chain_uniformity_bound(n: usize, k: usize, delta: f64) -> f64 {
    k as f64 * (delta1(n, delta) + delta2(n, delta))
}

/// Divergence bound between ideal and encoder laws: `Nδ` bits.
pub fn encoder_divergence_bound(n: usize, delta: f64) -> f64 {
    n as f64 * delta
}

/// Variational-distance bound between ideal and encoder laws: `√(2 ln 2 · Nδ)`.
pub fn encoder_distance_bound(n: usize, delta: f64) -> f64 {
    (2.0 * LN_2 * n as f64 * delta).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_scale_with_factor() {
        let (n, d) = (1024, 1e-12);
        assert!(delta1(n, d) < delta3(n, d) && delta3(n, d) < delta2(n, d));
        assert_eq!(delta1(n, 0.0), 0.0);
    }

    #[test]
    fn star_matches_formula() {
        let (n, d) = (256usize, 1e-14f64);
        let c = 3.0 * (2.0 * n as f64 * LN_2).sqrt() * d.sqrt();
        assert!((delta_star(n, d) + c * n as f64 * c.log2()).abs() < 1e-12);
    }
}
