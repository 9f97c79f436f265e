//! Key generation over a Markov tree of pairwise binary symmetric links.
//!
//! The root's polarized block is the key; publishers send only their
//! high-entropy bits, and each terminal relays reconstructions up to the
//! root. The enumeration at `N = 8` shows the key is exactly uniform and
//! independent of the transcript.
//!
//! Run: cargo run --release --example markov_tree

use polar_skg::capacity::tree_capacity;
use polar_skg::metrics::exact_model4;
use polar_skg::polarization::{construct, BuildOptions, Construction, ModelTag};
use polar_skg::protocols::model4_run;
use polar_skg::sources::{JointSourceSpec, TreeEdge};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> polar_skg::Result<()> {
    let e = |a, b, p| TreeEdge { a, b, p };
    let spec = JointSourceSpec::MarkovTree { m: 5, edges: vec![e(1, 2, 0.03), e(2, 3, 0.05), e(2, 4, 0.02), e(4, 5, 0.04)] };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    println!("tree capacity {:.4}", tree_capacity(&spec)?.value);

    let path = JointSourceSpec::MarkovTree { m: 3, edges: vec![e(1, 2, 0.1), e(2, 3, 0.2)] };
    let sets = construct(ModelTag::Model4, &path, None, 8, Construction::Exact, &BuildOptions::default(), &mut rng)?;
    let d = exact_model4(&path, &sets)?;
    println!("path, N = 8: |K| = {}, |K| − H(K) = {:.1e}, I(K; F) = {:.1e}",
        d.width(&["K"]), d.width(&["K"]) as f64 - d.entropy(&["K"]), d.mi(&["K"], &["M"]));

    let n = 512;
    let mc = Construction::MonteCarlo { samples: 20_000 };
    let sets = construct(ModelTag::Model4, &spec, None, n, mc, &BuildOptions::default(), &mut rng)?;
    let r = model4_run(&spec, &sets, &mut rng)?;
    println!("\nN = {n}: root {}, key {} bits, agreement {}", sets.params["n0"], r.rates.key_bits, r.agreement);
    for m in &r.transcript.messages {
        println!("  vertex {} publishes {} bits", m.sender, m.payload.len());
    }
    Ok(())
}
