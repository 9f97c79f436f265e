//! One encoder, many receivers.
//!
//! The star scheme serves every terminal with one public message sized for
//! the weakest link. The three-terminal chain runs with terminal 2 as the
//! encoder and carries part of each key forward as `K̄`.
//!
//! Run: cargo run --release --example broadcast_star

use polar_skg::capacity::broadcast_capacity;
use polar_skg::metrics::exact_model3_star;
use polar_skg::polarization::{construct, BuildOptions, Construction, ModelTag};
use polar_skg::protocols::{model3_star_run, model3_tri_run, provision_seed, secret_sizes};
use polar_skg::sources::{JointSourceSpec, TreeEdge};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> polar_skg::Result<()> {
    let star = JointSourceSpec::BroadcastStar { p_x1: 0.5, crossovers: vec![0.02, 0.05, 0.08] };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    println!("broadcast capacity {:.4}", broadcast_capacity(&star)?.value);

    let sets = construct(ModelTag::Model3Star, &star, None, 8, Construction::Exact, &BuildOptions::default(), &mut rng)?;
    let d = exact_model3_star(&star, &sets)?;
    println!("N = 8 exact: |K| = {}, I(K; F) = {:.2e}", d.width(&["K"]), d.mi(&["K"], &["M"]));

    let n = 256;
    let mc = Construction::MonteCarlo { samples: 20_000 };
    let sets = construct(ModelTag::Model3Star, &star, None, n, mc, &BuildOptions::default(), &mut rng)?;
    let seed = provision_seed(secret_sizes(&sets, 1)?[0], &mut rng);
    let r = model3_star_run(&star, &sets, &seed, &mut rng)?;
    println!("N = {n}: i_min = {}, key {} bits, receivers agree: {}", sets.params["i_min"], r.rates.key_bits, r.agreement);

    let chain = JointSourceSpec::MarkovTree {
        m: 3,
        edges: vec![TreeEdge { a: 1, b: 2, p: 0.05 }, TreeEdge { a: 2, b: 3, p: 0.02 }],
    };
    let sets = construct(ModelTag::Model3Tri, &chain, None, n, mc, &BuildOptions::default(), &mut rng)?;
    let k = 4;
    let seeds: Vec<_> = secret_sizes(&sets, k)?.into_iter().map(|l| provision_seed(l, &mut rng)).collect();
    let r = model3_tri_run(&chain, &sets, k, &seeds, &mut rng)?;
    println!("\nthree-terminal chain, k = {k}: |K| = {}, |K̄| = {}", sets.set("K")?.len(), sets.set("Kbar")?.len());
    println!("key bits {}, agreement {}", r.rates.key_bits, r.agreement);
    for (b, label, len) in r.transcript.layout() {
        println!("  block {b}: {label:?} {len} bits");
    }
    Ok(())
}
