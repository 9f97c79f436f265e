//! Two-terminal key generation with an unlimited public channel.
//!
//! Runs a chained Model 1 protocol over `k` blocks, prints the transcript
//! layout and rates, then computes exact per-block uniformity and leakage
//! at `N = 8`.
//!
//! Run: cargo run --release --example model1_chain

use polar_skg::metrics::exact_model1_per_block;
use polar_skg::polarization::{construct, BuildOptions, Construction, ModelTag};
use polar_skg::protocols::{model1_run, provision_seed, secret_sizes};
use polar_skg::sources::JointSourceSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> polar_skg::Result<()> {
    let spec = JointSourceSpec::DbmsChain { p_x: 0.5, p: 0.02, q: 0.25, z_present: true };
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let n = 256;
    let method = Construction::MonteCarlo { samples: 20_000 };
    let sets = construct(ModelTag::Model1, &spec, None, n, method, &BuildOptions::default(), &mut rng)?;
    let k = 4;
    let seed = provision_seed(secret_sizes(&sets, k)?[0], &mut rng);
    let r = model1_run(&spec, &sets, k, &seed, &mut rng)?;
    println!("N = {n}, k = {k}: agreement {}, key {} bits", r.agreement, r.rates.key_bits);
    println!("key rate {:.4}, seed rate {:.4}, public rate {:.4}", r.rates.key_rate, r.rates.seed_rate, r.rates.public_rate);
    for (b, label, len) in r.transcript.layout() {
        println!("  block {b}: {label:?} {len} bits");
    }

    let n = 8;
    let sets = construct(ModelTag::Model1, &spec, None, n, Construction::Exact, &BuildOptions::default(), &mut rng)?;
    let d = exact_model1_per_block(&spec, &sets, 1)?;
    let nd = n as f64 * sets.delta_h;
    println!("\nexact, N = 8, δ_N = {:.4}", sets.delta_h);
    println!("|K|+|K̃| − H(K K̃) = {:.3e} (≤ {nd:.3})", d.width(&["K1", "Kt1"]) as f64 - d.entropy(&["K1", "Kt1"]));
    println!("I(K K̃; M Z)       = {:.3e} (≤ {:.3})", d.mi(&["K1", "Kt1"], &["M1", "Z1"]), 2.0 * nd);
    Ok(())
}
