//! Key generation under a public-rate constraint.
//!
//! Alice quantizes `X` into `Ṽ` with the stochastic SC encoder, then chains
//! like Model 1. The target point comes from the rate-limited capacity of
//! the binary symmetric chain.
//!
//! Run: cargo run --release --example model2_rate_limited

use polar_skg::capacity::{example1_capacity, model2_rate_point};
use polar_skg::polarization::{construct, BuildOptions, Construction, ModelTag};
use polar_skg::protocols::{model2_run, provision_seed, secret_sizes};
use polar_skg::sources::{JointSourceSpec, TestChannel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> polar_skg::Result<()> {
    let (p, q) = (0.05, 0.2);
    let spec = JointSourceSpec::DbmsChain { p_x: 0.5, p, q, z_present: true };
    let ch = TestChannel::Bsc { beta: 0.1 };
    let rp = model2_rate_point(&spec, &ch)?;
    let cap = example1_capacity(p, q, rp.public_rate)?;
    println!("test channel BSC(0.1): key rate {:.4}, public rate {:.4}", rp.key_rate, rp.public_rate);
    println!("capacity at that public rate: {:.4} (β0 = {:.4})", cap.value, cap.aux["beta0"]);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 256;
    let method = Construction::MonteCarlo { samples: 20_000 };
    let sets = construct(ModelTag::Model2, &spec, Some(&ch), n, method, &BuildOptions::default(), &mut rng)?;
    let k = 3;
    let seed = provision_seed(secret_sizes(&sets, k)?[0], &mut rng);
    let r = model2_run(&spec, &ch, &sets, k, &seed, &mut rng)?;
    println!("\nN = {n}, k = {k}: agreement {}", r.agreement);
    println!("key bits {}, public bits {} (R1 = {})", r.rates.key_bits, r.rates.public_bits, r.aux["r1_bits"]);
    println!("quantizer draws per block: {} side-informed, {} from the prior",
        r.aux["side_informed_draws_per_block"], r.aux["prior_draws_per_block"]);
    Ok(())
}
