//! Biometric key binding: generated secret and zero-leakage helper data.
//!
//! Enrollment quantizes the biometric `X`; helper data lets a noisy
//! re-measurement `Y` regenerate the secret. The zero-leakage variant pads
//! all helper data with a pre-shared key, so `I(S X; M) = 0` exactly.
//!
//! Run: cargo run --release --example biometric

use polar_skg::metrics::exact_quantized;
use polar_skg::polarization::{construct, BuildOptions, Construction, ModelTag};
use polar_skg::protocols::{biometric_generated_run, biometric_zero_leakage_run, provision_seed, secret_sizes};
use polar_skg::sources::{JointSourceSpec, TestChannel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> polar_skg::Result<()> {
    let spec = JointSourceSpec::DbmsChain { p_x: 0.5, p: 0.03, q: 0.5, z_present: false };
    let ch = TestChannel::Bsc { beta: 0.08 };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let opts = BuildOptions::default();

    let sets = construct(ModelTag::BioZero, &spec, Some(&ch), 4, Construction::Exact, &opts, &mut rng)?;
    let d = exact_quantized(&spec, &ch, &sets, 1, true)?;
    println!("zero leakage, N = 4 exact: I(S X; M) = {:.1e}", d.mi(&["K", "X"], &["M"]));

    let n = 256;
    let mc = Construction::MonteCarlo { samples: 20_000 };
    let sets = construct(ModelTag::BioGen, &spec, Some(&ch), n, mc, &opts, &mut rng)?;
    let k = 2;
    let seed = provision_seed(secret_sizes(&sets, k)?[0], &mut rng);
    let r = biometric_generated_run(&spec, &ch, &sets, k, &seed, &mut rng)?;
    println!("\ngenerated secret, N = {n}: {} key bits, {} helper bits, agreement {}",
        r.rates.key_bits, r.rates.public_bits, r.agreement);

    let sets = construct(ModelTag::BioZero, &spec, Some(&ch), n, mc, &opts, &mut rng)?;
    let pads: Vec<_> = secret_sizes(&sets, k)?.into_iter().map(|l| provision_seed(l, &mut rng)).collect();
    let r = biometric_zero_leakage_run(&spec, &ch, &sets, k, &pads, &mut rng)?;
    println!("zero leakage, N = {n}: {} key bits, {} pad bits, agreement {}",
        r.rates.key_bits, r.rates.seed_bits, r.agreement);
    Ok(())
}
