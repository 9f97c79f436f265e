//! The stochastic SC quantizer behind the rate-limited models.
//!
//! At `N = 8` every law is enumerated: the divergence and L1 distance
//! between the ideal `p(x, v)` and the encoder's `p̃(x, v)`, Bob's failure
//! probability under each, and the leakage of `Ṽ[V_U|Z]` to Eve.
//!
//! Run: cargo run --release --example stochastic_quantizer

use polar_skg::metrics::*;
use polar_skg::polarization::{construct, BuildOptions, Construction, ModelTag};
use polar_skg::protocols::QuantizedPlan;
use polar_skg::sources::{JointSourceSpec, TestChannel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> polar_skg::Result<()> {
    let spec = JointSourceSpec::DbmsChain { p_x: 0.5, p: 0.05, q: 0.2, z_present: true };
    let ch = TestChannel::Bsc { beta: 0.1 };
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let sets = construct(ModelTag::Model2, &spec, Some(&ch), n, Construction::Exact, &BuildOptions::default(), &mut rng)?;
    let plan = QuantizedPlan::new(&spec, &ch, &sets)?;
    let tables = QuantizerTables::new(&spec, &ch, &plan)?;
    let (p, q) = tables.joint_pair();
    let d = sets.delta_h;
    println!("|V_U|X| = {}, |H_U| = {}, δ_N = {d:.4}", plan.r1_len(), plan.encoder.h_u.len());
    println!("D(p‖p̃) = {:.6} bits (bound Nδ = {:.4})", kl_divergence(&p, &q)?, encoder_divergence_bound(n, d));
    println!("V(p,p̃) = {:.6} (bound {:.4})", variational_distance(&p, &q)?, encoder_distance_bound(n, d));
    let f = quantizer_failure(&spec, &ch, &plan, &tables)?;
    println!("P_fail encoder = {:.6}, ideal = {:.6}, ½V + ideal = {:.6}", f.p_fail_encoder, f.p_fail_ideal, f.bound());
    let leak = quantizer_secrecy(&spec, &plan, &tables, sets.set("V_U|Z")?)?;
    println!("I(Ṽ[V_U|Z]; Z) = {leak:.6} (δ3 = {:.4})", delta3(n, d));
    Ok(())
}
