//! Polarized conditional entropies and the index sets built from them.
//!
//! Computes `H(U^i | U^{<i}, Y^{1:N})` exactly and by genie-aided Monte
//! Carlo for a binary symmetric pair, then thresholds them into the model-1
//! sets.
//!
//! Run: cargo run --release --example index_construction

use polar_skg::polarization::{
    construct, exact_index_stats, mc_index_stats, BuildOptions, ConditioningContext, Construction, ModelTag,
};
use polar_skg::sources::{joint_pmf, JointSourceSpec, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> polar_skg::Result<()> {
    let spec = JointSourceSpec::DbmsChain { p_x: 0.5, p: 0.11, q: 0.2, z_present: true };
    let pmf = joint_pmf(&spec)?;
    let ctx = ConditioningContext::new(Var::Terminal(1), &[Var::Terminal(2)]);
    let n = 8;
    let exact = exact_index_stats(&pmf, n, &ctx)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mc = mc_index_stats(&pmf, n, &ctx, 100_000, &mut rng)?;

    println!("{:>3} {:>10} {:>10} {:>10}", "i", "h exact", "h mc", "Z exact");
    for i in 0..n {
        println!("{:>3} {:>10.5} {:>10.5} {:>10.5}", i + 1, exact.h_cond[i], mc.h_cond[i], exact.z[i]);
    }
    let total: f64 = exact.h_cond.iter().sum();
    println!("Σ h = {total:.9}, N·H(X|Y) = {:.9}", n as f64 * pmf.conditional_entropy(&[Var::Terminal(1)], &[Var::Terminal(2)])?);

    let sets = construct(ModelTag::Model1, &spec, None, n, Construction::Exact, &BuildOptions::default(), &mut rng)?;
    println!("\nδ_N = {:.4}", sets.delta_h);
    for (name, s) in &sets.sets {
        println!("{name:>6}: {:?}", s.indices());
    }
    Ok(())
}
