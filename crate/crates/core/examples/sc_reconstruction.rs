//! Lossless reconstruction of `X` from side information `Y` by SC decoding.
//!
//! The encoder sends `U[H_X|Y]`; the decoder freezes those bits and decides
//! the rest from `Y`. Prints the block error rate as `N` grows.
//!
//! Run: cargo run --release --example sc_reconstruction

use polar_skg::metrics::empirical_error_rate;
use polar_skg::polar_core::{extract, polar_transform};
use polar_skg::polarization::{construct, BuildOptions, Construction, ModelTag};
use polar_skg::sc_codec::{sc_decode, side_symbols, FrozenMap};
use polar_skg::sources::{joint_pmf, sample_block, JointSourceSpec, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> polar_skg::Result<()> {
    let spec = JointSourceSpec::DbmsChain { p_x: 0.5, p: 0.05, q: 0.2, z_present: false };
    let model = joint_pmf(&spec)?.pair_model(Var::Terminal(1), &[Var::Terminal(2)])?;
    println!("{:>6} {:>8} {:>10} {:>22}", "N", "|H_X|Y|", "P_e", "95% CI");
    for n in [64, 256, 1024] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let method = Construction::MonteCarlo { samples: 20_000 };
        let sets = construct(ModelTag::Model1, &spec, None, n, method, &BuildOptions::default(), &mut rng)?;
        let h = sets.set("H_X|Y")?.clone();
        let er = empirical_error_rate(400, |t| {
            let mut rng = ChaCha8Rng::seed_from_u64(1_000_000 + t as u64);
            let s = sample_block(&spec, n, &mut rng).expect("valid spec");
            let u = polar_transform(s.terminal(1));
            let frozen = FrozenMap::new(h.clone(), extract(&u, &h).unwrap()).unwrap();
            sc_decode(&side_symbols(&[s.terminal(2)], n), &frozen, &model).unwrap() != u
        });
        println!("{n:>6} {:>8} {:>10.4} [{:.4}, {:.4}]", h.len(), er.rate, er.ci_low, er.ci_high);
    }
    Ok(())
}
