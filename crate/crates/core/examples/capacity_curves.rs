//! Reference rates: the rate-limited capacity curve of the binary
//! symmetric chain, and its continuity where the rate limit stops binding.
//!
//! Run: cargo run --example capacity_curves

use polar_skg::capacity::{cwsk_unlimited, example1_capacity, hb};
use polar_skg::sources::JointSourceSpec;

fn main() -> polar_skg::Result<()> {
    let (p, q) = (0.1, 0.1);
    let unlimited = cwsk_unlimited(&JointSourceSpec::DbmsChain { p_x: 0.5, p, q, z_present: true })?;
    println!("p = {p}, q = {q}: unlimited rate {:.5}", unlimited.value);
    println!("{:>6} {:>10} {:>8}", "R_p", "C(R_p)", "β0");
    for i in 0..=10 {
        let r = hb(p)? * i as f64 / 10.0;
        let c = example1_capacity(p, q, r)?;
        println!("{r:>6.3} {:>10.5} {:>8.4}", c.value, c.aux["beta0"]);
    }
    let at = example1_capacity(p, q, hb(p)? - 1e-9)?.value;
    println!("\njump at R_p = H_b(p): {:.2e}", (at - unlimited.value).abs());
    Ok(())
}
