//! The polar transform `u = x·G_N` on packed bit blocks.
//!
//! Shows that `G_N` is its own inverse, that it is linear over GF(2), and
//! how `extract`/`scatter` move bits between a block and an index set.
//!
//! Run: cargo run --example polar_algebra

use polar_skg::polar_core::{extract, polar_transform, scatter, BitBlock, Bits, IndexSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> polar_skg::Result<()> {
    let x = BitBlock::from_u8s(&[1, 0, 1, 1, 0, 0, 1, 0])?;
    let u = polar_transform(&x);
    println!("x        = {}", x.bits());
    println!("x·G_8    = {}", u.bits());
    println!("x·G_8·G_8 = {}", polar_transform(&u).bits());

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 1 << 14;
    let (a, b) = (BitBlock::random(n, &mut rng), BitBlock::random(n, &mut rng));
    let lhs = polar_transform(&a.xor(&b)?);
    let rhs = polar_transform(&a).xor(&polar_transform(&b))?;
    println!("\nN = {n}: (a⊕b)G == aG⊕bG: {}", lhs == rhs);

    let set = IndexSet::new(8, [2, 5, 7])?;
    let picked = extract(&u, &set)?;
    println!("\nU[{{2,5,7}}] = {picked}");
    let cleared = scatter(&u, &set, &Bits::zeros(3))?;
    println!("cleared    = {}", cleared.bits());
    let restored = scatter(&cleared, &set, &picked)?;
    println!("restored   = {} (equal: {})", restored.bits(), restored == u);
    Ok(())
}
