//! The experiment harness: a config drives construction, trials, metrics
//! and output files, and any dumped trial replays bit for bit.
//!
//! Run: cargo run --release --example experiment_harness

use polar_skg::harness::{cmd_oracle, cmd_replay, cmd_run, ExperimentConfig};
use polar_skg::polarization::ModelTag;
use polar_skg::sources::{JointSourceSpec, TreeEdge};

fn main() -> polar_skg::Result<()> {
    let dir = std::env::temp_dir().join("polar-skg-example");
    let spec = JointSourceSpec::MarkovTree {
        m: 3,
        edges: vec![TreeEdge { a: 1, b: 2, p: 0.1 }, TreeEdge { a: 2, b: 3, p: 0.2 }],
    };
    let mut cfg = ExperimentConfig::new(ModelTag::Model4, spec, 8);
    cfg.trials = 50;
    cfg.seed = 2024;
    cfg.out_dir = Some(dir.clone());
    cfg.dump_transcript = true;

    let s = cmd_run(&cfg)?;
    println!("P_e = {:.3} [{:.3}, {:.3}]", s.row.p_e, s.row.ci_low, s.row.ci_high);
    println!("leakage {:?} bits ({:?})", s.row.leakage_bits, s.row.secrecy_method);
    for f in &s.files[..2] {
        println!("wrote {}", f.display());
    }

    let replay = cmd_replay(&dir.join(format!("{}.trial7.replay.json", cfg.stem())))?;
    println!("replay of trial 7 identical: {}", replay.identical());

    cfg.n = 4;
    let oracle = cmd_oracle(&cfg)?;
    for c in &oracle.checks {
        println!("{:?} {} {}", c.status, c.name, c.detail);
    }
    Ok(())
}
