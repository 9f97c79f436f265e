use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use polar_skg::harness::{
    cmd_capacity, cmd_construct, cmd_oracle, cmd_replay, cmd_run, cmd_sweep, exit_code, ExperimentConfig,
    SecrecyMode, EXIT_INVARIANT, EXIT_OTHER, EXIT_VALIDATION, OUT_DIR_ENV,
};
use polar_skg::polarization::{Construction, ModelTag};
use polar_skg::sources::{JointSourceSpec, TestChannel};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "polar-skg", version, about = "Polar-code secret-key generation experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build index sets and write them to a JSON file.
    Construct(Common),
    /// Simulate protocol runs; `--n 256,512` sweeps block lengths.
    Run(Common),
    /// Closed-form reference rates for the configured source.
    Capacity(Common),
    /// Exact verification suite; exits 4 if any invariant fails.
    Oracle(Common),
    /// Re-execute a dumped trial and compare transcripts and keys.
    Replay {
        file: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum SecrecyArg {
    Auto,
    Exact,
    PlugIn,
    Off,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelTag>,
    /// Source spec as inline JSON or a path to a JSON file.
    #[arg(long)]
    source: Option<String>,
    /// `identity`, `bsc:<beta>`, or channel JSON.
    #[arg(long)]
    channel: Option<String>,
    /// Block length; a comma list sweeps (`run` only).
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    delta_v: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    secrecy: Option<SecrecyArg>,
    #[arg(long)]
    model4_root: Option<usize>,
    #[arg(long)]
    sets: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    #[arg(long)]
    dump_transcript: bool,
}

fn parse_model(s: &str) -> Result<ModelTag, String> {
    s.parse::<ModelTag>().map_err(|e| e.to_string())
}

fn json_or_file<T: serde::de::DeserializeOwned>(s: &str) -> anyhow::Result<T> {
    let text = if s.trim_start().starts_with('{') {
        s.to_string()
    } else {
        std::fs::read_to_string(s).with_context(|| format!("reading {s}"))?
    };
    Ok(serde_json::from_str(&text)?)
}

fn parse_channel(s: &str) -> anyhow::Result<TestChannel> {
    if s == "identity" {
        return Ok(TestChannel::Identity);
    }
    if let Some(b) = s.strip_prefix("bsc:") {
        return Ok(TestChannel::Bsc { beta: b.parse()? });
    }
    json_or_file(s)
}

impl Common {
    fn config(&self) -> anyhow::Result<(ExperimentConfig, Vec<usize>)> {
        let mut cfg = match &self.config {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
            None => {
                let (Some(model), Some(source), Some(&n)) = (self.model, &self.source, self.n.first()) else {
                    bail!("--model, --source and --n are required without --config");
                };
                ExperimentConfig::new(model, json_or_file::<JointSourceSpec>(source)?, n)
            }
        };
        if let Some(m) = self.model {
            cfg.model = m;
        }
        if let Some(s) = &self.source {
            cfg.source = json_or_file(s)?;
        }
        if let Some(c) = &self.channel {
            cfg.channel = Some(parse_channel(c)?);
        }
        if let Some(&n) = self.n.first() {
            cfg.n = n;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(b) = self.beta {
            cfg.thresholds.beta = b;
        }
        if self.delta.is_some() {
            cfg.thresholds.delta = self.delta;
        }
        if self.delta_v.is_some() {
            cfg.thresholds.delta_v = self.delta_v;
        }
        match (self.method, self.samples) {
            (Some(MethodArg::Exact), _) => cfg.construction = Construction::Exact,
            (Some(MethodArg::Mc), s) => {
                let samples = s.or(match cfg.construction {
                    Construction::MonteCarlo { samples } => Some(samples),
                    Construction::Exact => None,
                });
                cfg.construction = Construction::MonteCarlo {
                    samples: samples.unwrap_or(100_000),
                };
            }
            (None, Some(samples)) => cfg.construction = Construction::MonteCarlo { samples },
            (None, None) => {}
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.secrecy {
            cfg.secrecy = match s {
                SecrecyArg::Auto => SecrecyMode::Auto,
                SecrecyArg::Exact => SecrecyMode::Exact,
                SecrecyArg::PlugIn => SecrecyMode::PlugIn,
                SecrecyArg::Off => SecrecyMode::Off,
            };
        }
        if self.model4_root.is_some() {
            cfg.model4_root = self.model4_root;
        }
        if self.sets.is_some() {
            cfg.sets = self.sets.clone();
        }
        if self.out.is_some() {
            cfg.out_dir = self.out.clone();
        }
        cfg.dump_transcript |= self.dump_transcript;
        let ns = if self.n.is_empty() { vec![cfg.n] } else { self.n.clone() };
        Ok((cfg, ns))
    }
}

fn print<T: Serialize>(v: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.cmd {
        Cmd::Construct(c) => print(&cmd_construct(&c.config()?.0)?)?,
        Cmd::Run(c) => {
            let (cfg, ns) = c.config()?;
            if ns.len() > 1 {
                let (summaries, csv) = cmd_sweep(&cfg, &ns)?;
                print(&summaries.iter().map(|s| &s.row).collect::<Vec<_>>())?;
                eprintln!("sweep csv: {}", csv.display());
            } else {
                let s = cmd_run(&cfg)?;
                if let Some(w) = &s.row.warning {
                    eprintln!("warning: {w}");
                }
                print(&s.row)?;
            }
        }
        Cmd::Capacity(c) => print(&cmd_capacity(&c.config()?.0)?)?,
        Cmd::Oracle(c) => {
            let r = cmd_oracle(&c.config()?.0)?;
            print(&r)?;
            if !r.passed() {
                for f in r.failures() {
                    eprintln!("FAIL {}: {}", f.name, f.detail);
                }
                return Ok(EXIT_INVARIANT);
            }
        }
        Cmd::Replay { file } => {
            let r = cmd_replay(&file)?;
            print(&r)?;
            if !r.identical() {
                return Ok(EXIT_INVARIANT);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<polar_skg::Error>() {
                Some(le) => exit_code(le),
                None if e.is::<serde_json::Error>() => EXIT_VALIDATION,
                None => EXIT_OTHER,
            };
            ExitCode::from(code as u8)
        }
    }
}
