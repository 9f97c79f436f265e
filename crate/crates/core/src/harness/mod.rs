//! Experiment configuration, rng streams and the CLI commands.
//!
//! Every random draw of a run comes from a stream keyed by
//! `(master seed, role, block, trial)`: the four values are laid out as
//! little-endian `u64`s in the 32-byte ChaCha8 seed. Streams never overlap
//! across roles, so reordering or parallelizing trials leaves outputs
//! unchanged.

mod commands;

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::polarization::{BuildOptions, Construction, ModelTag, Thresholds};
use crate::sources::{JointSourceSpec, TestChannel};

pub use commands::*;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "POLAR_SKG_OUT_DIR";
/// First line of every CSV the harness writes.
pub const CSV_HEADER_COMMENT: &str = "# polar-skg run csv v1";

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;
pub const EXIT_OTHER: i32 = 1;

/// Process exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::Structural(_) | Error::Json(_) => EXIT_VALIDATION,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_OTHER,
    }
}

/// Who consumes a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Construct = 1,
    Source = 2,
    Secret = 3,
    Shared = 4,
    Encoder = 5,
}

/// The rng for `(master, role, block, trial)`.
pub fn stream(master: u64, role: Role, block: u64, trial: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    for (k, v) in [master, role as u64, block, trial].into_iter().enumerate() {
        seed[8 * k..8 * k + 8].copy_from_slice(&v.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// How secrecy is measured by `run`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecrecyMode {
    /// Exact when the enumeration fits, plug-in otherwise.
    #[default]
    Auto,
    Exact,
    PlugIn,
    Off,
}

fn one() -> usize {
    1
}

fn exact() -> Construction {
    Construction::Exact
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelTag,
    pub source: JointSourceSpec,
    #[serde(default)]
    pub channel: Option<TestChannel>,
    pub n: usize,
    #[serde(default = "one")]
    pub k: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub model4_root: Option<usize>,
    #[serde(default = "exact")]
    pub construction: Construction,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub secrecy: SecrecyMode,
    /// Index-set file to load (`run`, `oracle`) or write (`construct`).
    #[serde(default)]
    pub sets: Option<PathBuf>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub dump_transcript: bool,
}

impl ExperimentConfig {
    pub fn new(model: ModelTag, source: JointSourceSpec, n: usize) -> Self {
        ExperimentConfig {
            model,
            source,
            channel: None,
            n,
            k: 1,
            thresholds: Thresholds::default(),
            model4_root: None,
            construction: Construction::Exact,
            trials: 1,
            seed: 0,
            secrecy: SecrecyMode::Auto,
            sets: None,
            out_dir: None,
            dump_transcript: false,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(invalid(format!("N = {} is not a power of two ≥ 2", self.n)));
        }
        if self.k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if matches!(self.model, ModelTag::Model3Star | ModelTag::Model4) && self.k != 1 {
            return Err(invalid(format!("{} runs a single block; k must be 1", self.model)));
        }
        if let Construction::MonteCarlo { samples } = self.construction {
            if samples == 0 {
                return Err(invalid("Monte-Carlo construction needs samples ≥ 1"));
            }
        }
        if self.model.uses_test_channel() && self.channel.is_none() {
            return Err(invalid(format!("{} needs a test channel", self.model)));
        }
        if let Some(c) = &self.channel {
            c.validate()?;
        }
        self.thresholds.validate()?;
        self.source.validate()
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            thresholds: self.thresholds,
            model4_root: self.model4_root,
        }
    }

    /// The configured directory, else `$POLAR_SKG_OUT_DIR`, else `.`.
    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    /// File stem shared by a run's outputs.
    pub fn stem(&self) -> String {
        format!("{}-n{}-k{}-seed{}", self.model, self.n, self.k, self.seed)
    }
}
