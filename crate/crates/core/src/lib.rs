//! Polar-code secret-key generation for multiterminal memoryless sources.
//!
//! The crate is organized bottom-up:
//!
//! - [`polar_core`]: packed GF(2) blocks, 1-based index sets, `x·G_N`.
//! - [`sources`]: joint source specifications, pmf tables and samplers.
//! - [`polarization`]: per-index statistics and the per-model index sets.
//! - [`sc_codec`]: SC decoding and the stochastic SC quantizer.
//! - [`protocols`]: the chained key-generation protocols with transcripts.
//! - [`metrics`]: exact and empirical reliability, leakage and uniformity.
//! - [`capacity`]: closed-form reference rates.
//! - [`harness`]: experiment configuration, rng streams and CLI commands.
//!
//! Runnable walkthroughs live in `examples/`, one per capability.

pub mod capacity;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod polar_core;
pub mod polarization;
pub mod protocols;
pub mod sc_codec;
pub mod sources;

pub use error::{Error, Result};
