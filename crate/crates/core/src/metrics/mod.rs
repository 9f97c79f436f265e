//! Reliability, leakage and uniformity measures.
mod bounds;
mod exact;
mod info;
pub use bounds::*;
pub use exact::*;
pub use info::*;
