//! File formats, cross-validation and the command line around `irseg-core`.
//!
//! * [`pgm`]: 16-bit frames, 8-bit masks and posterior maps.
//! * [`manifest`]: CSV dataset manifests and dataset loading.
//! * [`config`]: TOML run configuration.
//! * [`modelio`]: versioned JSON model and ensemble files.
//! * [`cv`]: leave-one-out cross-validation.
//! * [`bench`]: per-frame latency.
//! * [`cli`]: the `irseg` command implementations.

pub mod atomic;
pub mod bench;
pub mod cli;
pub mod config;
pub mod cv;
pub mod data;
pub mod error;
pub mod manifest;
pub mod modelio;
pub mod pgm;
pub mod segment;
pub mod synthio;

pub use error::{Error, ExitKind, Result};

/// Version tag carried by every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;
