//! Storage formats, reports, and parallel drivers for `facesig-core`.
//!
//! This crate owns everything that touches the OS: the binary signature file
//! format, plain-text manifests and accuracy tables, TOML configs, CSV
//! report emission, and the rayon-backed batch identification path. The
//! `facesig` binary wires these into subcommands.

pub mod config;
pub mod error;
pub mod format;
pub mod manifest;
pub mod parallel;
pub mod report;

pub use error::{CliError, Result, StorageError};
pub use format::{read_signature, write_signature};
