//! Error types for the storage and CLI layer, with stable exit codes.
//!
//! Exit code map (also documented in the README):
//!   2  usage errors (emitted by the argument parser)
//!   3  I/O failures (missing or unreadable/unwritable files)
//!   4  format errors (bad magic, unsupported version, truncation, parse)
//!   5  validation errors (invariant violations, inconsistent manifests)
//!   6  computation errors (unscorable inputs, degenerate statistics)

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

/// Failures while reading or writing signature files.
#[derive(Debug)]
pub enum StorageError {
    Io {
        path: PathBuf,
        source: io::Error,
    },
    /// The file does not start with the signature magic.
    BadMagic {
        path: PathBuf,
        found: [u8; 4],
    },
    /// Major format version not understood by this reader.
    UnsupportedVersion {
        path: PathBuf,
        version: u16,
    },
    /// The file ended before the declared payload was complete.
    Truncated {
        path: PathBuf,
    },
    /// Extra bytes after the declared payload.
    TrailingBytes {
        path: PathBuf,
        extra: usize,
    },
    /// A metadata string was not valid UTF-8.
    BadUtf8 {
        path: PathBuf,
        field: &'static str,
    },
    /// Stored derived attribute values disagree with recomputation.
    DerivedMismatch {
        path: PathBuf,
        index: usize,
        stored: f64,
        recomputed: f64,
    },
    /// The decoded signature violates model invariants.
    Invalid {
        path: PathBuf,
        violations: Vec<String>,
    },
    /// Signature construction failed while decoding.
    Model {
        path: PathBuf,
        source: facesig_core::Error,
    },
}

impl StorageError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        StorageError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl fmt::Display for StorageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StorageError::Io { path, source } => {
                write!(f, "{}: {}", path.display(), source)
            }
            StorageError::BadMagic { path, found } => write!(
                f,
                "{}: not a signature file (magic {:02x?})",
                path.display(),
                found
            ),
            StorageError::UnsupportedVersion { path, version } => write!(
                f,
                "{}: unsupported format version {}",
                path.display(),
                version
            ),
            StorageError::Truncated { path } => {
                write!(f, "{}: file truncated", path.display())
            }
            StorageError::TrailingBytes { path, extra } => write!(
                f,
                "{}: {} unexpected trailing bytes",
                path.display(),
                extra
            ),
            StorageError::BadUtf8 { path, field } => {
                write!(f, "{}: {} is not valid UTF-8", path.display(), field)
            }
            StorageError::DerivedMismatch {
                path,
                index,
                stored,
                recomputed,
            } => write!(
                f,
                "{}: stored probability {index} ({stored}) disagrees with recomputed value ({recomputed})",
                path.display()
            ),
            StorageError::Invalid { path, violations } => write!(
                f,
                "{}: invalid signature: {}",
                path.display(),
                violations.join("; ")
            ),
            StorageError::Model { path, source } => {
                write!(f, "{}: {}", path.display(), source)
            }
        }
    }
}

impl std::error::Error for StorageError {}

/// Top-level CLI error, bucketed by exit code.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Format(String),
    Validation(String),
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 3,
            CliError::Format(_) => 4,
            CliError::Validation(_) => 5,
            CliError::Compute(_) => 6,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Format(_) => "format",
            CliError::Validation(_) => "validation",
            CliError::Compute(_) => "compute",
        }
    }

    pub fn io_at(path: &Path, source: io::Error) -> Self {
        CliError::Io(format!("{}: {}", path.display(), source))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (CliError::Io(msg)
        | CliError::Format(msg)
        | CliError::Validation(msg)
        | CliError::Compute(msg)) = self;
        write!(f, "{msg}")
    }
}

impl std::error::Error for CliError {}

impl From<StorageError> for CliError {
    fn from(e: StorageError) -> Self {
        match &e {
            StorageError::Io { .. } => CliError::Io(e.to_string()),
            StorageError::BadMagic { .. }
            | StorageError::UnsupportedVersion { .. }
            | StorageError::Truncated { .. }
            | StorageError::TrailingBytes { .. }
            | StorageError::BadUtf8 { .. } => CliError::Format(e.to_string()),
            StorageError::DerivedMismatch { .. }
            | StorageError::Invalid { .. }
            | StorageError::Model { .. } => CliError::Validation(e.to_string()),
        }
    }
}

impl From<facesig_core::Error> for CliError {
    fn from(e: facesig_core::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
