use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

/// Crate-wide error type.
///
/// Scoring errors carry provenance: `PatchScore` and `AttributeScore` wrap the
/// underlying failure so callers can tell which signature component broke.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A required identifier (subject id, image id, ...) was empty.
    EmptyId(&'static str),
    /// A vector or matrix had the wrong number of entries.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    /// Two vectors that must be compared had different lengths.
    LengthMismatch { left: usize, right: usize },
    /// An input contained NaN or infinity.
    NonFinite(&'static str),
    /// A vector that must be scored had zero Euclidean norm.
    ZeroNorm(&'static str),
    /// A weighted norm vanished, so the weighted cosine is undefined.
    ZeroWeightedNorm(&'static str),
    /// A weight was negative.
    NegativeWeight { index: usize, value: f64 },
    /// A count or scalar that must be positive was not.
    NotPositive(&'static str),
    /// A value that must lie in [0, 1] did not.
    OutOfRange { what: &'static str, value: f64 },
    /// Gallery and probe signatures use different patch layouts.
    LayoutMismatch { gallery: String, probe: String },
    /// Gallery and probe attribute vectors have different dimensions.
    AttributeDimMismatch { gallery: usize, probe: usize },
    /// No patch is visible in both signatures; the patch score is undefined.
    NoComparablePatches,
    /// The patch component failed to score; `patch` is the offending column.
    PatchScore { patch: usize, source: Box<Error> },
    /// The attribute component failed to score.
    AttributeScore(Box<Error>),
    /// A weighted matcher was requested without a weight vector.
    MissingWeights,
    /// The accuracy table has no entry for the named attribute.
    MissingAttribute(String),
    /// The accuracy table lists the same attribute twice.
    DuplicateAttribute(String),
    /// A per-attribute accuracy was outside [0, 1].
    AccuracyOutOfRange { name: String, value: f64 },
    /// Failure while matching a probe against one gallery subject.
    Subject { subject_id: String, source: Box<Error> },
    /// The gallery contains no templates.
    EmptyGallery,
    /// Duplicate subject id while building a gallery.
    DuplicateSubject(String),
    /// Every gallery subject was skipped; no ranking exists.
    AllSubjectsSkipped,
    /// A template must contain at least one signature.
    EmptyTemplate(String),
    /// Template members disagree on subject id or are not mutually comparable.
    InconsistentTemplate(String),
    /// A probe's true subject is not enrolled in the gallery.
    UnknownSubject { probe: String, subject: String },
    /// No truth entry exists for the named probe.
    MissingTruth(String),
    /// A probe has no cell label but per-cell evaluation was requested.
    UnlabeledProbe(String),
    /// The probe set is empty.
    EmptyProbeSet,
    /// The evaluation split list is empty.
    EmptySplits,
    /// The lambda grid is empty.
    EmptyGrid,
    /// Too few methods or datasets for the requested statistic.
    TooFewMethods { needed: usize, actual: usize },
    /// The Iman-Davenport denominator is not positive.
    DegenerateStatistic,
    /// Row ranks do not sum to k(k+1)/2.
    InvalidRankRow { row: usize },
    /// A generator or matcher configuration is unusable.
    InvalidConfig(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyId(what) => write!(f, "{what} must not be empty"),
            Error::DimensionMismatch {
                what,
                expected,
                actual,
            } => write!(f, "{what}: expected {expected} entries, got {actual}"),
            Error::LengthMismatch { left, right } => {
                write!(f, "vector length mismatch: {left} vs {right}")
            }
            Error::NonFinite(what) => write!(f, "{what} contains a non-finite value"),
            Error::ZeroNorm(what) => write!(f, "{what} has zero norm; cosine is undefined"),
            Error::ZeroWeightedNorm(side) => {
                write!(f, "weighted norm of {side} vector is zero")
            }
            Error::NegativeWeight { index, value } => {
                write!(f, "weight {index} is negative ({value})")
            }
            Error::NotPositive(what) => write!(f, "{what} must be positive"),
            Error::OutOfRange { what, value } => {
                write!(f, "{what} must lie in [0, 1], got {value}")
            }
            Error::LayoutMismatch { gallery, probe } => {
                write!(f, "patch layout mismatch: gallery {gallery}, probe {probe}")
            }
            Error::AttributeDimMismatch { gallery, probe } => write!(
                f,
                "attribute dimension mismatch: gallery {gallery}, probe {probe}"
            ),
            Error::NoComparablePatches => write!(f, "no comparable patches"),
            Error::PatchScore { patch, source } => {
                write!(f, "patch component failed at patch {patch}: {source}")
            }
            Error::AttributeScore(source) => {
                write!(f, "attribute component failed: {source}")
            }
            Error::MissingWeights => write!(f, "weighted matcher requires a weight vector"),
            Error::MissingAttribute(name) => {
                write!(f, "accuracy table has no entry for attribute '{name}'")
            }
            Error::DuplicateAttribute(name) => {
                write!(f, "accuracy table lists attribute '{name}' twice")
            }
            Error::AccuracyOutOfRange { name, value } => {
                write!(f, "accuracy for '{name}' must lie in [0, 1], got {value}")
            }
            Error::Subject { subject_id, source } => {
                write!(f, "matching against subject '{subject_id}' failed: {source}")
            }
            Error::EmptyGallery => write!(f, "gallery contains no templates"),
            Error::DuplicateSubject(id) => write!(f, "duplicate gallery subject '{id}'"),
            Error::AllSubjectsSkipped => {
                write!(f, "every gallery subject was skipped; no ranking exists")
            }
            Error::EmptyTemplate(id) => write!(f, "template '{id}' has no members"),
            Error::InconsistentTemplate(id) => {
                write!(f, "template '{id}' members are inconsistent")
            }
            Error::UnknownSubject { probe, subject } => write!(
                f,
                "probe '{probe}' has true subject '{subject}' not enrolled in the gallery"
            ),
            Error::MissingTruth(probe) => write!(f, "no truth entry for probe '{probe}'"),
            Error::UnlabeledProbe(probe) => write!(f, "probe '{probe}' has no cell label"),
            Error::EmptyProbeSet => write!(f, "probe set is empty"),
            Error::EmptySplits => write!(f, "no evaluation splits supplied"),
            Error::EmptyGrid => write!(f, "lambda grid is empty"),
            Error::TooFewMethods { needed, actual } => {
                write!(f, "need at least {needed} methods, got {actual}")
            }
            Error::DegenerateStatistic => {
                write!(f, "degenerate statistic: N(k-1) does not exceed chi-squared")
            }
            Error::InvalidRankRow { row } => {
                write!(f, "rank row {row} does not sum to k(k+1)/2")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
