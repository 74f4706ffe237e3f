//! Core library for patch/attribute face signature matching.
//!
//! A signature couples an occlusion-encoded patch feature matrix with a
//! vector of soft facial attributes. This crate provides the signature data
//! model, the fused matchers (plain, accuracy-weighted, probe-confidence
//! weighted), closed-set gallery identification, rank-k evaluation with
//! per-cell tables and lambda sweeps, nonparametric significance testing,
//! and a deterministic synthetic benchmark generator.
//!
//! The crate is `no_std` (with `alloc`) and performs no IO; file formats and
//! the command-line frontend live in the companion `facesig-cli` crate.
//! Float transcendentals go through `libm`, so every result — including
//! generated benchmarks — is reproducible bit-for-bit across platforms.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod evaluation;
pub mod identification;
pub mod matching;
mod math;
pub mod rng;
pub mod signature;
pub mod stats;
pub mod synth;
pub mod weighting;

pub use error::{Error, Result};
pub use math::sigmoid;

pub use identification::{
    batch_identify, explain_match, identify, Aggregation, AttributeOverlap, Gallery,
    MatcherConfig, RankedEntry, RankedList, Template, WeightMode,
};
pub use matching::{
    attribute_score, cosine, fuse_scores, match_signatures, patch_component_score,
    weighted_attribute_score, weighted_cosine, AttributeSource, FusionConfig, MatcherScheme,
    ScoreBreakdown, DEFAULT_LAMBDA,
};
pub use signature::{
    assemble_signature, attribute_names, validate, AttributeComponent, PatchFeatureComponent,
    PatchLayout, Signature, WeightVector, DEFAULT_ATTRIBUTE_NAMES,
};
pub use weighting::{
    uniform_weights, weights_from_probe_confidence, weights_from_training_accuracy,
    AttributeAccuracyTable, WEIGHT_FLOOR,
};
