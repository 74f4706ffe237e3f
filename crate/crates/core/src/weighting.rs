//! Weight vector construction for the three matcher variants: uniform
//! (plain matcher), per-attribute training accuracy, and per-probe
//! confidence.
//!
//! Derived weights are floored at [`WEIGHT_FLOOR`] so weighted norms can
//! never vanish: an attribute may be nearly excluded but never zeroed.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::signature::{AttributeComponent, WeightVector};

/// Minimum derived weight.
pub const WEIGHT_FLOOR: f64 = 0.01;

/// Per-attribute training accuracy, keyed by attribute name.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeAccuracyTable {
    entries: Vec<(String, f64)>,
}

impl AttributeAccuracyTable {
    /// Build a table from (name, accuracy) rows. Names must be unique and
    /// accuracies must lie in [0, 1].
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        for (i, (name, value)) in entries.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::EmptyId("attribute name"));
            }
            if !value.is_finite() || !(0.0..=1.0).contains(value) {
                return Err(Error::AccuracyOutOfRange {
                    name: name.clone(),
                    value: *value,
                });
            }
            if entries[..i].iter().any(|(prev, _)| prev == name) {
                return Err(Error::DuplicateAttribute(name.clone()));
            }
        }
        Ok(AttributeAccuracyTable { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

/// All-ones weights: every attribute treated equally.
pub fn uniform_weights(d: usize) -> Result<WeightVector> {
    WeightVector::uniform(d)
}

/// Weights from per-attribute training accuracy, in the order given by
/// `attribute_names`. Each weight is the accuracy floored at
/// [`WEIGHT_FLOOR`]; a missing name is an error.
pub fn weights_from_training_accuracy(
    table: &AttributeAccuracyTable,
    attribute_names: &[String],
) -> Result<WeightVector> {
    let mut weights = Vec::with_capacity(attribute_names.len());
    for name in attribute_names {
        let accuracy = table
            .get(name)
            .ok_or_else(|| Error::MissingAttribute(name.to_string()))?;
        weights.push(accuracy.max(WEIGHT_FLOOR));
    }
    WeightVector::new(weights)
}

/// Per-probe confidence weights: `w_i = 2 |p_i - 0.5|`, floored at
/// [`WEIGHT_FLOOR`]. An attribute at the decision boundary is nearly
/// excluded; a certain one gets full weight. Recomputed for every probe.
pub fn weights_from_probe_confidence(probe: &AttributeComponent) -> Result<WeightVector> {
    let weights: Vec<f64> = probe
        .probabilities()
        .iter()
        .map(|&p| (2.0 * math::abs(p - 0.5)).max(WEIGHT_FLOOR))
        .collect();
    WeightVector::new(weights)
}
