//! Closed-set identification: enroll galleries of templates, score probes,
//! and produce ranked candidate lists.
//!
//! A template groups one or more signatures of a single subject; matching
//! two templates aggregates `match_signatures` over all member pairs (max by
//! default). Scoring is pure, so batch identification may run probes in any
//! order or in parallel and still produce output identical to a serial run.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matching::{match_signatures, FusionConfig, MatcherScheme, ScoreBreakdown};
use crate::signature::Signature;
use crate::weighting::{
    weights_from_probe_confidence, weights_from_training_accuracy, AttributeAccuracyTable,
};

/// How the per-attribute weight vector is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// Plain matcher: all attributes weighted equally.
    #[default]
    Uniform,
    /// Weights from per-attribute training accuracy (requires a table).
    Trained,
    /// Weights from each probe image's own attribute confidence.
    Probe,
}

impl WeightMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            WeightMode::Uniform => "uniform",
            WeightMode::Trained => "trained",
            WeightMode::Probe => "probe",
        }
    }
}

/// Template score aggregation over member pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Max,
    Mean,
}

impl Aggregation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Aggregation::Max => "max",
            Aggregation::Mean => "mean",
        }
    }
}

/// Full matcher description: fusion parameters, weight source, and template
/// aggregation. Owns its accuracy table so configurations can be cloned and
/// shipped across threads freely.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatcherConfig {
    pub fusion: FusionConfig,
    pub weight_mode: WeightMode,
    pub aggregation: Aggregation,
    pub accuracy_table: Option<AttributeAccuracyTable>,
}

impl MatcherConfig {
    /// Plain matcher at the given fusion weight.
    pub fn plain(lambda: f64) -> Result<Self> {
        Ok(MatcherConfig {
            fusion: FusionConfig::new(lambda)?,
            ..MatcherConfig::default()
        })
    }

    /// Attribute-weighted matcher driven by training accuracies.
    pub fn trained(lambda: f64, table: AttributeAccuracyTable) -> Result<Self> {
        Ok(MatcherConfig {
            fusion: FusionConfig::new(lambda)?,
            weight_mode: WeightMode::Trained,
            aggregation: Aggregation::default(),
            accuracy_table: Some(table),
        })
    }

    /// Probe-confidence-weighted matcher.
    pub fn probe_weighted(lambda: f64) -> Result<Self> {
        Ok(MatcherConfig {
            fusion: FusionConfig::new(lambda)?,
            weight_mode: WeightMode::Probe,
            ..MatcherConfig::default()
        })
    }

    pub fn with_aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.fusion.lambda = lambda;
        self
    }

    /// The fusion config actually used per pair: weighted scheme whenever a
    /// non-uniform weight mode is selected.
    fn effective_fusion(&self) -> FusionConfig {
        let mut cfg = self.fusion.clone();
        cfg.scheme = match self.weight_mode {
            WeightMode::Uniform => MatcherScheme::Plain,
            WeightMode::Trained | WeightMode::Probe => MatcherScheme::Weighted,
        };
        cfg
    }

    fn check(&self) -> Result<()> {
        self.fusion.check()?;
        if self.weight_mode == WeightMode::Trained && self.accuracy_table.is_none() {
            return Err(Error::MissingWeights);
        }
        Ok(())
    }
}

/// One or more signatures of a single subject, matched as a unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub template_id: String,
    pub subject_id: String,
    members: Vec<Signature>,
}

impl Template {
    pub fn new(template_id: &str, members: Vec<Signature>) -> Result<Self> {
        if template_id.is_empty() {
            return Err(Error::EmptyId("template_id"));
        }
        let first = members
            .first()
            .ok_or_else(|| Error::EmptyTemplate(template_id.to_string()))?;
        let subject_id = first.subject_id.clone();
        for m in &members {
            if m.subject_id != subject_id || !first.is_comparable_with(m) {
                return Err(Error::InconsistentTemplate(template_id.to_string()));
            }
        }
        Ok(Template {
            template_id: template_id.to_string(),
            subject_id,
            members,
        })
    }

    /// Single-signature template named after the signature's image id.
    pub fn from_signature(signature: Signature) -> Self {
        Template {
            template_id: signature.image_id.clone(),
            subject_id: signature.subject_id.clone(),
            members: alloc::vec![signature],
        }
    }

    pub fn members(&self) -> &[Signature] {
        &self.members
    }

    pub fn first(&self) -> &Signature {
        &self.members[0]
    }
}

/// Enrolled identities: templates with pairwise-distinct subject ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Gallery {
    templates: Vec<Template>,
}

impl Gallery {
    pub fn new(templates: Vec<Template>) -> Result<Self> {
        let first = templates.first().ok_or(Error::EmptyGallery)?;
        let reference = first.first().clone();
        for t in &templates {
            if !reference.is_comparable_with(t.first()) {
                return Err(Error::InconsistentTemplate(t.template_id.clone()));
            }
        }
        for (i, t) in templates.iter().enumerate() {
            if templates[..i].iter().any(|u| u.subject_id == t.subject_id) {
                return Err(Error::DuplicateSubject(t.subject_id.clone()));
            }
        }
        Ok(Gallery { templates })
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn subject_ids(&self) -> impl Iterator<Item = &str> {
        self.templates.iter().map(|t| t.subject_id.as_str())
    }

    pub fn contains_subject(&self, subject_id: &str) -> bool {
        self.templates.iter().any(|t| t.subject_id == subject_id)
    }
}

/// One scored gallery candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub subject_id: String,
    pub score: f64,
    pub breakdown: ScoreBreakdown,
}

/// Ranked gallery candidates for one probe, best first. Entries plus skipped
/// subjects cover the gallery exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub probe_id: String,
    pub entries: Vec<RankedEntry>,
    /// Subjects excluded from the ranking, with the reason.
    pub skipped_subjects: Vec<(String, String)>,
}

impl RankedList {
    /// Subject id of the best-scoring candidate.
    pub fn top_subject(&self) -> &str {
        &self.entries[0].subject_id
    }

    /// Position (1-based) of `subject_id` in the ranking, if present.
    pub fn rank_of(&self, subject_id: &str) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.subject_id == subject_id)
            .map(|i| i + 1)
    }
}

fn aggregate(scores: &[ScoreBreakdown], aggregation: Aggregation) -> ScoreBreakdown {
    match aggregation {
        Aggregation::Max => {
            let mut best = &scores[0];
            for s in &scores[1..] {
                if s.fused_score > best.fused_score {
                    best = s;
                }
            }
            best.clone()
        }
        Aggregation::Mean => {
            // fused = patch + lambda * attribute is linear, so the mean
            // breakdown still satisfies the fusion identity
            let n = scores.len() as f64;
            ScoreBreakdown {
                patch_score: scores.iter().map(|s| s.patch_score).sum::<f64>() / n,
                attribute_score: scores.iter().map(|s| s.attribute_score).sum::<f64>() / n,
                fused_score: scores.iter().map(|s| s.fused_score).sum::<f64>() / n,
                non_occluded_pairs: scores
                    .iter()
                    .map(|s| s.non_occluded_pairs)
                    .min()
                    .unwrap_or(1),
            }
        }
    }
}

fn match_templates(
    gallery: &Template,
    probe: &Template,
    matcher: &MatcherConfig,
) -> Result<Option<ScoreBreakdown>> {
    let fusion = matcher.effective_fusion();
    let trained_weights = match matcher.weight_mode {
        WeightMode::Trained => {
            let table = matcher.accuracy_table.as_ref().ok_or(Error::MissingWeights)?;
            Some(weights_from_training_accuracy(
                table,
                probe.first().attributes.attribute_names(),
            )?)
        }
        _ => None,
    };

    let mut scores = Vec::new();
    for probe_member in probe.members() {
        let probe_weights = match matcher.weight_mode {
            WeightMode::Probe => Some(weights_from_probe_confidence(&probe_member.attributes)?),
            _ => None,
        };
        let weights = trained_weights.as_ref().or(probe_weights.as_ref());
        for gallery_member in gallery.members() {
            match match_signatures(gallery_member, probe_member, &fusion, weights) {
                Ok(b) => scores.push(b),
                Err(Error::NoComparablePatches) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    if scores.is_empty() {
        // every pair failed the occlusion gate
        return Ok(None);
    }
    Ok(Some(aggregate(&scores, matcher.aggregation)))
}

/// Score `probe` against every gallery template and rank the candidates by
/// descending fused score (ties broken by ascending subject id).
///
/// Subjects whose every member pair shares no visible patch are reported in
/// `skipped_subjects` instead of being scored.
pub fn identify(probe: &Template, gallery: &Gallery, matcher: &MatcherConfig) -> Result<RankedList> {
    matcher.check()?;
    let mut entries = Vec::with_capacity(gallery.len());
    let mut skipped = Vec::new();
    for template in gallery.templates() {
        match match_templates(template, probe, matcher) {
            Ok(Some(breakdown)) => entries.push(RankedEntry {
                subject_id: template.subject_id.clone(),
                score: breakdown.fused_score,
                breakdown,
            }),
            Ok(None) => skipped.push((
                template.subject_id.clone(),
                Error::NoComparablePatches.to_string(),
            )),
            Err(e) => {
                return Err(Error::Subject {
                    subject_id: template.subject_id.clone(),
                    source: Box::new(e),
                })
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::AllSubjectsSkipped);
    }
    entries.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.subject_id.cmp(&b.subject_id))
    });
    Ok(RankedList {
        probe_id: probe.template_id.clone(),
        entries,
        skipped_subjects: skipped,
    })
}

/// Identify every probe in order. Per-probe failures are returned in place
/// rather than aborting the batch; output order equals input order.
pub fn batch_identify(
    probes: &[Template],
    gallery: &Gallery,
    matcher: &MatcherConfig,
) -> Vec<Result<RankedList>> {
    probes
        .iter()
        .map(|p| identify(p, gallery, matcher))
        .collect()
}

/// Attribute overlap between two signatures, by binary presence flags.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeOverlap {
    /// Attributes present in both signatures.
    pub shared: Vec<String>,
    /// Present only in the gallery signature.
    pub gallery_only: Vec<String>,
    /// Present only in the probe signature.
    pub probe_only: Vec<String>,
}

/// Partition fired attributes of a signature pair: shared, gallery-only,
/// probe-only. Attributes absent on both sides are omitted.
pub fn explain_match(g: &Signature, p: &Signature) -> Result<AttributeOverlap> {
    if g.attributes.dim() != p.attributes.dim() {
        return Err(Error::AttributeDimMismatch {
            gallery: g.attributes.dim(),
            probe: p.attributes.dim(),
        });
    }
    let names = g.attributes.attribute_names();
    let mut overlap = AttributeOverlap {
        shared: Vec::new(),
        gallery_only: Vec::new(),
        probe_only: Vec::new(),
    };
    for (i, (&bg, &bp)) in g
        .attributes
        .binary()
        .iter()
        .zip(p.attributes.binary())
        .enumerate()
    {
        match (bg, bp) {
            (true, true) => overlap.shared.push(names[i].clone()),
            (true, false) => overlap.gallery_only.push(names[i].clone()),
            (false, true) => overlap.probe_only.push(names[i].clone()),
            (false, false) => {}
        }
    }
    Ok(overlap)
}
