//! Signature data model: patch features with occlusion encoding, soft
//! attribute vectors, and the per-attribute weight vector.
//!
//! A signature describes one face image. Its patch component holds an
//! `n x m` feature matrix (column `j` is the feature vector of patch `j`)
//! plus one visibility bit per patch. Its attribute component holds raw
//! attribute logits together with derived sigmoid probabilities and binary
//! presence flags. All types are immutable after construction.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Tolerance for the stored-probability consistency check.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// The default attribute set: 40 soft facial attributes.
pub const DEFAULT_ATTRIBUTE_NAMES: [&str; 40] = [
    "5 O'Clock Shadow",
    "Male",
    "Arched Eyebrows",
    "Mouth Slightly Open",
    "Attractive",
    "Mustache",
    "Bags Under Eyes",
    "Narrow Eyes",
    "Bald",
    "No Beard",
    "Bangs",
    "Oval Face",
    "Big Lips",
    "Pale Skin",
    "Big Nose",
    "Pointy Nose",
    "Black Hair",
    "Receding Hairline",
    "Blond Hair",
    "Rosy Cheeks",
    "Blurry",
    "Sideburns",
    "Brown Hair",
    "Smiling",
    "Bushy Eyebrows",
    "Straight Hair",
    "Chubby",
    "Wavy Hair",
    "Double Chin",
    "Wearing Earrings",
    "Eyeglasses",
    "Wearing Hat",
    "Goatee",
    "Wearing Lipstick",
    "Gray Hair",
    "Wearing Necklace",
    "Heavy Makeup",
    "Wearing Necktie",
    "High Cheekbones",
    "Young",
];

/// Attribute names for dimension `d`: the built-in 40 names when `d == 40`,
/// otherwise synthetic `attr1..attrd` labels.
pub fn attribute_names(d: usize) -> Vec<String> {
    if d == DEFAULT_ATTRIBUTE_NAMES.len() {
        DEFAULT_ATTRIBUTE_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        (1..=d).map(|i| format!("attr{i}")).collect()
    }
}

/// Shape of the patch feature matrix: `patch_count` (m) patches of
/// `feature_dim` (n) features each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchLayout {
    pub patch_count: usize,
    pub feature_dim: usize,
    pub scheme_name: String,
}

impl PatchLayout {
    pub fn new(patch_count: usize, feature_dim: usize, scheme_name: &str) -> Result<Self> {
        if patch_count < 1 {
            return Err(Error::NotPositive("patch_count"));
        }
        if feature_dim < 1 {
            return Err(Error::NotPositive("feature_dim"));
        }
        Ok(PatchLayout {
            patch_count,
            feature_dim,
            scheme_name: scheme_name.to_string(),
        })
    }

    /// 64 non-overlapping patches of 1024 features.
    pub fn prfs() -> Self {
        PatchLayout {
            patch_count: 64,
            feature_dim: 1024,
            scheme_name: String::from("PRFS"),
        }
    }

    /// 8 partially-overlapping patches of 512 features.
    pub fn dprfs() -> Self {
        PatchLayout {
            patch_count: 8,
            feature_dim: 512,
            scheme_name: String::from("DPRFS"),
        }
    }

    pub fn describe(&self) -> String {
        format!(
            "{} ({}x{})",
            self.scheme_name, self.feature_dim, self.patch_count
        )
    }
}

/// Patch-based feature component: feature matrix plus occlusion encoding.
///
/// `features` is stored column-major: the `feature_dim` values of patch `j`
/// occupy `features[j * feature_dim .. (j + 1) * feature_dim]`. Features are
/// single precision; all score arithmetic widens to f64.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchFeatureComponent {
    layout: PatchLayout,
    features: Vec<f32>,
    /// One flag per patch; `true` means the patch is non-occluded (visible).
    occlusion: Vec<bool>,
}

impl PatchFeatureComponent {
    pub fn new(layout: PatchLayout, features: Vec<f32>, occlusion: Vec<bool>) -> Result<Self> {
        let expected = layout.feature_dim * layout.patch_count;
        if features.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "features",
                expected,
                actual: features.len(),
            });
        }
        if occlusion.len() != layout.patch_count {
            return Err(Error::DimensionMismatch {
                what: "occlusion",
                expected: layout.patch_count,
                actual: occlusion.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        let component = PatchFeatureComponent {
            layout,
            features,
            occlusion,
        };
        for j in 0..component.layout.patch_count {
            if component.occlusion[j] && !component.patch_has_nonzero_norm(j) {
                return Err(Error::ZeroNorm("non-occluded patch column"));
            }
        }
        Ok(component)
    }

    pub fn layout(&self) -> &PatchLayout {
        &self.layout
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn occlusion(&self) -> &[bool] {
        &self.occlusion
    }

    /// Feature column of patch `j`.
    pub fn patch(&self, j: usize) -> &[f32] {
        let n = self.layout.feature_dim;
        &self.features[j * n..(j + 1) * n]
    }

    /// Whether patch `j` is visible (non-occluded).
    pub fn is_visible(&self, j: usize) -> bool {
        self.occlusion[j]
    }

    fn patch_has_nonzero_norm(&self, j: usize) -> bool {
        self.patch(j).iter().any(|&v| v != 0.0)
    }

    fn violations(&self, out: &mut Vec<String>) {
        let expected = self.layout.feature_dim * self.layout.patch_count;
        if self.features.len() != expected {
            out.push(format!(
                "features: expected {expected} entries, got {}",
                self.features.len()
            ));
            return; // column indexing is unsafe past this point
        }
        if self.occlusion.len() != self.layout.patch_count {
            out.push(format!(
                "occlusion: expected {} entries, got {}",
                self.layout.patch_count,
                self.occlusion.len()
            ));
        }
        for (i, v) in self.features.iter().enumerate() {
            if !v.is_finite() {
                out.push(format!("features[{i}] is not finite"));
            }
        }
        for j in 0..self.layout.patch_count {
            if j < self.occlusion.len() && self.occlusion[j] && !self.patch_has_nonzero_norm(j) {
                out.push(format!("non-occluded patch {j} has zero feature norm"));
            }
        }
    }
}

/// Soft attribute component: logits with derived probabilities and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeComponent {
    logits: Vec<f32>,
    probabilities: Vec<f64>,
    binary: Vec<bool>,
    attribute_names: Vec<String>,
}

impl AttributeComponent {
    /// Derive probabilities (sigmoid) and binary flags (strictly above 0.5)
    /// from raw logits, with default names for the dimension.
    pub fn from_logits(logits: Vec<f32>) -> Result<Self> {
        let names = attribute_names(logits.len());
        Self::from_logits_named(logits, names)
    }

    pub fn from_logits_named(logits: Vec<f32>, attribute_names: Vec<String>) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::NotPositive("attribute dimension"));
        }
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logits"));
        }
        if attribute_names.len() != logits.len() {
            return Err(Error::DimensionMismatch {
                what: "attribute_names",
                expected: logits.len(),
                actual: attribute_names.len(),
            });
        }
        if logits.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroNorm("logits"));
        }
        let probabilities: Vec<f64> = logits.iter().map(|&a| math::sigmoid(a as f64)).collect();
        let binary: Vec<bool> = probabilities.iter().map(|&p| p > 0.5).collect();
        Ok(AttributeComponent {
            logits,
            probabilities,
            binary,
            attribute_names,
        })
    }

    pub fn dim(&self) -> usize {
        self.logits.len()
    }

    pub fn logits(&self) -> &[f32] {
        &self.logits
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn binary(&self) -> &[bool] {
        &self.binary
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    fn violations(&self, out: &mut Vec<String>) {
        if self.logits.is_empty() {
            out.push(String::from("attribute dimension must be at least 1"));
        }
        if self.probabilities.len() != self.logits.len() {
            out.push(format!(
                "probabilities: expected {} entries, got {}",
                self.logits.len(),
                self.probabilities.len()
            ));
        }
        if self.binary.len() != self.logits.len() {
            out.push(format!(
                "binary: expected {} entries, got {}",
                self.logits.len(),
                self.binary.len()
            ));
        }
        if self.attribute_names.len() != self.logits.len() {
            out.push(format!(
                "attribute_names: expected {} entries, got {}",
                self.logits.len(),
                self.attribute_names.len()
            ));
        }
        for (i, v) in self.logits.iter().enumerate() {
            if !v.is_finite() {
                out.push(format!("logits[{i}] is not finite"));
            }
        }
        if self.logits.iter().all(|&v| v == 0.0) {
            out.push(String::from("logits have zero norm"));
        }
        for (i, (&a, &p)) in self.logits.iter().zip(&self.probabilities).enumerate() {
            if !(0.0..=1.0).contains(&p) {
                out.push(format!("probabilities[{i}] = {p} outside [0, 1]"));
            } else if a.is_finite()
                && math::abs(p - math::sigmoid(a as f64)) > PROBABILITY_TOLERANCE
            {
                out.push(format!(
                    "probabilities[{i}] is not the sigmoid of logits[{i}]"
                ));
            }
        }
        for (i, (&p, &b)) in self.probabilities.iter().zip(&self.binary).enumerate() {
            if b != (p > 0.5) {
                out.push(format!(
                    "binary[{i}] disagrees with probabilities[{i}] under the 0.5 threshold"
                ));
            }
        }
    }
}

/// Complete per-image signature: patch component plus attribute component.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub subject_id: String,
    pub image_id: String,
    pub patch: PatchFeatureComponent,
    pub attributes: AttributeComponent,
}

impl Signature {
    pub fn new(
        subject_id: String,
        image_id: String,
        patch: PatchFeatureComponent,
        attributes: AttributeComponent,
    ) -> Result<Self> {
        if subject_id.is_empty() {
            return Err(Error::EmptyId("subject_id"));
        }
        if image_id.is_empty() {
            return Err(Error::EmptyId("image_id"));
        }
        Ok(Signature {
            subject_id,
            image_id,
            patch,
            attributes,
        })
    }

    pub fn layout(&self) -> &PatchLayout {
        self.patch.layout()
    }

    /// Two signatures are comparable when their patch layouts are identical
    /// and their attribute dimensions match.
    pub fn is_comparable_with(&self, other: &Signature) -> bool {
        self.patch.layout() == other.patch.layout()
            && self.attributes.dim() == other.attributes.dim()
    }

    pub fn ensure_comparable(&self, other: &Signature) -> Result<()> {
        if self.patch.layout() != other.patch.layout() {
            return Err(Error::LayoutMismatch {
                gallery: self.patch.layout().describe(),
                probe: other.patch.layout().describe(),
            });
        }
        if self.attributes.dim() != other.attributes.dim() {
            return Err(Error::AttributeDimMismatch {
                gallery: self.attributes.dim(),
                probe: other.attributes.dim(),
            });
        }
        Ok(())
    }
}

/// Assemble a signature from a validated patch component and raw attribute
/// logits. Probabilities and binary flags are derived here; the result is a
/// deterministic function of the inputs.
pub fn assemble_signature(
    subject_id: &str,
    image_id: &str,
    patch: PatchFeatureComponent,
    logits: Vec<f32>,
) -> Result<Signature> {
    let attributes = AttributeComponent::from_logits(logits)?;
    Signature::new(
        subject_id.to_string(),
        image_id.to_string(),
        patch,
        attributes,
    )
}

/// Collect every invariant violation in `signature`. An empty list means the
/// signature is valid. Never aborts; the order of violations is fixed.
pub fn validate(signature: &Signature) -> Vec<String> {
    let mut out = Vec::new();
    if signature.subject_id.is_empty() {
        out.push(String::from("subject_id must not be empty"));
    }
    if signature.image_id.is_empty() {
        out.push(String::from("image_id must not be empty"));
    }
    signature.patch.violations(&mut out);
    signature.attributes.violations(&mut out);
    out
}

/// Per-attribute nonnegative weights for the weighted cosine.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite("weights"));
            }
            if value < 0.0 {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::ZeroNorm("weights"));
        }
        Ok(WeightVector { weights })
    }

    /// All-ones weights of dimension `d`; equivalent to the unweighted cosine.
    pub fn uniform(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::NotPositive("weight dimension"));
        }
        Ok(WeightVector {
            weights: alloc::vec![1.0; d],
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn small_layout() -> PatchLayout {
        PatchLayout::new(2, 3, "SYNTH").unwrap()
    }

    fn valid_patch() -> PatchFeatureComponent {
        PatchFeatureComponent::new(
            small_layout(),
            vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0],
            vec![true, true],
        )
        .unwrap()
    }

    #[test]
    fn builtin_presets() {
        let prfs = PatchLayout::prfs();
        assert_eq!((prfs.patch_count, prfs.feature_dim), (64, 1024));
        let dprfs = PatchLayout::dprfs();
        assert_eq!((dprfs.patch_count, dprfs.feature_dim), (8, 512));
    }

    #[test]
    fn default_names_are_the_forty_attributes() {
        let names = attribute_names(40);
        assert_eq!(names.len(), 40);
        assert_eq!(names[0], "5 O'Clock Shadow");
        assert_eq!(names[1], "Male");
        assert_eq!(names[38], "High Cheekbones");
        assert_eq!(names[39], "Young");
        // smaller dimensions get synthetic labels
        assert_eq!(attribute_names(3), vec!["attr1", "attr2", "attr3"]);
    }

    #[test]
    fn zero_logits_map_to_half_probability_and_absent() {
        // strict > 0.5 threshold: sigmoid(0) = 0.5 is "absent"
        let attrs = AttributeComponent::from_logits(vec![0.0, 1.0]).unwrap();
        assert_eq!(attrs.probabilities()[0], 0.5);
        assert!(!attrs.binary()[0]);
        assert!(attrs.binary()[1]);
    }

    #[test]
    fn saturated_logits() {
        let sig = assemble_signature("s", "i", valid_patch(), vec![20.0, -20.0]).unwrap();
        let p = sig.attributes.probabilities();
        assert!(p[0] > 0.999_999);
        assert!(p[1] < 1e-6);
        assert_eq!(sig.attributes.binary(), &[true, false]);
    }

    #[test]
    fn probabilities_match_independent_sigmoid() {
        let logits = vec![0.5f32, -0.3, 1.2];
        let sig = assemble_signature("s", "i", valid_patch(), logits.clone()).unwrap();
        for (&a, &p) in logits.iter().zip(sig.attributes.probabilities()) {
            let expected = 1.0 / (1.0 + (-(a as f64)).exp());
            assert!((p - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn assemble_rejects_bad_inputs() {
        assert!(matches!(
            assemble_signature("", "i", valid_patch(), vec![1.0]),
            Err(Error::EmptyId("subject_id"))
        ));
        assert!(matches!(
            assemble_signature("s", "", valid_patch(), vec![1.0]),
            Err(Error::EmptyId("image_id"))
        ));
        assert!(matches!(
            assemble_signature("s", "i", valid_patch(), vec![f32::NAN]),
            Err(Error::NonFinite("logits"))
        ));
        assert!(matches!(
            AttributeComponent::from_logits(vec![]),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn assemble_is_deterministic() {
        let a = assemble_signature("s", "i", valid_patch(), vec![0.25, -1.5]).unwrap();
        let b = assemble_signature("s", "i", valid_patch(), vec![0.25, -1.5]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn patch_component_rejects_wrong_shapes() {
        assert!(matches!(
            PatchFeatureComponent::new(small_layout(), vec![1.0; 5], vec![true, true]),
            Err(Error::DimensionMismatch { what: "features", .. })
        ));
        assert!(matches!(
            PatchFeatureComponent::new(small_layout(), vec![1.0; 6], vec![true]),
            Err(Error::DimensionMismatch { what: "occlusion", .. })
        ));
    }

    #[test]
    fn occluded_patches_may_be_all_zero() {
        let c = PatchFeatureComponent::new(
            small_layout(),
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![true, false],
        )
        .unwrap();
        assert!(c.is_visible(0));
        assert!(!c.is_visible(1));
        // but a visible zero column is rejected
        assert!(matches!(
            PatchFeatureComponent::new(
                small_layout(),
                vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![true, true],
            ),
            Err(Error::ZeroNorm(_))
        ));
    }

    #[test]
    fn validate_accepts_valid_signature() {
        let mut features = vec![0.0f32; 8 * 512];
        for j in 0..8 {
            features[j * 512] = 1.0;
        }
        let patch = PatchFeatureComponent::new(PatchLayout::dprfs(), features, vec![true; 8]).unwrap();
        let sig = assemble_signature("subj", "img", patch, vec![0.3; 40]).unwrap();
        assert!(validate(&sig).is_empty());
    }

    #[test]
    fn validate_reports_tampered_fields() {
        let sig = assemble_signature("s", "i", valid_patch(), vec![0.5, -0.5]).unwrap();

        let mut bad = sig.clone();
        bad.patch.occlusion.truncate(1);
        let v = validate(&bad);
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("occlusion"), "{v:?}");

        let mut bad = sig.clone();
        bad.attributes.probabilities[0] += 1e-6;
        let v = validate(&bad);
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("sigmoid"), "{v:?}");

        // drift within tolerance passes
        let mut ok = sig;
        ok.attributes.probabilities[0] += 1e-10;
        assert!(validate(&ok).is_empty());
    }

    #[test]
    fn weight_vector_invariants() {
        assert!(WeightVector::new(vec![0.5, 0.0]).is_ok());
        assert!(matches!(
            WeightVector::new(vec![-0.1, 1.0]),
            Err(Error::NegativeWeight { index: 0, .. })
        ));
        assert!(matches!(
            WeightVector::new(vec![0.0, 0.0]),
            Err(Error::ZeroNorm(_))
        ));
        assert_eq!(WeightVector::uniform(3).unwrap().values(), &[1.0, 1.0, 1.0]);
        assert!(WeightVector::uniform(0).is_err());
    }

    #[test]
    fn comparability_requires_matching_shapes() {
        let a = assemble_signature("s", "i", valid_patch(), vec![1.0, 2.0]).unwrap();
        let b = assemble_signature("t", "j", valid_patch(), vec![1.0, 2.0, 3.0]).unwrap();
        assert!(!a.is_comparable_with(&b));
        assert!(matches!(
            a.ensure_comparable(&b),
            Err(Error::AttributeDimMismatch { .. })
        ));
    }
}
