//! Signature scoring: occlusion-gated patch matching, attribute cosine
//! (plain and weighted), and score-level fusion.
//!
//! Similarities are accumulated in f64 regardless of storage precision and
//! clamped to [-1, 1] after computation. Every operation here is a pure,
//! symmetric function of its inputs: `f(g, p)` and `f(p, g)` are bit-equal,
//! which the implementation preserves by keeping per-accumulator operation
//! order independent of argument order (note the `w * (g * p)` grouping in
//! the weighted kernel).

use alloc::boxed::Box;

use crate::error::{Error, Result};
use crate::math;
use crate::signature::{AttributeComponent, PatchFeatureComponent, Signature, WeightVector};

/// Default fusion weight for the attribute component.
pub const DEFAULT_LAMBDA: f64 = 0.1;

/// Which attribute vector feeds the attribute score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttributeSource {
    /// Raw attribute logits (the default).
    #[default]
    Logits,
    /// Sigmoid probabilities.
    Probabilities,
    /// Binary presence flags.
    Binary,
}

impl AttributeSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttributeSource::Logits => "logits",
            AttributeSource::Probabilities => "probabilities",
            AttributeSource::Binary => "binary",
        }
    }
}

/// Plain cosine or per-attribute weighted cosine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatcherScheme {
    #[default]
    Plain,
    Weighted,
}

/// Fusion parameters shared by every matcher variant.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    /// Weight of the attribute component in the fused score.
    pub lambda: f64,
    pub attribute_source: AttributeSource,
    pub scheme: MatcherScheme,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            lambda: DEFAULT_LAMBDA,
            attribute_source: AttributeSource::default(),
            scheme: MatcherScheme::default(),
        }
    }
}

impl FusionConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        let cfg = FusionConfig {
            lambda,
            ..FusionConfig::default()
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn with_source(mut self, source: AttributeSource) -> Self {
        self.attribute_source = source;
        self
    }

    pub fn with_scheme(mut self, scheme: MatcherScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::NonFinite("lambda"));
        }
        if self.lambda < 0.0 {
            return Err(Error::NotPositive("lambda"));
        }
        Ok(())
    }
}

/// Component and fused scores for one signature pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBreakdown {
    /// Mean cosine over mutually visible patches.
    pub patch_score: f64,
    /// Attribute similarity (plain or weighted, per the config).
    pub attribute_score: f64,
    /// `patch_score + lambda * attribute_score`.
    pub fused_score: f64,
    /// Number of mutually visible patch pairs (k >= 1).
    pub non_occluded_pairs: usize,
}

#[derive(Clone, Copy)]
struct Accumulator {
    dot: f64,
    norm_left: f64,
    norm_right: f64,
}

impl Accumulator {
    fn new() -> Self {
        Accumulator {
            dot: 0.0,
            norm_left: 0.0,
            norm_right: 0.0,
        }
    }

    #[inline]
    fn push(&mut self, l: f64, r: f64) {
        self.dot += l * r;
        self.norm_left += l * l;
        self.norm_right += r * r;
    }

    #[inline]
    fn push_weighted(&mut self, w: f64, l: f64, r: f64) {
        // grouped as w * (l * r) so the value is symmetric in (l, r) bit-for-bit
        self.dot += w * (l * r);
        self.norm_left += w * (l * l);
        self.norm_right += w * (r * r);
    }

    fn cosine(&self, zero_norm: &'static str) -> Result<f64> {
        if self.norm_left <= 0.0 || self.norm_right <= 0.0 {
            return Err(Error::ZeroNorm(zero_norm));
        }
        Ok(math::clamp_unit(
            self.dot / (math::sqrt(self.norm_left) * math::sqrt(self.norm_right)),
        ))
    }
}

fn check_finite_pair(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("vector"));
    }
    Ok(())
}

/// Cosine similarity `u . v / (|u| |v|)`, clamped to [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    check_finite_pair(u, v)?;
    let mut acc = Accumulator::new();
    for (&l, &r) in u.iter().zip(v) {
        acc.push(l, r);
    }
    acc.cosine("input vector")
}

/// Weighted cosine: `sum(w g p) / sqrt(sum(w g^2)) sqrt(sum(w p^2))`.
///
/// With uniform weights this reduces to the plain cosine; with binary
/// weights it equals the plain cosine of the selected sub-vectors.
pub fn weighted_cosine(g: &[f64], p: &[f64], w: &WeightVector) -> Result<f64> {
    check_finite_pair(g, p)?;
    if w.len() != g.len() {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: g.len(),
        });
    }
    let mut acc = Accumulator::new();
    for ((&wi, &gi), &pi) in w.values().iter().zip(g).zip(p) {
        acc.push_weighted(wi, gi, pi);
    }
    if acc.norm_left <= 0.0 {
        return Err(Error::ZeroWeightedNorm("gallery"));
    }
    if acc.norm_right <= 0.0 {
        return Err(Error::ZeroWeightedNorm("probe"));
    }
    Ok(math::clamp_unit(
        acc.dot / (math::sqrt(acc.norm_left) * math::sqrt(acc.norm_right)),
    ))
}

fn cosine_f32(u: &[f32], v: &[f32]) -> Result<f64> {
    let mut acc = Accumulator::new();
    for (&l, &r) in u.iter().zip(v) {
        acc.push(l as f64, r as f64);
    }
    acc.cosine("patch column")
}

/// Occlusion-gated patch score: the mean cosine over patches visible in both
/// signatures, together with the pair count `k`.
///
/// Patches occluded on either side contribute nothing; `k = 0` is an error
/// rather than a silent zero score.
pub fn patch_component_score(
    g: &PatchFeatureComponent,
    p: &PatchFeatureComponent,
) -> Result<(f64, usize)> {
    if g.layout() != p.layout() {
        return Err(Error::LayoutMismatch {
            gallery: g.layout().describe(),
            probe: p.layout().describe(),
        });
    }
    let m = g.layout().patch_count;
    let mut sum = 0.0;
    let mut k = 0usize;
    for j in 0..m {
        if g.is_visible(j) && p.is_visible(j) {
            let c = cosine_f32(g.patch(j), p.patch(j)).map_err(|e| Error::PatchScore {
                patch: j,
                source: Box::new(e),
            })?;
            sum += c;
            k += 1;
        }
    }
    if k == 0 {
        return Err(Error::NoComparablePatches);
    }
    Ok((math::clamp_unit(sum / k as f64), k))
}

enum AttrVec<'a> {
    Logits(&'a [f32]),
    Probabilities(&'a [f64]),
    Binary(&'a [bool]),
}

impl AttrVec<'_> {
    fn len(&self) -> usize {
        match self {
            AttrVec::Logits(v) => v.len(),
            AttrVec::Probabilities(v) => v.len(),
            AttrVec::Binary(v) => v.len(),
        }
    }

    #[inline]
    fn get(&self, i: usize) -> f64 {
        match self {
            AttrVec::Logits(v) => v[i] as f64,
            AttrVec::Probabilities(v) => v[i],
            AttrVec::Binary(v) => {
                if v[i] {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

fn select_source<'a>(c: &'a AttributeComponent, source: AttributeSource) -> AttrVec<'a> {
    match source {
        AttributeSource::Logits => AttrVec::Logits(c.logits()),
        AttributeSource::Probabilities => AttrVec::Probabilities(c.probabilities()),
        AttributeSource::Binary => AttrVec::Binary(c.binary()),
    }
}

/// Attribute similarity: cosine of the selected attribute vectors.
pub fn attribute_score(
    g: &AttributeComponent,
    p: &AttributeComponent,
    source: AttributeSource,
) -> Result<f64> {
    let (gv, pv) = (select_source(g, source), select_source(p, source));
    if gv.len() != pv.len() {
        return Err(Error::AttributeDimMismatch {
            gallery: gv.len(),
            probe: pv.len(),
        });
    }
    let mut acc = Accumulator::new();
    for i in 0..gv.len() {
        acc.push(gv.get(i), pv.get(i));
    }
    acc.cosine("attribute source vector")
        .map_err(|e| Error::AttributeScore(Box::new(e)))
}

/// Weighted attribute similarity over the selected vectors.
pub fn weighted_attribute_score(
    g: &AttributeComponent,
    p: &AttributeComponent,
    source: AttributeSource,
    w: &WeightVector,
) -> Result<f64> {
    let (gv, pv) = (select_source(g, source), select_source(p, source));
    if gv.len() != pv.len() {
        return Err(Error::AttributeDimMismatch {
            gallery: gv.len(),
            probe: pv.len(),
        });
    }
    if w.len() != gv.len() {
        return Err(Error::AttributeScore(Box::new(Error::LengthMismatch {
            left: w.len(),
            right: gv.len(),
        })));
    }
    let mut acc = Accumulator::new();
    for (i, &wi) in w.values().iter().enumerate() {
        acc.push_weighted(wi, gv.get(i), pv.get(i));
    }
    if acc.norm_left <= 0.0 {
        return Err(Error::AttributeScore(Box::new(Error::ZeroWeightedNorm(
            "gallery",
        ))));
    }
    if acc.norm_right <= 0.0 {
        return Err(Error::AttributeScore(Box::new(Error::ZeroWeightedNorm(
            "probe",
        ))));
    }
    Ok(math::clamp_unit(
        acc.dot / (math::sqrt(acc.norm_left) * math::sqrt(acc.norm_right)),
    ))
}

/// Score-level fusion: `s_p + lambda * s_a`.
pub fn fuse_scores(patch_score: f64, attribute_score: f64, lambda: f64) -> Result<f64> {
    if !patch_score.is_finite() || !attribute_score.is_finite() || !lambda.is_finite() {
        return Err(Error::NonFinite("fusion input"));
    }
    if lambda < 0.0 {
        return Err(Error::NotPositive("lambda"));
    }
    Ok(patch_score + lambda * attribute_score)
}

/// Match a gallery/probe signature pair: patch score, attribute score
/// (plain or weighted), and their fusion.
///
/// A weight vector is required exactly when the config selects the weighted
/// scheme. Component failures are propagated with provenance.
pub fn match_signatures(
    g: &Signature,
    p: &Signature,
    cfg: &FusionConfig,
    w: Option<&WeightVector>,
) -> Result<ScoreBreakdown> {
    cfg.check()?;
    g.ensure_comparable(p)?;
    let (patch_score, non_occluded_pairs) = patch_component_score(&g.patch, &p.patch)?;
    let attribute = match cfg.scheme {
        MatcherScheme::Plain => {
            attribute_score(&g.attributes, &p.attributes, cfg.attribute_source)?
        }
        MatcherScheme::Weighted => {
            let w = w.ok_or(Error::MissingWeights)?;
            weighted_attribute_score(&g.attributes, &p.attributes, cfg.attribute_source, w)?
        }
    };
    let fused_score = fuse_scores(patch_score, attribute, cfg.lambda)?;
    Ok(ScoreBreakdown {
        patch_score,
        attribute_score: attribute,
        fused_score,
        non_occluded_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::{assemble_signature, PatchFeatureComponent, PatchLayout};
    use alloc::vec;
    use alloc::vec::Vec;

    fn layout(m: usize, n: usize) -> PatchLayout {
        PatchLayout::new(m, n, "SYNTH").unwrap()
    }

    fn component(m: usize, n: usize, features: Vec<f32>, vis: Vec<bool>) -> PatchFeatureComponent {
        PatchFeatureComponent::new(layout(m, n), features, vis).unwrap()
    }

    #[test]
    fn cosine_identity_orthogonal_and_oracle() {
        let x = [0.3, -1.2, 4.5, 0.01];
        let c = cosine(&x, &x).unwrap();
        assert!(c <= 1.0 && (1.0 - c) < 1e-12);

        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);

        // brute-force re-computation
        let (u, v) = ([1.0, 2.0, 3.0], [4.0, 5.0, 6.0]);
        let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nv: f64 = v.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!((cosine(&u, &v).unwrap() - dot / (nu * nv)).abs() < 1e-12);
    }

    #[test]
    fn cosine_error_paths() {
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroNorm(_))
        ));
        assert!(matches!(
            cosine(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            cosine(&[f64::NAN, 1.0], &[1.0, 0.0]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn patch_score_identity() {
        let f = vec![1.0, 2.0, -0.5, 0.25];
        let g = component(2, 2, f.clone(), vec![true, true]);
        let (s, k) = patch_component_score(&g, &g).unwrap();
        assert_eq!(k, 2);
        assert!((1.0 - s) < 1e-12);
    }

    #[test]
    fn patch_score_gates_on_mutual_visibility() {
        // m=2, n=2; probe's second patch occluded
        let g = component(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![true, true]);
        let p = component(2, 2, vec![1.0, 1.0, 3.0, 4.0], vec![true, false]);
        let (s, k) = patch_component_score(&g, &p).unwrap();
        assert_eq!(k, 1);
        // only patch 0 contributes: cosine((1,0),(1,1)) = 1/sqrt(2)
        let expected = 1.0 / 2f64.sqrt();
        assert!((s - expected).abs() < 1e-12);
    }

    #[test]
    fn patch_score_errors_when_nothing_is_comparable() {
        let g = component(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![false, false]);
        let p = component(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![true, true]);
        assert_eq!(
            patch_component_score(&g, &p).unwrap_err(),
            Error::NoComparablePatches
        );
    }

    #[test]
    fn patch_score_rejects_layout_mismatch() {
        let g = component(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![true, true]);
        let p = component(1, 4, vec![1.0, 0.0, 0.0, 1.0], vec![true]);
        assert!(matches!(
            patch_component_score(&g, &p),
            Err(Error::LayoutMismatch { .. })
        ));
    }

    fn attrs(logits: Vec<f32>) -> crate::signature::AttributeComponent {
        crate::signature::AttributeComponent::from_logits(logits).unwrap()
    }

    #[test]
    fn attribute_score_hand_cases() {
        let a = attrs(vec![1.0, 2.0, -0.5]);
        assert!((attribute_score(&a, &a, AttributeSource::Logits).unwrap() - 1.0).abs() < 1e-12);

        let g = attrs(vec![1.0, 0.0]);
        let p = attrs(vec![1.0, 1.0]);
        let s = attribute_score(&g, &p, AttributeSource::Logits).unwrap();
        assert!((s - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn attribute_score_binary_source() {
        // B^g = (1,0,1), B^p = (1,1,0): dot 1, norms sqrt(2) each
        let g = attrs(vec![5.0, -5.0, 5.0]);
        let p = attrs(vec![5.0, 5.0, -5.0]);
        let s = attribute_score(&g, &p, AttributeSource::Binary).unwrap();
        assert!((s - 0.5).abs() < 1e-12);

        // no attribute fires on the probe side
        let none = attrs(vec![-5.0, -5.0, -5.0]);
        assert!(matches!(
            attribute_score(&g, &none, AttributeSource::Binary),
            Err(Error::AttributeScore(_))
        ));
    }

    #[test]
    fn weighted_cosine_uniform_reduces_to_plain() {
        let g = [0.2, -1.4, 3.3, 0.7];
        let p = [1.1, 0.4, -2.2, 0.9];
        let w = WeightVector::new(vec![0.37; 4]).unwrap();
        let plain = cosine(&g, &p).unwrap();
        let weighted = weighted_cosine(&g, &p, &w).unwrap();
        assert!((plain - weighted).abs() < 1e-12);
        // all-ones weights are bit-exact
        let ones = WeightVector::uniform(4).unwrap();
        assert_eq!(weighted_cosine(&g, &p, &ones).unwrap(), plain);
    }

    #[test]
    fn weighted_cosine_binary_weights_select_subvectors() {
        let g = [0.2, -1.4, 3.3, 0.7];
        let p = [1.1, 0.4, -2.2, 0.9];
        let w = WeightVector::new(vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let sub = cosine(&[g[0], g[2]], &[p[0], p[2]]).unwrap();
        assert!((weighted_cosine(&g, &p, &w).unwrap() - sub).abs() < 1e-12);
    }

    #[test]
    fn weighted_cosine_hand_case() {
        // g=(1,0), p=(1,1), w=(2,1): 2 / (sqrt(2) sqrt(3))
        let w = WeightVector::new(vec![2.0, 1.0]).unwrap();
        let s = weighted_cosine(&[1.0, 0.0], &[1.0, 1.0], &w).unwrap();
        assert!((s - 2.0 / (2f64.sqrt() * 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn weighted_cosine_zero_weighted_norm() {
        // weights select only the entry where g vanishes
        let w = WeightVector::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            weighted_cosine(&[1.0, 0.0], &[1.0, 1.0], &w),
            Err(Error::ZeroWeightedNorm("gallery"))
        ));
    }

    #[test]
    fn fuse_cases() {
        assert_eq!(fuse_scores(0.73, 0.4, 0.0).unwrap(), 0.73);
        assert!((fuse_scores(0.8, 0.5, 0.1).unwrap() - 0.85).abs() < 1e-12);
        assert!(matches!(
            fuse_scores(f64::INFINITY, 0.0, 0.1),
            Err(Error::NonFinite(_))
        ));
        assert_eq!(DEFAULT_LAMBDA, 0.1);
    }

    fn pair_of_signatures() -> (Signature, Signature) {
        let g = assemble_signature(
            "g",
            "g0",
            component(2, 3, vec![1.0, 0.2, -0.3, 0.5, 1.5, 0.0], vec![true, true]),
            vec![0.8, -0.4, 1.1],
        )
        .unwrap();
        let p = assemble_signature(
            "p",
            "p0",
            component(2, 3, vec![0.9, 0.1, -0.2, 0.4, 1.2, 0.3], vec![true, true]),
            vec![0.7, -0.6, 0.9],
        )
        .unwrap();
        (g, p)
    }

    #[test]
    fn match_identity_fuses_to_one_plus_lambda() {
        let (g, _) = pair_of_signatures();
        let cfg = FusionConfig::new(0.1).unwrap();
        let b = match_signatures(&g, &g, &cfg, None).unwrap();
        assert!((b.fused_score - 1.1).abs() < 1e-12);
        assert_eq!(b.non_occluded_pairs, 2);
    }

    #[test]
    fn match_weighted_uniform_equals_plain() {
        let (g, p) = pair_of_signatures();
        let plain = match_signatures(&g, &p, &FusionConfig::new(0.1).unwrap(), None).unwrap();
        let cfg = FusionConfig::new(0.1)
            .unwrap()
            .with_scheme(MatcherScheme::Weighted);
        let w = WeightVector::uniform(3).unwrap();
        let weighted = match_signatures(&g, &p, &cfg, Some(&w)).unwrap();
        assert!((plain.fused_score - weighted.fused_score).abs() < 1e-12);
        assert!((plain.attribute_score - weighted.attribute_score).abs() < 1e-12);
    }

    #[test]
    fn match_against_straightline_recomputation() {
        let (g, p) = pair_of_signatures();
        let cfg = FusionConfig::new(0.25).unwrap();
        let b = match_signatures(&g, &p, &cfg, None).unwrap();

        // independent straight-line evaluation
        let mut cosines = Vec::new();
        for j in 0..2 {
            let (gc, pc) = (g.patch.patch(j), p.patch.patch(j));
            let dot: f64 = gc.iter().zip(pc).map(|(&a, &b)| a as f64 * b as f64).sum();
            let ng: f64 = gc.iter().map(|&a| (a as f64) * (a as f64)).sum::<f64>().sqrt();
            let np: f64 = pc.iter().map(|&b| (b as f64) * (b as f64)).sum::<f64>().sqrt();
            cosines.push(dot / (ng * np));
        }
        let sp = cosines.iter().sum::<f64>() / 2.0;
        let ga: Vec<f64> = g.attributes.logits().iter().map(|&x| x as f64).collect();
        let pa: Vec<f64> = p.attributes.logits().iter().map(|&x| x as f64).collect();
        let dot: f64 = ga.iter().zip(&pa).map(|(a, b)| a * b).sum();
        let na = ga.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb = pa.iter().map(|b| b * b).sum::<f64>().sqrt();
        let sa = dot / (na * nb);

        assert!((b.patch_score - sp).abs() < 1e-12);
        assert!((b.attribute_score - sa).abs() < 1e-12);
        assert!((b.fused_score - (sp + 0.25 * sa)).abs() < 1e-12);
    }

    #[test]
    fn match_requires_weights_for_weighted_scheme() {
        let (g, p) = pair_of_signatures();
        let cfg = FusionConfig::new(0.1)
            .unwrap()
            .with_scheme(MatcherScheme::Weighted);
        assert_eq!(
            match_signatures(&g, &p, &cfg, None).unwrap_err(),
            Error::MissingWeights
        );
    }

    #[test]
    fn match_is_exactly_symmetric() {
        let (g, p) = pair_of_signatures();
        let cfg = FusionConfig::new(0.1).unwrap();
        let a = match_signatures(&g, &p, &cfg, None).unwrap();
        let b = match_signatures(&p, &g, &cfg, None).unwrap();
        assert_eq!(a, b);

        let wcfg = FusionConfig::new(0.1)
            .unwrap()
            .with_scheme(MatcherScheme::Weighted);
        let w = WeightVector::new(vec![0.3, 1.7, 0.9]).unwrap();
        let aw = match_signatures(&g, &p, &wcfg, Some(&w)).unwrap();
        let bw = match_signatures(&p, &g, &wcfg, Some(&w)).unwrap();
        assert_eq!(aw, bw);
    }

    #[test]
    fn fused_score_is_monotone_in_attribute_score() {
        let lambda = 0.4;
        let mut last = f64::NEG_INFINITY;
        for i in 0..20 {
            let sa = -1.0 + i as f64 * 0.1;
            let f = fuse_scores(0.3, sa, lambda).unwrap();
            assert!(f > last);
            last = f;
        }
    }
}
