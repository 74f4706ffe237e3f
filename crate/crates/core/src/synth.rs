//! Deterministic synthetic benchmark generator.
//!
//! Each subject gets a latent identity: a unit-norm patch feature matrix and
//! an attribute logit vector. The gallery enrolls one noisy copy per
//! subject; probes are further degraded — a fraction of patch columns
//! replaced by unrelated random vectors, patches occluded at a fixed rate,
//! and attribute logit signs flipped at a fixed rate. Patch corruption
//! damages only the patch channel while attributes keep carrying identity,
//! so the benefit of fusing the two channels is tunable.
//!
//! Generation is a pure function of the config. All randomness comes from
//! one counter-based stream ([`crate::rng::Stream`]); per subject the draw
//! order is: latent patch columns (column 0 first, `feature_dim` gaussians
//! each), then `attribute_dim` latent logit gaussians. Per image the order
//! is: patch noise (column-major gaussians), corruption coin per patch plus
//! `feature_dim` gaussians for each corrupted column, occlusion coin per
//! patch (probes only), flip coin per attribute (probes only). Gallery
//! images of every subject are drawn before any probe image.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::identification::{Gallery, Template};
use crate::math;
use crate::rng::Stream;
use crate::signature::{
    attribute_names, PatchFeatureComponent, PatchLayout, Signature,
};

/// Generator parameters. All rates are per-element probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub subjects: usize,
    /// Probe images generated per subject; the gallery always enrolls one
    /// image per subject.
    pub images_per_subject: usize,
    pub layout: PatchLayout,
    pub attribute_dim: usize,
    /// Standard deviation of the additive per-entry feature noise (applied
    /// to gallery and probe images alike).
    pub patch_noise_sigma: f64,
    /// Fraction of probe patch columns replaced by unrelated random vectors.
    pub corrupt_fraction: f64,
    /// Probability that a probe patch is marked occluded.
    pub occlusion_rate: f64,
    /// Probability that a probe attribute logit has its sign flipped.
    pub attribute_flip_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            subjects: 50,
            images_per_subject: 4,
            layout: PatchLayout {
                patch_count: 8,
                feature_dim: 64,
                scheme_name: String::from("SYNTH"),
            },
            attribute_dim: 40,
            patch_noise_sigma: 2.0,
            corrupt_fraction: 0.3,
            occlusion_rate: 0.1,
            attribute_flip_rate: 0.05,
        }
    }
}

impl SynthConfig {
    pub fn check(&self) -> Result<()> {
        if self.subjects < 1 {
            return Err(Error::NotPositive("subjects"));
        }
        if self.images_per_subject < 1 {
            return Err(Error::NotPositive("images_per_subject"));
        }
        if self.attribute_dim < 1 {
            return Err(Error::NotPositive("attribute_dim"));
        }
        if !self.patch_noise_sigma.is_finite() || self.patch_noise_sigma < 0.0 {
            return Err(Error::InvalidConfig(
                "patch_noise_sigma must be finite and nonnegative".to_string(),
            ));
        }
        for (name, rate) in [
            ("corrupt_fraction", self.corrupt_fraction),
            ("occlusion_rate", self.occlusion_rate),
            ("attribute_flip_rate", self.attribute_flip_rate),
        ] {
            if !rate.is_finite() || !(0.0..=1.0).contains(&rate) {
                return Err(Error::OutOfRange {
                    what: name,
                    value: rate,
                });
            }
        }
        if self.occlusion_rate >= 1.0 {
            return Err(Error::InvalidConfig(
                "occlusion_rate of 1 makes every probe unscorable".to_string(),
            ));
        }
        Ok(())
    }
}

/// Ground truth row: probe template id and its true subject.
pub type TruthEntry = (String, String);

/// A generated benchmark: enrolled gallery, probe templates, and truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthBenchmark {
    pub config: SynthConfig,
    pub gallery: Gallery,
    pub probes: Vec<Template>,
    pub truth: Vec<TruthEntry>,
}

struct LatentSubject {
    /// Unit-norm columns, column-major.
    features: Vec<f64>,
    logits: Vec<f64>,
}

fn draw_latent(stream: &mut Stream, layout: &PatchLayout, d: usize) -> LatentSubject {
    let n = layout.feature_dim;
    let m = layout.patch_count;
    let mut features = Vec::with_capacity(n * m);
    for _ in 0..m {
        let col: Vec<f64> = (0..n).map(|_| stream.next_gaussian()).collect();
        let norm = math::sqrt(col.iter().map(|x| x * x).sum::<f64>());
        // a zero-norm gaussian draw has probability zero; guard anyway
        let inv = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        features.extend(col.iter().map(|x| x * inv));
    }
    // magnitude ~2 keeps sign flips from washing out the attribute signal
    let logits = (0..d).map(|_| 2.0 * stream.next_gaussian()).collect();
    LatentSubject { features, logits }
}

fn noisy_features(stream: &mut Stream, latent: &[f64], sigma: f64, n: usize) -> Vec<f32> {
    // per-entry noise scaled by 1/sqrt(n) so the column noise norm is ~sigma
    let scale = sigma / math::sqrt(n as f64);
    latent
        .iter()
        .map(|&x| (x + scale * stream.next_gaussian()) as f32)
        .collect()
}

fn corrupt_columns(stream: &mut Stream, features: &mut [f32], cfg: &SynthConfig) {
    let n = cfg.layout.feature_dim;
    for j in 0..cfg.layout.patch_count {
        if stream.next_bool(cfg.corrupt_fraction) {
            let col: Vec<f64> = (0..n).map(|_| stream.next_gaussian()).collect();
            let norm = math::sqrt(col.iter().map(|x| x * x).sum::<f64>());
            let inv = if norm > 0.0 { 1.0 / norm } else { 1.0 };
            for (slot, value) in features[j * n..(j + 1) * n].iter_mut().zip(&col) {
                *slot = (value * inv) as f32;
            }
        }
    }
}

fn ensure_nonzero_columns(features: &mut [f32], n: usize) {
    // additive noise can in principle cancel a column to zero; nudge it so
    // the signature invariant (visible column has nonzero norm) holds
    for col in features.chunks_mut(n) {
        if col.iter().all(|&v| v == 0.0) {
            col[0] = f32::MIN_POSITIVE;
        }
    }
}

fn subject_label(index: usize, width: usize) -> String {
    format!("s{index:0width$}")
}

/// Generate a benchmark. Identical configs produce identical output.
pub fn generate_benchmark(cfg: &SynthConfig) -> Result<SynthBenchmark> {
    cfg.check()?;
    let n = cfg.layout.feature_dim;
    let m = cfg.layout.patch_count;
    let d = cfg.attribute_dim;
    let names = attribute_names(d);
    let width = core::cmp::max(3, cfg.subjects.to_string().len());

    let mut stream = Stream::new(cfg.seed);
    let latents: Vec<LatentSubject> = (0..cfg.subjects)
        .map(|_| draw_latent(&mut stream, &cfg.layout, d))
        .collect();

    let make_attrs = |logits: &[f64]| -> Vec<f32> { logits.iter().map(|&x| x as f32).collect() };

    // gallery: one clean-ish image per subject, all patches visible
    let mut gallery_templates = Vec::with_capacity(cfg.subjects);
    for (s, latent) in latents.iter().enumerate() {
        let subject = subject_label(s, width);
        let mut features = noisy_features(&mut stream, &latent.features, cfg.patch_noise_sigma, n);
        ensure_nonzero_columns(&mut features, n);
        let patch = PatchFeatureComponent::new(cfg.layout.clone(), features, alloc::vec![true; m])?;
        let signature = Signature::new(
            subject.clone(),
            format!("{subject}_g0"),
            patch,
            crate::signature::AttributeComponent::from_logits_named(
                make_attrs(&latent.logits),
                names.clone(),
            )?,
        )?;
        gallery_templates.push(Template::from_signature(signature));
    }

    // probes: noisy, corrupted, partially occluded, attribute-flipped
    let mut probes = Vec::with_capacity(cfg.subjects * cfg.images_per_subject);
    let mut truth = Vec::with_capacity(probes.capacity());
    for (s, latent) in latents.iter().enumerate() {
        let subject = subject_label(s, width);
        for i in 0..cfg.images_per_subject {
            let mut features =
                noisy_features(&mut stream, &latent.features, cfg.patch_noise_sigma, n);
            corrupt_columns(&mut stream, &mut features, cfg);
            ensure_nonzero_columns(&mut features, n);
            let occlusion: Vec<bool> = (0..m)
                .map(|_| !stream.next_bool(cfg.occlusion_rate))
                .collect();
            let logits: Vec<f32> = latent
                .logits
                .iter()
                .map(|&a| {
                    if stream.next_bool(cfg.attribute_flip_rate) {
                        (-a) as f32
                    } else {
                        a as f32
                    }
                })
                .collect();
            let patch = PatchFeatureComponent::new(cfg.layout.clone(), features, occlusion)?;
            let image_id = format!("{subject}_p{i}");
            let signature = Signature::new(
                subject.clone(),
                image_id.clone(),
                patch,
                crate::signature::AttributeComponent::from_logits_named(logits, names.clone())?,
            )?;
            truth.push((image_id, subject.clone()));
            probes.push(Template::from_signature(signature));
        }
    }

    Ok(SynthBenchmark {
        config: cfg.clone(),
        gallery: Gallery::new(gallery_templates)?,
        probes,
        truth,
    })
}
