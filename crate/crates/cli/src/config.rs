//! TOML configuration files for the generator and the evaluation harness.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use facesig_core::evaluation::{EvaluationSplit, NamedMatcher};
use facesig_core::synth::SynthConfig;
use facesig_core::{Aggregation, AttributeSource, MatcherConfig, PatchLayout, WeightMode};

use crate::error::{CliError, Result};
use crate::manifest::{load_gallery, load_templates, read_accuracy_table, read_manifest};

/// Generator config file. Unset keys fall back to the library defaults.
///
/// ```toml
/// seed = 42
/// subjects = 50
/// images_per_subject = 4
/// layout = "SYNTH"        # or "PRFS" / "DPRFS"
/// patch_count = 8         # SYNTH layout only
/// feature_dim = 64        # SYNTH layout only
/// attribute_dim = 40
/// patch_noise_sigma = 2.0
/// corrupt_fraction = 0.3
/// occlusion_rate = 0.1
/// attribute_flip_rate = 0.05
/// ```
#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SynthFile {
    seed: Option<u64>,
    subjects: Option<usize>,
    images_per_subject: Option<usize>,
    layout: Option<String>,
    patch_count: Option<usize>,
    feature_dim: Option<usize>,
    attribute_dim: Option<usize>,
    patch_noise_sigma: Option<f64>,
    corrupt_fraction: Option<f64>,
    occlusion_rate: Option<f64>,
    attribute_flip_rate: Option<f64>,
}

pub fn parse_synth_config(text: &str) -> Result<SynthConfig> {
    let file: SynthFile =
        toml::from_str(text).map_err(|e| CliError::Format(format!("synth config: {e}")))?;
    let mut cfg = SynthConfig::default();
    if let Some(v) = file.seed {
        cfg.seed = v;
    }
    if let Some(v) = file.subjects {
        cfg.subjects = v;
    }
    if let Some(v) = file.images_per_subject {
        cfg.images_per_subject = v;
    }
    match file.layout.as_deref() {
        Some("PRFS") => cfg.layout = PatchLayout::prfs(),
        Some("DPRFS") => cfg.layout = PatchLayout::dprfs(),
        Some("SYNTH") | None => {
            let m = file.patch_count.unwrap_or(cfg.layout.patch_count);
            let n = file.feature_dim.unwrap_or(cfg.layout.feature_dim);
            cfg.layout = PatchLayout::new(m, n, "SYNTH")
                .map_err(|e| CliError::Validation(e.to_string()))?;
        }
        Some(other) => {
            return Err(CliError::Format(format!(
                "synth config: unknown layout '{other}' (expected PRFS, DPRFS, or SYNTH)"
            )));
        }
    }
    if file.layout.as_deref() == Some("PRFS") || file.layout.as_deref() == Some("DPRFS") {
        if file.patch_count.is_some() || file.feature_dim.is_some() {
            return Err(CliError::Format(
                "synth config: patch_count/feature_dim only apply to the SYNTH layout".to_string(),
            ));
        }
    }
    if let Some(v) = file.attribute_dim {
        cfg.attribute_dim = v;
    }
    if let Some(v) = file.patch_noise_sigma {
        cfg.patch_noise_sigma = v;
    }
    if let Some(v) = file.corrupt_fraction {
        cfg.corrupt_fraction = v;
    }
    if let Some(v) = file.occlusion_rate {
        cfg.occlusion_rate = v;
    }
    if let Some(v) = file.attribute_flip_rate {
        cfg.attribute_flip_rate = v;
    }
    cfg.check().map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(cfg)
}

pub fn read_synth_config(path: &Path) -> Result<SynthConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io_at(path, e))?;
    parse_synth_config(&text)
}

/// Evaluation config file: named splits plus optional method blocks.
///
/// ```toml
/// ranks = [1, 5]
///
/// [[method]]
/// name = "patch-only"
/// lambda = 0.0
/// matcher = "plain"       # plain / weighted / probe
/// # weights = "acc.csv"   # required for "weighted"
/// # agg = "max"           # or "mean"
/// # source = "logits"     # or "probabilities" / "binary"
///
/// [[split]]
/// name = "split-1"
/// gallery = "gallery.manifest"
/// probe = "probe.manifest"
/// ```
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalFile {
    ranks: Option<Vec<usize>>,
    #[serde(default)]
    method: Vec<MethodBlock>,
    #[serde(default)]
    split: Vec<SplitBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MethodBlock {
    name: String,
    lambda: Option<f64>,
    matcher: Option<String>,
    weights: Option<PathBuf>,
    agg: Option<String>,
    source: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitBlock {
    name: String,
    gallery: PathBuf,
    probe: PathBuf,
}

/// A fully loaded evaluation setup.
pub struct EvalSetup {
    pub ranks: Vec<usize>,
    pub methods: Vec<NamedMatcher>,
    pub splits: Vec<EvaluationSplit>,
}

pub fn parse_matcher_kind(s: &str) -> Result<WeightMode> {
    match s {
        "plain" => Ok(WeightMode::Uniform),
        "weighted" => Ok(WeightMode::Trained),
        "probe" => Ok(WeightMode::Probe),
        other => Err(CliError::Format(format!(
            "unknown matcher '{other}' (expected plain, weighted, or probe)"
        ))),
    }
}

pub fn parse_aggregation(s: &str) -> Result<Aggregation> {
    match s {
        "max" => Ok(Aggregation::Max),
        "mean" => Ok(Aggregation::Mean),
        other => Err(CliError::Format(format!(
            "unknown aggregation '{other}' (expected max or mean)"
        ))),
    }
}

pub fn parse_attribute_source(s: &str) -> Result<AttributeSource> {
    match s {
        "logits" => Ok(AttributeSource::Logits),
        "probabilities" => Ok(AttributeSource::Probabilities),
        "binary" => Ok(AttributeSource::Binary),
        other => Err(CliError::Format(format!(
            "unknown attribute source '{other}' (expected logits, probabilities, or binary)"
        ))),
    }
}

/// Assemble a matcher from its parts, loading the accuracy table when the
/// trained matcher is requested.
pub fn build_matcher(
    lambda: f64,
    mode: WeightMode,
    aggregation: Aggregation,
    source: AttributeSource,
    weights_path: Option<&Path>,
) -> Result<MatcherConfig> {
    let accuracy_table = match (mode, weights_path) {
        (WeightMode::Trained, Some(path)) => Some(read_accuracy_table(path)?),
        (WeightMode::Trained, None) => {
            return Err(CliError::Validation(
                "the weighted matcher requires --weights <accuracy table>".to_string(),
            ));
        }
        _ => None,
    };
    let mut matcher = MatcherConfig::plain(lambda).map_err(CliError::from)?;
    matcher.weight_mode = mode;
    matcher.aggregation = aggregation;
    matcher.accuracy_table = accuracy_table;
    matcher.fusion.attribute_source = source;
    Ok(matcher)
}

fn method_from_block(block: &MethodBlock, base_dir: &Path) -> Result<NamedMatcher> {
    let mode = parse_matcher_kind(block.matcher.as_deref().unwrap_or("plain"))?;
    let aggregation = parse_aggregation(block.agg.as_deref().unwrap_or("max"))?;
    let source = parse_attribute_source(block.source.as_deref().unwrap_or("logits"))?;
    let weights = block
        .weights
        .as_ref()
        .map(|p| if p.is_absolute() { p.clone() } else { base_dir.join(p) });
    let matcher = build_matcher(
        block.lambda.unwrap_or(facesig_core::DEFAULT_LAMBDA),
        mode,
        aggregation,
        source,
        weights.as_deref(),
    )?;
    Ok(NamedMatcher {
        name: block.name.clone(),
        matcher,
    })
}

/// Load an evaluation config and everything it references. `fallback` is
/// used as the single method when the file declares no `[[method]]` blocks.
pub fn read_eval_setup(path: &Path, fallback: NamedMatcher) -> Result<EvalSetup> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io_at(path, e))?;
    let file: EvalFile =
        toml::from_str(&text).map_err(|e| CliError::Format(format!("eval config: {e}")))?;
    let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();

    if file.split.is_empty() {
        return Err(CliError::Format(
            "eval config declares no [[split]] blocks".to_string(),
        ));
    }
    let methods = if file.method.is_empty() {
        vec![fallback]
    } else {
        file.method
            .iter()
            .map(|b| method_from_block(b, &base_dir))
            .collect::<Result<Vec<_>>>()?
    };

    let mut splits = Vec::with_capacity(file.split.len());
    for block in &file.split {
        let resolve = |p: &PathBuf| {
            if p.is_absolute() {
                p.clone()
            } else {
                base_dir.join(p)
            }
        };
        let gallery = load_gallery(&resolve(&block.gallery))?;
        let probe_entries = read_manifest(&resolve(&block.probe))?;
        let loaded = load_templates(&probe_entries)?;
        let split = EvaluationSplit::new(&block.name, gallery, loaded.templates, loaded.cells)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        splits.push(split);
    }

    Ok(EvalSetup {
        ranks: file.ranks.unwrap_or_else(|| vec![1]),
        methods,
        splits,
    })
}

/// Parse a `start:step:end` grid specification (inclusive of `end` up to a
/// half-step of rounding slack).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Format(format!("grid '{spec}': expected start:step:end"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let step: f64 = parts[1].parse().map_err(|_| bad())?;
    let end: f64 = parts[2].parse().map_err(|_| bad())?;
    if !(step > 0.0) || !start.is_finite() || !end.is_finite() || end < start {
        return Err(bad());
    }
    let mut grid = Vec::new();
    let mut i = 0u32;
    loop {
        let value = start + step * i as f64;
        if value > end + step * 1e-9 {
            break;
        }
        grid.push(value);
        i += 1;
        if i > 1_000_000 {
            return Err(CliError::Format(format!("grid '{spec}' is too large")));
        }
    }
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_defaults_and_overrides() {
        let cfg = parse_synth_config("").unwrap();
        assert_eq!(cfg, SynthConfig::default());

        let cfg = parse_synth_config(
            "seed = 9\nsubjects = 12\nlayout = \"DPRFS\"\ncorrupt_fraction = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.subjects, 12);
        assert_eq!(cfg.layout, PatchLayout::dprfs());
        assert_eq!(cfg.corrupt_fraction, 0.5);
    }

    #[test]
    fn synth_rejects_unknown_keys_and_bad_values() {
        assert!(parse_synth_config("nonsense = 1").is_err());
        assert!(parse_synth_config("occlusion_rate = 1.0").is_err());
        assert!(parse_synth_config("layout = \"WAT\"").is_err());
        assert!(parse_synth_config("layout = \"PRFS\"\npatch_count = 4").is_err());
    }

    #[test]
    fn custom_synth_layout() {
        let cfg = parse_synth_config("patch_count = 5\nfeature_dim = 12\n").unwrap();
        assert_eq!(cfg.layout.patch_count, 5);
        assert_eq!(cfg.layout.feature_dim, 12);
        assert_eq!(cfg.layout.scheme_name, "SYNTH");
    }

    #[test]
    fn grid_parsing() {
        let grid = parse_grid("0.1:0.1:1.0").unwrap();
        assert_eq!(grid.len(), 10);
        assert!((grid[0] - 0.1).abs() < 1e-12);
        assert!((grid[9] - 1.0).abs() < 1e-9);

        assert_eq!(parse_grid("0.5:0.1:0.5").unwrap().len(), 1);
        assert!(parse_grid("1:0:2").is_err());
        assert!(parse_grid("2:1:1").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }

    #[test]
    fn matcher_kind_names() {
        assert_eq!(parse_matcher_kind("plain").unwrap(), WeightMode::Uniform);
        assert_eq!(parse_matcher_kind("weighted").unwrap(), WeightMode::Trained);
        assert_eq!(parse_matcher_kind("probe").unwrap(), WeightMode::Probe);
        assert!(parse_matcher_kind("??").is_err());
    }
}
