//! Rank-k evaluation: accuracy over ranked lists, per-cell breakdowns,
//! lambda sensitivity sweeps, and multi-method accuracy matrices.
//!
//! Probes whose identification failed outright (for example when every
//! gallery subject is occlusion-skipped) count as misses but stay in the
//! denominator, and are reported separately so denominators are auditable.
//! Percentages are plain f64 here; rounding to two decimals happens at the
//! reporting layer.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::identification::{batch_identify, Gallery, MatcherConfig, RankedList, Template};

/// One gallery/probe split, closed set: every probe subject is enrolled.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSplit {
    pub name: String,
    pub gallery: Gallery,
    pub probes: Vec<Template>,
    /// Optional per-probe cell label (for example a pose bucket), aligned
    /// with `probes`.
    pub cells: Option<Vec<String>>,
}

impl EvaluationSplit {
    pub fn new(
        name: &str,
        gallery: Gallery,
        probes: Vec<Template>,
        cells: Option<Vec<String>>,
    ) -> Result<Self> {
        if probes.is_empty() {
            return Err(Error::EmptyProbeSet);
        }
        for probe in &probes {
            if !gallery.contains_subject(&probe.subject_id) {
                return Err(Error::UnknownSubject {
                    probe: probe.template_id.clone(),
                    subject: probe.subject_id.clone(),
                });
            }
        }
        if let Some(cells) = &cells {
            if cells.len() != probes.len() {
                return Err(Error::DimensionMismatch {
                    what: "cell labels",
                    expected: probes.len(),
                    actual: cells.len(),
                });
            }
        }
        Ok(EvaluationSplit {
            name: name.to_string(),
            gallery,
            probes,
            cells,
        })
    }

    /// Probe template id -> true subject id.
    pub fn truth(&self) -> BTreeMap<String, String> {
        self.probes
            .iter()
            .map(|p| (p.template_id.clone(), p.subject_id.clone()))
            .collect()
    }
}

/// Rank-k accuracy in percent: the share of probes whose true subject appears
/// among the top k entries. Probes whose true subject was skipped (or that
/// produced no entries at all) are misses.
pub fn rank_k_accuracy(
    ranked: &[RankedList],
    truth: &BTreeMap<String, String>,
    k: usize,
) -> Result<f64> {
    if k < 1 {
        return Err(Error::NotPositive("k"));
    }
    if ranked.is_empty() {
        return Err(Error::EmptyProbeSet);
    }
    let mut hits = 0usize;
    for list in ranked {
        let subject = truth
            .get(&list.probe_id)
            .ok_or_else(|| Error::MissingTruth(list.probe_id.clone()))?;
        if let Some(rank) = list.rank_of(subject) {
            if rank <= k {
                hits += 1;
            }
        }
    }
    Ok(100.0 * hits as f64 / ranked.len() as f64)
}

/// Rank-1 accuracy per cell label plus the overall figure.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTable {
    /// (cell label, rank-1 accuracy, probes in the cell), sorted by label.
    pub cells: Vec<(String, f64, usize)>,
    pub overall: f64,
}

/// Split ranked lists by cell label and compute rank-1 accuracy per cell.
/// Cells with no probes simply do not appear.
pub fn per_cell_accuracy(
    ranked: &[RankedList],
    truth: &BTreeMap<String, String>,
    cell_labels: &BTreeMap<String, String>,
) -> Result<CellTable> {
    if ranked.is_empty() {
        return Err(Error::EmptyProbeSet);
    }
    let mut buckets: BTreeMap<&str, Vec<&RankedList>> = BTreeMap::new();
    for list in ranked {
        let label = cell_labels
            .get(&list.probe_id)
            .ok_or_else(|| Error::UnlabeledProbe(list.probe_id.clone()))?;
        buckets.entry(label).or_default().push(list);
    }
    let mut cells = Vec::with_capacity(buckets.len());
    for (label, lists) in &buckets {
        let owned: Vec<RankedList> = lists.iter().map(|l| (*l).clone()).collect();
        let accuracy = rank_k_accuracy(&owned, truth, 1)?;
        cells.push((label.to_string(), accuracy, lists.len()));
    }
    Ok(CellTable {
        cells,
        overall: rank_k_accuracy(ranked, truth, 1)?,
    })
}

/// Accuracy summary of one method on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub split: String,
    /// (k, rank-k accuracy) for each requested k, ascending.
    pub rank_accuracies: Vec<(usize, f64)>,
    pub per_cell: Option<CellTable>,
    /// Probes that produced a ranked list.
    pub evaluated: usize,
    /// Probes whose identification failed; counted as misses at every k.
    pub skipped: usize,
}

/// Evaluate one matcher on one split for the requested ranks.
///
/// Rank-k accuracy here uses all probes as the denominator; a probe whose
/// identification failed is a miss at every k.
pub fn evaluate_split(
    split: &EvaluationSplit,
    matcher: &MatcherConfig,
    ranks: &[usize],
) -> Result<AccuracyReport> {
    if ranks.is_empty() || ranks.iter().any(|&k| k < 1) {
        return Err(Error::NotPositive("rank list"));
    }
    let truth = split.truth();
    let results = batch_identify(&split.probes, &split.gallery, matcher);
    let mut ranked = Vec::new();
    let mut skipped = 0usize;
    for result in results {
        match result {
            Ok(list) => ranked.push(list),
            Err(Error::AllSubjectsSkipped) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if ranked.is_empty() {
        return Err(Error::AllSubjectsSkipped);
    }
    let total = split.probes.len() as f64;
    let scale = ranked.len() as f64 / total;
    let mut rank_accuracies = Vec::with_capacity(ranks.len());
    let mut sorted_ranks: Vec<usize> = ranks.to_vec();
    sorted_ranks.sort_unstable();
    sorted_ranks.dedup();
    for &k in &sorted_ranks {
        // rescale so failed probes count as misses
        rank_accuracies.push((k, rank_k_accuracy(&ranked, &truth, k)? * scale));
    }
    let per_cell = match &split.cells {
        Some(cells) => {
            let labels: BTreeMap<String, String> = split
                .probes
                .iter()
                .zip(cells)
                .map(|(p, c)| (p.template_id.clone(), c.clone()))
                .collect();
            Some(per_cell_accuracy(&ranked, &truth, &labels)?)
        }
        None => None,
    };
    Ok(AccuracyReport {
        split: split.name.clone(),
        rank_accuracies,
        per_cell,
        evaluated: ranked.len(),
        skipped,
    })
}

/// Result of a lambda sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaCurve {
    /// (lambda, mean rank-1 accuracy across splits), in grid order.
    pub points: Vec<(f64, f64)>,
    /// Grid value with the highest mean accuracy; ties go to the smallest
    /// lambda.
    pub best: f64,
}

/// Sweep the fusion weight over `grid`, evaluating mean rank-1 accuracy
/// across `splits` with the given matcher template.
pub fn lambda_grid_search(
    splits: &[EvaluationSplit],
    grid: &[f64],
    base: &MatcherConfig,
) -> Result<LambdaCurve> {
    if splits.is_empty() {
        return Err(Error::EmptySplits);
    }
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &lambda in grid {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::NonFinite("lambda grid"));
        }
    }
    let mut points = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let matcher = base.clone().with_lambda(lambda);
        let mut sum = 0.0;
        for split in splits {
            let report = evaluate_split(split, &matcher, &[1])?;
            sum += report.rank_accuracies[0].1;
        }
        points.push((lambda, sum / splits.len() as f64));
    }
    let mut best = points[0];
    for &(lambda, acc) in &points[1..] {
        if acc > best.1 || (acc == best.1 && lambda < best.0) {
            best = (lambda, acc);
        }
    }
    Ok(LambdaCurve {
        points,
        best: best.0,
    })
}

/// A named matcher configuration for multi-method comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedMatcher {
    pub name: String,
    pub matcher: MatcherConfig,
}

/// Rank-1 accuracy matrix: one row per split, one column per method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSplitMatrix {
    pub methods: Vec<String>,
    pub splits: Vec<String>,
    /// `cells[split][method]`; `None` marks a recorded failure.
    pub cells: Vec<Vec<Option<f64>>>,
    /// (method, split, error message) for every failed evaluation.
    pub failures: Vec<(String, String, String)>,
}

impl MethodSplitMatrix {
    /// Rows as plain accuracies, available only when nothing failed.
    pub fn dense(&self) -> Option<Vec<Vec<f64>>> {
        self.cells
            .iter()
            .map(|row| row.iter().copied().collect::<Option<Vec<f64>>>())
            .collect()
    }
}

/// Evaluate every method on every split at rank 1. Method failures are
/// recorded in the matrix rather than aborting the sweep.
pub fn compare_methods(
    methods: &[NamedMatcher],
    splits: &[EvaluationSplit],
) -> Result<MethodSplitMatrix> {
    if methods.len() < 2 {
        return Err(Error::TooFewMethods {
            needed: 2,
            actual: methods.len(),
        });
    }
    if splits.len() < 2 {
        return Err(Error::EmptySplits);
    }
    let mut cells = Vec::with_capacity(splits.len());
    let mut failures = Vec::new();
    for split in splits {
        let mut row = Vec::with_capacity(methods.len());
        for method in methods {
            match evaluate_split(split, &method.matcher, &[1]) {
                Ok(report) => row.push(Some(report.rank_accuracies[0].1)),
                Err(e) => {
                    failures.push((method.name.clone(), split.name.clone(), e.to_string()));
                    row.push(None);
                }
            }
        }
        cells.push(row);
    }
    Ok(MethodSplitMatrix {
        methods: methods.iter().map(|m| m.name.clone()).collect(),
        splits: splits.iter().map(|s| s.name.clone()).collect(),
        cells,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identification::identify;
    use crate::signature::PatchLayout;
    use crate::synth::{generate_benchmark, SynthConfig};
    use alloc::vec;

    fn bench_config(seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            subjects: 8,
            images_per_subject: 3,
            layout: PatchLayout::new(4, 16, "SYNTH").unwrap(),
            attribute_dim: 6,
            patch_noise_sigma: 0.8,
            corrupt_fraction: 0.2,
            occlusion_rate: 0.1,
            attribute_flip_rate: 0.1,
        }
    }

    fn split_from(seed: u64, name: &str) -> EvaluationSplit {
        let bench = generate_benchmark(&bench_config(seed)).unwrap();
        EvaluationSplit::new(name, bench.gallery, bench.probes, None).unwrap()
    }

    #[test]
    fn closed_set_is_enforced() {
        let bench = generate_benchmark(&bench_config(1)).unwrap();
        let mut probes = bench.probes.clone();
        let stray = {
            let mut sig = probes[0].first().clone();
            sig.subject_id = "stranger".to_string();
            Template::from_signature(sig)
        };
        probes.push(stray);
        assert!(matches!(
            EvaluationSplit::new("s", bench.gallery, probes, None),
            Err(Error::UnknownSubject { .. })
        ));
    }

    #[test]
    fn copies_of_gallery_images_score_perfectly() {
        let bench = generate_benchmark(&SynthConfig {
            patch_noise_sigma: 0.0,
            corrupt_fraction: 0.0,
            occlusion_rate: 0.0,
            attribute_flip_rate: 0.0,
            ..bench_config(3)
        })
        .unwrap();
        let split =
            EvaluationSplit::new("clean", bench.gallery, bench.probes, None).unwrap();
        let report = evaluate_split(&split, &MatcherConfig::plain(0.1).unwrap(), &[1]).unwrap();
        assert_eq!(report.rank_accuracies[0].1, 100.0);
        assert_eq!(report.skipped, 0);
    }

    #[test]
    fn rank_equal_to_gallery_size_is_exhaustive() {
        let split = split_from(5, "s5");
        let gallery_size = split.gallery.len();
        let report = evaluate_split(
            &split,
            &MatcherConfig::plain(0.1).unwrap(),
            &[1, gallery_size],
        )
        .unwrap();
        assert_eq!(report.skipped, 0);
        assert_eq!(report.rank_accuracies.last().unwrap().1, 100.0);
    }

    #[test]
    fn rank_k_accuracy_matches_hand_tally() {
        let split = split_from(7, "s7");
        let matcher = MatcherConfig::plain(0.1).unwrap();
        let truth = split.truth();
        let ranked: Vec<_> = batch_identify(&split.probes, &split.gallery, &matcher)
            .into_iter()
            .map(|r| r.unwrap())
            .collect();

        // independent tally
        for k in [1usize, 2, 3] {
            let mut hits = 0usize;
            for list in &ranked {
                let subject = &truth[&list.probe_id];
                let in_top_k = list
                    .entries
                    .iter()
                    .take(k)
                    .any(|e| &e.subject_id == subject);
                if in_top_k {
                    hits += 1;
                }
            }
            let expected = 100.0 * hits as f64 / ranked.len() as f64;
            assert_eq!(rank_k_accuracy(&ranked, &truth, k).unwrap(), expected);
        }
    }

    #[test]
    fn rank_k_accuracy_is_nondecreasing_in_k() {
        let split = split_from(11, "s11");
        let matcher = MatcherConfig::plain(0.1).unwrap();
        let report = evaluate_split(&split, &matcher, &[1, 2, 3, 4, 8]).unwrap();
        let accs: Vec<f64> = report.rank_accuracies.iter().map(|&(_, a)| a).collect();
        for pair in accs.windows(2) {
            assert!(pair[0] <= pair[1]);
        }
    }

    #[test]
    fn relabeling_subjects_consistently_preserves_accuracy() {
        let bench = generate_benchmark(&bench_config(13)).unwrap();
        let matcher = MatcherConfig::plain(0.1).unwrap();
        let split =
            EvaluationSplit::new("orig", bench.gallery.clone(), bench.probes.clone(), None)
                .unwrap();
        let before = evaluate_split(&split, &matcher, &[1]).unwrap();

        let relabel = |s: &str| alloc::format!("X-{s}");
        let relabel_template = |t: &Template| {
            let members: Vec<_> = t
                .members()
                .iter()
                .map(|m| {
                    let mut sig = m.clone();
                    sig.subject_id = relabel(&sig.subject_id);
                    sig
                })
                .collect();
            Template::new(&t.template_id, members).unwrap()
        };
        let gallery = Gallery::new(
            bench
                .gallery
                .templates()
                .iter()
                .map(relabel_template)
                .collect(),
        )
        .unwrap();
        let probes: Vec<_> = bench.probes.iter().map(relabel_template).collect();
        let split2 = EvaluationSplit::new("relabel", gallery, probes, None).unwrap();
        let after = evaluate_split(&split2, &matcher, &[1]).unwrap();
        assert_eq!(before.rank_accuracies, after.rank_accuracies);
    }

    #[test]
    fn per_cell_single_label_reduces_to_rank1() {
        let bench = generate_benchmark(&bench_config(17)).unwrap();
        let n = bench.probes.len();
        let split = EvaluationSplit::new(
            "cells",
            bench.gallery,
            bench.probes,
            Some(vec!["all".to_string(); n]),
        )
        .unwrap();
        let report = evaluate_split(&split, &MatcherConfig::plain(0.1).unwrap(), &[1]).unwrap();
        let table = report.per_cell.unwrap();
        assert_eq!(table.cells.len(), 1);
        assert_eq!(table.cells[0].0, "all");
        assert_eq!(table.cells[0].1, table.overall);
        assert_eq!(table.cells[0].1, report.rank_accuracies[0].1);
    }

    #[test]
    fn per_cell_two_cells_tally_separately() {
        // cell "easy" holds exact gallery copies; cell "hard" holds noise
        let clean = generate_benchmark(&SynthConfig {
            patch_noise_sigma: 0.0,
            corrupt_fraction: 0.0,
            occlusion_rate: 0.0,
            attribute_flip_rate: 0.0,
            images_per_subject: 1,
            ..bench_config(19)
        })
        .unwrap();
        let noisy = generate_benchmark(&SynthConfig {
            images_per_subject: 1,
            patch_noise_sigma: 3.0,
            corrupt_fraction: 0.8,
            ..bench_config(19)
        })
        .unwrap();
        // same gallery (same seed draws identical latents and gallery noise)
        let mut probes = clean.probes.clone();
        let mut cells = vec!["easy".to_string(); probes.len()];
        for (i, t) in noisy.probes.iter().enumerate() {
            let mut sig = t.first().clone();
            sig.image_id = alloc::format!("hard_{i}");
            probes.push(Template::from_signature(sig));
            cells.push("hard".to_string());
        }
        let split = EvaluationSplit::new("mixed", clean.gallery, probes, Some(cells)).unwrap();
        let report = evaluate_split(&split, &MatcherConfig::plain(0.1).unwrap(), &[1]).unwrap();
        let table = report.per_cell.unwrap();
        assert_eq!(table.cells.len(), 2);
        assert_eq!(table.cells[0].0, "easy");
        assert_eq!(table.cells[0].1, 100.0);

        // hand recomputation of the overall figure
        let (e, h) = (table.cells[0].clone(), table.cells[1].clone());
        let total = (e.2 + h.2) as f64;
        let hand = (e.1 * e.2 as f64 + h.1 * h.2 as f64) / total;
        assert!((table.overall - hand).abs() < 1e-9);
    }

    #[test]
    fn unlabeled_probe_is_an_error() {
        let bench = generate_benchmark(&bench_config(23)).unwrap();
        let truth = bench
            .truth
            .iter()
            .cloned()
            .collect::<BTreeMap<String, String>>();
        let ranked: Vec<_> =
            batch_identify(&bench.probes, &bench.gallery, &MatcherConfig::plain(0.1).unwrap())
                .into_iter()
                .map(|r| r.unwrap())
                .collect();
        let labels = BTreeMap::new();
        assert!(matches!(
            per_cell_accuracy(&ranked, &truth, &labels),
            Err(Error::UnlabeledProbe(_))
        ));
    }

    #[test]
    fn lambda_grid_singleton_and_tie_rules() {
        let splits = vec![split_from(29, "a")];
        let base = MatcherConfig::plain(0.0).unwrap();
        let single = lambda_grid_search(&splits, &[0.7], &base).unwrap();
        assert_eq!(single.best, 0.7);

        // a noiseless benchmark scores 100% at every lambda: tie -> smallest
        let clean = generate_benchmark(&SynthConfig {
            patch_noise_sigma: 0.0,
            corrupt_fraction: 0.0,
            occlusion_rate: 0.0,
            attribute_flip_rate: 0.0,
            ..bench_config(31)
        })
        .unwrap();
        let splits = vec![EvaluationSplit::new("clean", clean.gallery, clean.probes, None).unwrap()];
        let grid: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let curve = lambda_grid_search(&splits, &grid, &base).unwrap();
        assert_eq!(curve.best, 0.1);
        assert!(curve.points.iter().all(|&(_, a)| a == 100.0));
    }

    #[test]
    fn lambda_grid_argmax_matches_exhaustive_evaluation() {
        let splits = vec![split_from(37, "a"), split_from(41, "b")];
        let base = MatcherConfig::plain(0.0).unwrap();
        let grid = [0.0, 0.1, 0.3, 0.7];
        let curve = lambda_grid_search(&splits, &grid, &base).unwrap();

        // independent exhaustive evaluation
        let mut best = (f64::INFINITY, f64::NEG_INFINITY);
        for &lambda in &grid {
            let matcher = base.clone().with_lambda(lambda);
            let mean = splits
                .iter()
                .map(|s| {
                    evaluate_split(s, &matcher, &[1]).unwrap().rank_accuracies[0].1
                })
                .sum::<f64>()
                / splits.len() as f64;
            let point = curve.points.iter().find(|&&(l, _)| l == lambda).unwrap();
            assert_eq!(point.1, mean);
            if mean > best.1 || (mean == best.1 && lambda < best.0) {
                best = (lambda, mean);
            }
        }
        assert_eq!(curve.best, best.0);
    }

    #[test]
    fn compare_methods_shape_and_duplicate_methods() {
        let splits = vec![split_from(43, "a"), split_from(47, "b"), split_from(53, "c")];
        let methods = vec![
            NamedMatcher {
                name: "patch-only".to_string(),
                matcher: MatcherConfig::plain(0.0).unwrap(),
            },
            NamedMatcher {
                name: "also-patch-only".to_string(),
                matcher: MatcherConfig::plain(0.0).unwrap(),
            },
        ];
        let matrix = compare_methods(&methods, &splits).unwrap();
        assert_eq!(matrix.cells.len(), 3);
        assert_eq!(matrix.cells[0].len(), 2);
        assert!(matrix.failures.is_empty());
        // identical configs produce identical columns
        for row in &matrix.cells {
            assert_eq!(row[0], row[1]);
        }
        // values equal independent per-split evaluation
        for (row, split) in matrix.cells.iter().zip(&splits) {
            let direct = evaluate_split(split, &methods[0].matcher, &[1])
                .unwrap()
                .rank_accuracies[0]
                .1;
            assert_eq!(row[0].unwrap(), direct);
        }
        assert!(matrix.dense().is_some());
    }

    #[test]
    fn identify_and_evaluate_agree_on_ranked_lists() {
        let split = split_from(59, "agree");
        let matcher = MatcherConfig::plain(0.1).unwrap();
        let from_batch = batch_identify(&split.probes, &split.gallery, &matcher);
        for (probe, result) in split.probes.iter().zip(from_batch) {
            let direct = identify(probe, &split.gallery, &matcher).unwrap();
            assert_eq!(direct, result.unwrap());
        }
    }
}
