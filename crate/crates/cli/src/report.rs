//! CSV report emission and ingestion.
//!
//! All emitters are deterministic: same inputs, same bytes. Accuracy values
//! are written with two decimals; scores with twelve. Labels come from
//! manifests and config files, whose comma-separated syntax already keeps
//! commas out of identifiers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use facesig_core::evaluation::{AccuracyReport, CellTable, LambdaCurve, MethodSplitMatrix};
use facesig_core::stats::SignificanceReport;
use facesig_core::{AttributeOverlap, RankedList, ScoreBreakdown};

use crate::error::{CliError, Result};

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::io_at(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| CliError::io_at(path, e))
}

/// Ranked lists as CSV. Skipped gallery subjects follow the ranked entries
/// of their probe with an empty rank and a reason note.
pub fn render_ranked_csv(lists: &[(String, std::result::Result<RankedList, String>)]) -> String {
    let mut out = String::from(
        "probe_id,rank,subject_id,fused_score,patch_score,attribute_score,non_occluded_pairs,note\n",
    );
    for (probe_id, result) in lists {
        match result {
            Ok(list) => {
                for (i, entry) in list.entries.iter().enumerate() {
                    writeln!(
                        out,
                        "{},{},{},{:.12},{:.12},{:.12},{},",
                        probe_id,
                        i + 1,
                        entry.subject_id,
                        entry.score,
                        entry.breakdown.patch_score,
                        entry.breakdown.attribute_score,
                        entry.breakdown.non_occluded_pairs
                    )
                    .unwrap();
                }
                for (subject, reason) in &list.skipped_subjects {
                    writeln!(out, "{probe_id},,{subject},,,,,skipped: {reason}").unwrap();
                }
            }
            Err(reason) => {
                writeln!(out, "{probe_id},,,,,,,failed: {reason}").unwrap();
            }
        }
    }
    out
}

/// Long-form accuracy rows: `method,split,k,accuracy`.
pub fn render_accuracy_csv(reports: &[(String, AccuracyReport)]) -> String {
    let mut out = String::from("method,split,k,accuracy\n");
    for (method, report) in reports {
        for &(k, accuracy) in &report.rank_accuracies {
            writeln!(out, "{method},{},{k},{accuracy:.2}", report.split).unwrap();
        }
    }
    out
}

/// Per-cell rank-1 table: `method,split,cell,probes,accuracy`.
pub fn render_cell_csv(tables: &[(String, String, CellTable)]) -> String {
    let mut out = String::from("method,split,cell,probes,accuracy\n");
    for (method, split, table) in tables {
        for (cell, accuracy, probes) in &table.cells {
            writeln!(out, "{method},{split},{cell},{probes},{accuracy:.2}").unwrap();
        }
        writeln!(
            out,
            "{method},{split},overall,{},{:.2}",
            table.cells.iter().map(|c| c.2).sum::<usize>(),
            table.overall
        )
        .unwrap();
    }
    out
}

/// Accuracy matrix for the significance pipeline: one row per split, one
/// column per method. Failed cells are left empty.
pub fn render_matrix_csv(matrix: &MethodSplitMatrix) -> String {
    let mut out = String::from("split");
    for method in &matrix.methods {
        write!(out, ",{method}").unwrap();
    }
    out.push('\n');
    for (split, row) in matrix.splits.iter().zip(&matrix.cells) {
        write!(out, "{split}").unwrap();
        for cell in row {
            match cell {
                Some(v) => write!(out, ",{v:.2}").unwrap(),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Parse a matrix CSV back into method names and per-split accuracy rows.
pub fn parse_matrix_csv(text: &str) -> Result<(Vec<String>, Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::Format("matrix CSV is empty".to_string()))?;
    let mut columns = header.split(',');
    let first = columns.next().unwrap_or_default();
    if first != "split" {
        return Err(CliError::Format(format!(
            "matrix CSV must start with a 'split' column, found '{first}'"
        )));
    }
    let methods: Vec<String> = columns.map(|s| s.to_string()).collect();
    if methods.len() < 2 {
        return Err(CliError::Format(
            "matrix CSV needs at least two method columns".to_string(),
        ));
    }
    let mut splits = Vec::new();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let split = fields.next().unwrap_or_default();
        let values: Vec<&str> = fields.collect();
        if values.len() != methods.len() {
            return Err(CliError::Format(format!(
                "matrix CSV row {}: expected {} values, found {}",
                lineno + 2,
                methods.len(),
                values.len()
            )));
        }
        let mut row = Vec::with_capacity(values.len());
        for value in values {
            let parsed: f64 = value.trim().parse().map_err(|_| {
                CliError::Format(format!(
                    "matrix CSV row {}: '{}' is not a number",
                    lineno + 2,
                    value
                ))
            })?;
            row.push(parsed);
        }
        splits.push(split.to_string());
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(CliError::Format(
            "matrix CSV needs at least two split rows".to_string(),
        ));
    }
    Ok((methods, splits, rows))
}

/// Lambda sweep curve: `lambda,mean_rank1`.
pub fn render_curve_csv(curve: &LambdaCurve) -> String {
    let mut out = String::from("lambda,mean_rank1\n");
    for &(lambda, accuracy) in &curve.points {
        writeln!(out, "{lambda},{accuracy:.2}").unwrap();
    }
    out
}

/// Machine-readable significance report: `key,value` rows plus one row per
/// method pair.
pub fn render_stats_csv(report: &SignificanceReport) -> String {
    let mut out = String::from("key,value\n");
    writeln!(out, "datasets,{}", report.datasets).unwrap();
    writeln!(out, "methods,{}", report.method_names.len()).unwrap();
    for (name, rank) in report.method_names.iter().zip(&report.average_ranks) {
        writeln!(out, "average_rank.{name},{rank:.6}").unwrap();
    }
    writeln!(out, "chi2,{:.6}", report.chi2).unwrap();
    writeln!(out, "f_statistic,{:.6}", report.f_statistic).unwrap();
    writeln!(out, "f_critical,{:.6}", report.critical.f_critical).unwrap();
    writeln!(out, "null_rejected,{}", report.null_rejected).unwrap();
    writeln!(out, "q_alpha,{:.6}", report.critical.q_alpha).unwrap();
    writeln!(out, "critical_difference,{:.6}", report.critical_difference).unwrap();
    out.push_str("pair_a,pair_b,rank_gap,significant,better\n");
    for pair in &report.pairs {
        writeln!(
            out,
            "{},{},{:.6},{},{}",
            pair.method_a, pair.method_b, pair.rank_gap, pair.significant, pair.better
        )
        .unwrap();
    }
    out
}

/// Human-readable score breakdown plus the attribute overlap explanation,
/// as printed by `facesig match`.
pub fn render_match_output(
    breakdown: &ScoreBreakdown,
    lambda: f64,
    overlap: &AttributeOverlap,
) -> String {
    let mut out = String::new();
    writeln!(out, "patch_score: {:.12}", breakdown.patch_score).unwrap();
    writeln!(out, "attribute_score: {:.12}", breakdown.attribute_score).unwrap();
    writeln!(out, "lambda: {lambda}").unwrap();
    writeln!(out, "fused_score: {:.12}", breakdown.fused_score).unwrap();
    writeln!(out, "non_occluded_pairs: {}", breakdown.non_occluded_pairs).unwrap();
    writeln!(out, "shared_attributes: {}", overlap.shared.join("; ")).unwrap();
    writeln!(out, "gallery_only: {}", overlap.gallery_only.join("; ")).unwrap();
    writeln!(out, "probe_only: {}", overlap.probe_only.join("; ")).unwrap();
    out
}

/// Truth rows: `template_id,subject_id`.
pub fn render_truth_csv(truth: &[(String, String)]) -> String {
    let mut out = String::from("template_id,subject_id\n");
    for (template, subject) in truth {
        writeln!(out, "{template},{subject}").unwrap();
    }
    out
}

/// Parse a truth CSV back into a map.
pub fn parse_truth_csv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 && line.starts_with("template_id") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (template, subject) = line.split_once(',').ok_or_else(|| {
            CliError::Format(format!("truth CSV line {}: expected two fields", lineno + 1))
        })?;
        map.insert(template.to_string(), subject.to_string());
    }
    Ok(map)
}
