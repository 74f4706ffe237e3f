//! Nonparametric method comparison over multiple datasets: Friedman test,
//! Iman-Davenport correction, and the two-tailed Bonferroni-Dunn critical
//! difference.
//!
//! Critical values (the F quantile and q_alpha) are read from standard
//! tables and supplied by the caller; [`CriticalValues::two_methods_p10`]
//! ships the pair used for two methods at the 0.10 level.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Per-dataset method ranks: N rows (datasets) by k columns (methods).
/// Rank 1 is best; ties carry the average of the tied positions, so every
/// row sums to k(k+1)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    rows: Vec<Vec<f64>>,
    methods: usize,
}

impl RankMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooFewMethods {
                needed: 2,
                actual: rows.len(),
            });
        }
        let k = rows[0].len();
        if k < 2 {
            return Err(Error::TooFewMethods {
                needed: 2,
                actual: k,
            });
        }
        let expected_sum = (k * (k + 1)) as f64 / 2.0;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    what: "rank row",
                    expected: k,
                    actual: row.len(),
                });
            }
            if row.iter().any(|r| !r.is_finite()) {
                return Err(Error::NonFinite("ranks"));
            }
            let sum: f64 = row.iter().sum();
            // average-tied ranks are multiples of 0.5; their sum is exact
            if math::abs(sum - expected_sum) > 1e-9 {
                return Err(Error::InvalidRankRow { row: i });
            }
        }
        Ok(RankMatrix { rows, methods: k })
    }

    pub fn datasets(&self) -> usize {
        self.rows.len()
    }

    pub fn methods(&self) -> usize {
        self.methods
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Average rank of each method across datasets.
    pub fn average_ranks(&self) -> Vec<f64> {
        let n = self.rows.len() as f64;
        (0..self.methods)
            .map(|j| self.rows.iter().map(|row| row[j]).sum::<f64>() / n)
            .collect()
    }
}

/// Rank one accuracy row: highest accuracy gets rank 1; tied values share
/// the average of their positions.
fn rank_row(row: &[f64]) -> Vec<f64> {
    let k = row.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    let mut ranks = alloc::vec![0.0; k];
    let mut i = 0;
    while i < k {
        let mut j = i;
        while j + 1 < k && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) hold equal values; average rank is
        // the mean of (i+1)..=(j+1)
        let avg = (i + j + 2) as f64 / 2.0;
        for &col in &order[i..=j] {
            ranks[col] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Convert an accuracy matrix (rows = datasets, columns = methods) into a
/// rank matrix: per dataset, rank 1 = best accuracy, average-tied.
pub fn rank_rows(accuracies: &[Vec<f64>]) -> Result<RankMatrix> {
    for row in accuracies {
        if row.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("accuracies"));
        }
    }
    RankMatrix::new(accuracies.iter().map(|row| rank_row(row)).collect())
}

/// Friedman statistic from average ranks:
/// `chi2 = 12N / (k(k+1)) * [sum R_j^2 - k(k+1)^2 / 4]`.
pub fn friedman_chi2(average_ranks: &[f64], datasets: usize) -> Result<f64> {
    let k = average_ranks.len();
    if k < 2 {
        return Err(Error::TooFewMethods {
            needed: 2,
            actual: k,
        });
    }
    if datasets < 1 {
        return Err(Error::NotPositive("dataset count"));
    }
    let n = datasets as f64;
    let kf = k as f64;
    let sum_sq: f64 = average_ranks.iter().map(|r| r * r).sum();
    let chi2 = 12.0 * n / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0) * (kf + 1.0) / 4.0);
    // exact-tie rounding can leave a tiny negative residue
    Ok(if chi2 < 0.0 && chi2 > -1e-9 { 0.0 } else { chi2 })
}

/// Iman-Davenport correction: `F_F = (N-1) chi2 / (N(k-1) - chi2)`,
/// F-distributed with (k-1, (k-1)(N-1)) degrees of freedom.
pub fn iman_davenport(chi2: f64, datasets: usize, methods: usize) -> Result<f64> {
    if chi2 < 0.0 || !chi2.is_finite() {
        return Err(Error::NonFinite("chi2"));
    }
    let denom = (datasets * (methods - 1)) as f64 - chi2;
    if denom <= 0.0 {
        return Err(Error::DegenerateStatistic);
    }
    Ok((datasets as f64 - 1.0) * chi2 / denom)
}

/// Two-tailed Bonferroni-Dunn critical difference:
/// `CD = q_alpha * sqrt(k(k+1) / (6N))`.
pub fn bonferroni_dunn_cd(q_alpha: f64, methods: usize, datasets: usize) -> Result<f64> {
    if !(q_alpha > 0.0) {
        return Err(Error::NotPositive("q_alpha"));
    }
    if methods < 2 {
        return Err(Error::TooFewMethods {
            needed: 2,
            actual: methods,
        });
    }
    if datasets < 1 {
        return Err(Error::NotPositive("dataset count"));
    }
    let k = methods as f64;
    Ok(q_alpha * math::sqrt(k * (k + 1.0) / (6.0 * datasets as f64)))
}

/// Table-supplied critical values for the full procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalValues {
    /// Critical value of the F distribution at (k-1, (k-1)(N-1)).
    pub f_critical: f64,
    /// Two-tailed Bonferroni-Dunn critical value.
    pub q_alpha: f64,
    /// Significance level the two values were read at (reporting only).
    pub alpha: f64,
}

impl CriticalValues {
    pub fn new(f_critical: f64, q_alpha: f64, alpha: f64) -> Result<Self> {
        if !(f_critical > 0.0) {
            return Err(Error::NotPositive("f_critical"));
        }
        if !(q_alpha > 0.0) {
            return Err(Error::NotPositive("q_alpha"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::OutOfRange {
                what: "alpha",
                value: alpha,
            });
        }
        Ok(CriticalValues {
            f_critical,
            q_alpha,
            alpha,
        })
    }

    /// Built-in pair for comparing two methods over 30 datasets at the 0.10
    /// level: F(1, 29) = 2.88 and q = 1.65.
    pub fn two_methods_p10() -> Self {
        CriticalValues {
            f_critical: 2.88,
            q_alpha: 1.65,
            alpha: 0.10,
        }
    }
}

/// Significance decision for one method pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDecision {
    pub method_a: String,
    pub method_b: String,
    /// `|R_a - R_b|`.
    pub rank_gap: f64,
    /// Whether the gap exceeds the critical difference.
    pub significant: bool,
    /// Name of the better-ranked (lower average rank) method.
    pub better: String,
}

/// Full output of the Friedman / Iman-Davenport / Bonferroni-Dunn pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceReport {
    pub method_names: Vec<String>,
    pub average_ranks: Vec<f64>,
    pub datasets: usize,
    pub chi2: f64,
    pub f_statistic: f64,
    pub critical: CriticalValues,
    /// Friedman null (all methods equivalent) rejected?
    pub null_rejected: bool,
    pub critical_difference: f64,
    pub pairs: Vec<PairDecision>,
}

impl SignificanceReport {
    /// Run the pipeline from already-computed average ranks.
    pub fn from_average_ranks(
        method_names: &[String],
        average_ranks: &[f64],
        datasets: usize,
        critical: CriticalValues,
    ) -> Result<Self> {
        let k = average_ranks.len();
        if method_names.len() != k {
            return Err(Error::DimensionMismatch {
                what: "method names",
                expected: k,
                actual: method_names.len(),
            });
        }
        let chi2 = friedman_chi2(average_ranks, datasets)?;
        let f_statistic = iman_davenport(chi2, datasets, k)?;
        let null_rejected = f_statistic > critical.f_critical;
        let critical_difference = bonferroni_dunn_cd(critical.q_alpha, k, datasets)?;
        let mut pairs = Vec::new();
        for a in 0..k {
            for b in (a + 1)..k {
                let gap = math::abs(average_ranks[a] - average_ranks[b]);
                let better = if average_ranks[a] <= average_ranks[b] {
                    method_names[a].clone()
                } else {
                    method_names[b].clone()
                };
                pairs.push(PairDecision {
                    method_a: method_names[a].clone(),
                    method_b: method_names[b].clone(),
                    rank_gap: gap,
                    significant: gap > critical_difference,
                    better,
                });
            }
        }
        Ok(SignificanceReport {
            method_names: method_names.to_vec(),
            average_ranks: average_ranks.to_vec(),
            datasets,
            chi2,
            f_statistic,
            critical,
            null_rejected,
            critical_difference,
            pairs,
        })
    }

    /// Run the pipeline from a raw accuracy matrix (rows = datasets,
    /// columns = methods).
    pub fn from_accuracies(
        method_names: &[String],
        accuracies: &[Vec<f64>],
        critical: CriticalValues,
    ) -> Result<Self> {
        let ranks = rank_rows(accuracies)?;
        if method_names.len() != ranks.methods() {
            return Err(Error::DimensionMismatch {
                what: "method names",
                expected: ranks.methods(),
                actual: method_names.len(),
            });
        }
        Self::from_average_ranks(
            method_names,
            &ranks.average_ranks(),
            ranks.datasets(),
            critical,
        )
    }
}

/// Compare methods over datasets end to end. Convenience wrapper around
/// [`SignificanceReport::from_accuracies`].
pub fn compare_methods(
    method_names: &[String],
    accuracies: &[Vec<f64>],
    critical: CriticalValues,
) -> Result<SignificanceReport> {
    SignificanceReport::from_accuracies(method_names, accuracies, critical)
}

impl core::fmt::Display for SignificanceReport {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        writeln!(
            f,
            "Friedman comparison over {} datasets, {} methods (alpha = {:.2})",
            self.datasets,
            self.method_names.len(),
            self.critical.alpha
        )?;
        for (name, rank) in self.method_names.iter().zip(&self.average_ranks) {
            writeln!(f, "  average rank  {name}: {rank:.4}")?;
        }
        writeln!(f, "  chi2_F = {:.4}", self.chi2)?;
        writeln!(
            f,
            "  F_F = {:.4} vs critical {:.4} -> null hypothesis {}",
            self.f_statistic,
            self.critical.f_critical,
            if self.null_rejected {
                "rejected"
            } else {
                "accepted"
            }
        )?;
        writeln!(
            f,
            "  critical difference (q = {:.4}): {:.4}",
            self.critical.q_alpha, self.critical_difference
        )?;
        for p in &self.pairs {
            if p.significant {
                writeln!(
                    f,
                    "  {} vs {}: rank gap {:.4} > CD -> {} performs significantly better",
                    p.method_a, p.method_b, p.rank_gap, p.better
                )?;
            } else {
                writeln!(
                    f,
                    "  {} vs {}: rank gap {:.4} <= CD -> not significant",
                    p.method_a, p.method_b, p.rank_gap
                )?;
            }
        }
        Ok(())
    }
}
