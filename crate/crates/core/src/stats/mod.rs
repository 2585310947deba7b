//! Descriptive summaries, contingency-table tests and Kruskal-Wallis.

pub mod special;

use serde::Serialize;
use thiserror::Error;

pub use special::{chi_square_cdf, chi_square_sf, normal_two_sided_p, std_normal_cdf};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("contingency table must be at least 2x2, got {rows}x{cols}")]
    TooSmall { rows: usize, cols: usize },
    #[error("contingency table {0} has a zero total")]
    ZeroMargin(String),
    #[error("table shape does not match its labels")]
    Shape,
    #[error("Kruskal-Wallis needs at least 2 non-empty groups and 3 observations")]
    Groups,
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiveNumberSummary {
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile of sorted data by linear interpolation between closest ranks.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn describe(values: &[f64]) -> Result<FiveNumberSummary, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(FiveNumberSummary {
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self, StatsError> {
        if counts.len() != row_labels.len() || counts.iter().any(|r| r.len() != col_labels.len()) {
            return Err(StatsError::Shape);
        }
        Ok(Self {
            row_labels,
            col_labels,
            counts,
        })
    }

    /// Unlabeled table, rows and columns numbered from 0.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, StatsError> {
        let rows = counts.len();
        let cols = counts.first().map_or(0, Vec::len);
        Self::new(
            (0..rows).map(|i| i.to_string()).collect(),
            (0..cols).map(|j| j.to_string()).collect(),
            counts,
        )
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.col_labels.len())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn grand_total(&self) -> u64 {
        self.row_totals().iter().sum()
    }

    /// Copy without all-zero rows and columns.
    pub fn drop_empty(&self) -> Self {
        let rows = self.row_totals();
        let cols = self.col_totals();
        let keep_cols: Vec<usize> = (0..cols.len()).filter(|&j| cols[j] > 0).collect();
        let keep_rows: Vec<usize> = (0..rows.len()).filter(|&i| rows[i] > 0).collect();
        Self {
            row_labels: keep_rows.iter().map(|&i| self.row_labels[i].clone()).collect(),
            col_labels: keep_cols.iter().map(|&j| self.col_labels[j].clone()).collect(),
            counts: keep_rows
                .iter()
                .map(|&i| keep_cols.iter().map(|&j| self.counts[i][j]).collect())
                .collect(),
        }
    }

    /// Sub-table restricted to the named rows, in the given order.
    pub fn select_rows(&self, labels: &[&str]) -> Self {
        let idx: Vec<usize> = labels
            .iter()
            .filter_map(|l| self.row_labels.iter().position(|r| r == l))
            .collect();
        Self {
            row_labels: idx.iter().map(|&i| self.row_labels[i].clone()).collect(),
            col_labels: self.col_labels.clone(),
            counts: idx.iter().map(|&i| self.counts[i].clone()).collect(),
        }
    }

    fn expected(&self) -> Result<Vec<Vec<f64>>, StatsError> {
        let (r, c) = (self.row_labels.len(), self.col_labels.len());
        if r < 2 || c < 2 {
            return Err(StatsError::TooSmall { rows: r, cols: c });
        }
        let rows = self.row_totals();
        let cols = self.col_totals();
        if let Some(i) = rows.iter().position(|&t| t == 0) {
            return Err(StatsError::ZeroMargin(format!("row {:?}", self.row_labels[i])));
        }
        if let Some(j) = cols.iter().position(|&t| t == 0) {
            return Err(StatsError::ZeroMargin(format!("column {:?}", self.col_labels[j])));
        }
        let n = self.grand_total() as f64;
        Ok(rows
            .iter()
            .map(|&rt| cols.iter().map(|&ct| rt as f64 * ct as f64 / n).collect())
            .collect())
    }
}

/// (O − E)/√E for every cell.
pub fn pearson_residuals(table: &ContingencyTable) -> Result<Vec<Vec<f64>>, StatsError> {
    let expected = table.expected()?;
    Ok(table
        .counts
        .iter()
        .zip(&expected)
        .map(|(obs, exp)| {
            obs.iter()
                .zip(exp)
                .map(|(&o, &e)| (o as f64 - e) / e.sqrt())
                .collect()
        })
        .collect())
}

/// Pearson chi-square test of independence, no continuity correction.
pub fn chi_square_independence(table: &ContingencyTable) -> Result<TestResult, StatsError> {
    let expected = table.expected()?;
    let statistic: f64 = table
        .counts
        .iter()
        .zip(&expected)
        .flat_map(|(obs, exp)| obs.iter().zip(exp))
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let df = ((table.row_labels.len() - 1) * (table.col_labels.len() - 1)) as u32;
    Ok(TestResult {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df as f64)?.clamp(0.0, 1.0),
    })
}

/// Average ranks (1-based) of `values`, ties sharing their mean rank.
/// Also returns the tie-correction sum Σ(t³ − t).
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Kruskal-Wallis H with tie correction and a chi-square p-value.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestResult, StatsError> {
    let n: usize = groups.iter().map(Vec::len).sum();
    if groups.len() < 2 || groups.iter().any(Vec::is_empty) || n < 3 {
        return Err(StatsError::Groups);
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (ranks, ties) = average_ranks(&pooled);
    let nf = n as f64;
    let mut offset = 0;
    let mut weighted = 0.0;
    for g in groups {
        let sum: f64 = ranks[offset..offset + g.len()].iter().sum();
        weighted += sum * sum / g.len() as f64;
        offset += g.len();
    }
    let h = 12.0 / (nf * (nf + 1.0)) * weighted - 3.0 * (nf + 1.0);
    let correction = 1.0 - ties / (nf * nf * nf - nf);
    let df = (groups.len() - 1) as u32;
    // every observation tied: no evidence against equal distributions
    if correction <= 0.0 {
        return Ok(TestResult {
            statistic: 0.0,
            df,
            p_value: 1.0,
        });
    }
    let statistic = (h / correction).max(0.0);
    Ok(TestResult {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df as f64)?.clamp(0.0, 1.0),
    })
}
