//! Popularity summaries, emergence trend classes and cohort quartiles.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PopularitySeries;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrendError {
    #[error("empty popularity series")]
    EmptySeries,
    #[error("empty cohort")]
    EmptyCohort,
    #[error("invalid trend parameters: threshold {threshold}, dip length {dip_len}")]
    InvalidParams { threshold: u64, dip_len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrendClass {
    EmergedSustained,
    EmergedNotSustained,
    EmergedFluctuated,
    NotYetEmerged,
}

impl TrendClass {
    pub const ALL: [TrendClass; 4] = [
        Self::EmergedSustained,
        Self::EmergedNotSustained,
        Self::EmergedFluctuated,
        Self::NotYetEmerged,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::EmergedSustained => "EmergedSustained",
            Self::EmergedNotSustained => "EmergedNotSustained",
            Self::EmergedFluctuated => "EmergedFluctuated",
            Self::NotYetEmerged => "NotYetEmerged",
        }
    }

    pub fn has_emerged(self) -> bool {
        self != Self::NotYetEmerged
    }
}

impl fmt::Display for TrendClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrendParams {
    /// Articles per year at which a term counts as emerged.
    pub threshold: u64,
    /// Consecutive sub-threshold years that break sustained emergence.
    pub dip_len: usize,
}

impl Default for TrendParams {
    fn default() -> Self {
        Self {
            threshold: 25,
            dip_len: 2,
        }
    }
}

impl TrendParams {
    pub fn validate(&self) -> Result<(), TrendError> {
        if self.threshold < 1 || self.dip_len < 1 {
            return Err(TrendError::InvalidParams {
                threshold: self.threshold,
                dip_len: self.dip_len,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopularitySummary {
    pub total: u64,
    pub per_year: f64,
}

pub fn summarize(series: &PopularitySeries) -> PopularitySummary {
    let total = series.total();
    let years = (series.end_year - series.start_year + 1) as f64;
    PopularitySummary {
        total,
        per_year: total as f64 / years,
    }
}

/// Classifies a yearly count series against the emergence threshold.
///
/// A term emerges in the first year it reaches the threshold. A later run
/// of at least `dip_len` sub-threshold years breaks sustained emergence,
/// and any recovery after such a run marks the term as fluctuating.
/// Shorter dips are ignored.
pub fn classify_counts(counts: &[u64], params: TrendParams) -> Result<TrendClass, TrendError> {
    params.validate()?;
    if counts.is_empty() {
        return Err(TrendError::EmptySeries);
    }
    let above = |c: &u64| *c >= params.threshold;
    let Some(emerged) = counts.iter().position(above) else {
        return Ok(TrendClass::NotYetEmerged);
    };

    let mut run = 0;
    for (i, c) in counts.iter().enumerate().skip(emerged + 1) {
        if above(c) {
            run = 0;
            continue;
        }
        run += 1;
        if run == params.dip_len {
            return Ok(if counts[i + 1..].iter().any(above) {
                TrendClass::EmergedFluctuated
            } else {
                TrendClass::EmergedNotSustained
            });
        }
    }
    Ok(TrendClass::EmergedSustained)
}

pub fn classify_trend(series: &PopularitySeries, params: TrendParams) -> Result<TrendClass, TrendError> {
    classify_counts(&series.counts, params)
}

/// Classifies many count series at once, in parallel when enabled.
pub fn classify_many(series: &[Vec<u64>], params: TrendParams) -> Result<Vec<TrendClass>, TrendError> {
    params.validate()?;
    crate::par::try_map(series, |c| classify_counts(c, params))
}

pub fn trend_distribution(labels: &[TrendClass]) -> BTreeMap<TrendClass, usize> {
    let mut counts: BTreeMap<TrendClass, usize> = TrendClass::ALL.iter().map(|&c| (c, 0)).collect();
    for l in labels {
        *counts.get_mut(l).expect("all classes seeded") += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quartile {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl Quartile {
    pub const ALL: [Quartile; 4] = [Self::Q1, Self::Q2, Self::Q3, Self::Q4];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Q1 => "Q1",
            Self::Q2 => "Q2",
            Self::Q3 => "Q3",
            Self::Q4 => "Q4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuartileLabel {
    pub quartile: Quartile,
    pub emerging: bool,
}

impl QuartileLabel {
    pub(crate) fn new(quartile: Quartile) -> Self {
        Self {
            quartile,
            emerging: quartile == Quartile::Q4,
        }
    }
}

/// Rank-based popularity quartiles within one cohort.
///
/// Terms are ranked by total descending (ties by ascending ui); each of
/// Q4, Q3, Q2 takes the next `ceil(n/4)` ranks and Q1 gets the rest.
pub fn cohort_quartiles(cohort: &[(String, u64)]) -> Result<BTreeMap<String, QuartileLabel>, TrendError> {
    if cohort.is_empty() {
        return Err(TrendError::EmptyCohort);
    }
    let mut ranked: Vec<&(String, u64)> = cohort.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let band = cohort.len().div_ceil(4);
    Ok(ranked
        .into_iter()
        .enumerate()
        .map(|(rank, (ui, _))| {
            let quartile = match rank / band {
                0 => Quartile::Q4,
                1 => Quartile::Q3,
                2 => Quartile::Q2,
                _ => Quartile::Q1,
            };
            (ui.clone(), QuartileLabel::new(quartile))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class(counts: &[u64]) -> TrendClass {
        classify_counts(counts, TrendParams::default()).unwrap()
    }

    #[test]
    fn trend_examples() {
        assert_eq!(class(&[30, 30, 30, 30]), TrendClass::EmergedSustained);
        assert_eq!(class(&[30, 30, 10, 10, 10]), TrendClass::EmergedNotSustained);
        assert_eq!(class(&[30, 10, 30, 30]), TrendClass::EmergedSustained);
        assert_eq!(class(&[30, 10, 10, 30]), TrendClass::EmergedFluctuated);
        assert_eq!(class(&[5, 5, 5]), TrendClass::NotYetEmerged);
    }

    #[test]
    fn trend_edges() {
        assert_eq!(class(&[25]), TrendClass::EmergedSustained);
        assert_eq!(class(&[24]), TrendClass::NotYetEmerged);
        // dip at the very end has no exemption
        assert_eq!(class(&[0, 30, 30, 3, 3]), TrendClass::EmergedNotSustained);
        // recovery then a final dip stays fluctuated
        assert_eq!(class(&[30, 1, 1, 30, 1, 1]), TrendClass::EmergedFluctuated);
        // sub-threshold years before emergence do not count as a dip
        assert_eq!(class(&[0, 0, 0, 30, 30]), TrendClass::EmergedSustained);
        assert_eq!(classify_counts(&[], TrendParams::default()), Err(TrendError::EmptySeries));
        let bad = TrendParams { threshold: 0, dip_len: 2 };
        assert!(classify_counts(&[1], bad).is_err());
    }

    #[test]
    fn summary() {
        let s = summarize(&PopularitySeries::from_counts("x", 2001, vec![0, 0, 0]));
        assert_eq!((s.total, s.per_year), (0, 0.0));
        let s = summarize(&PopularitySeries::from_counts("x", 2001, vec![10, 20, 30]));
        assert_eq!((s.total, s.per_year), (60, 20.0));
        let mut counts = vec![0; 19];
        counts[0] = 10926;
        let s = summarize(&PopularitySeries::from_counts("x", 2001, counts));
        assert!((s.per_year - 575.0526).abs() < 1e-3);
    }

    fn cohort(totals: &[u64]) -> Vec<(String, u64)> {
        totals
            .iter()
            .enumerate()
            .map(|(i, &t)| (format!("D{i:03}"), t))
            .collect()
    }

    #[test]
    fn quartiles_by_rank() {
        let labels = cohort_quartiles(&cohort(&[100, 80, 60, 40, 30, 20, 10, 5])).unwrap();
        let q4: Vec<_> = labels.iter().filter(|(_, l)| l.emerging).map(|(u, _)| u.as_str()).collect();
        assert_eq!(q4, ["D000", "D001"]);
        assert_eq!(labels["D002"].quartile, Quartile::Q3);
        assert_eq!(labels["D005"].quartile, Quartile::Q2);
        assert_eq!(labels["D007"].quartile, Quartile::Q1);

        let one = cohort_quartiles(&cohort(&[3])).unwrap();
        assert_eq!(one["D000"].quartile, Quartile::Q4);

        let tied = cohort_quartiles(&cohort(&[7; 9])).unwrap();
        let q4: Vec<_> = tied.iter().filter(|(_, l)| l.emerging).map(|(u, _)| u.as_str()).collect();
        assert_eq!(q4, ["D000", "D001", "D002"]);

        assert_eq!(cohort_quartiles(&[]), Err(TrendError::EmptyCohort));
    }

    #[test]
    fn distribution() {
        let d = trend_distribution(&[]);
        assert!(d.values().all(|&n| n == 0));
        let d = trend_distribution(&[
            TrendClass::EmergedSustained,
            TrendClass::EmergedSustained,
            TrendClass::NotYetEmerged,
        ]);
        assert_eq!(d[&TrendClass::EmergedSustained], 2);
        assert_eq!(d[&TrendClass::NotYetEmerged], 1);
        assert_eq!(d[&TrendClass::EmergedFluctuated], 0);
    }
}
