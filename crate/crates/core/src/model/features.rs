//! Design-matrix encoding of topic profiles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DesignMatrix, ModelError};
use crate::profile::TopicProfile;
use crate::vocab::category_name;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationUnit {
    /// One row per (term, category); a term in two categories yields two
    /// rows, each with one dummy set.
    PerCategory,
    /// One row per term with every matching dummy set.
    MultiHot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Categories with their own indicator column; all others form the
    /// reference level.
    pub dummies: Vec<char>,
    pub unit: ObservationUnit,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            dummies: vec!['B', 'D', 'C'],
            unit: ObservationUnit::PerCategory,
        }
    }
}

impl FeatureConfig {
    /// Column names, intercept first and clinical significance last.
    pub fn names(&self) -> Vec<String> {
        let mut names = vec!["(Intercept)".to_string(), "NarrowerTerm".to_string()];
        names.extend(
            self.dummies
                .iter()
                .map(|&c| format!("Category_{} ({c})", category_name(c))),
        );
        names.push("ClinicalSignificance".into());
        names
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    pub clinical: u8,
    pub narrower: u8,
    pub category_dummies: Vec<u8>,
}

impl FeatureVector {
    /// Predictor values without the intercept, in [`FeatureConfig::names`]
    /// order.
    pub fn predictors(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.category_dummies.len() + 2);
        v.push(self.narrower as f64);
        v.extend(self.category_dummies.iter().map(|&d| d as f64));
        v.push(self.clinical as f64);
        v
    }

    pub fn design_row(&self) -> Vec<f64> {
        let mut row = vec![1.0];
        row.extend(self.predictors());
        row
    }
}

fn clinical_at(profile: &TopicProfile, m: Option<u32>) -> u8 {
    match m {
        Some(m) => profile.clinical_known_at(m) as u8,
        None => profile.clinical_significance as u8,
    }
}

/// Features known at forecasting year `m` (multi-hot categories).
pub fn encode_features(profile: &TopicProfile, m: u32, dummies: &[char]) -> FeatureVector {
    FeatureVector {
        clinical: clinical_at(profile, Some(m.max(1))),
        narrower: profile.has_narrower as u8,
        category_dummies: dummies
            .iter()
            .map(|d| profile.categories.contains(d) as u8)
            .collect(),
    }
}

/// Observation rows with their labels and originating terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub x: DesignMatrix,
    pub y: Vec<f64>,
    pub terms: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.y.iter().filter(|&&v| v > 0.5).count()
    }
}

/// Encodes every profile at forecasting year `m`, or at the full horizon
/// when `m` is `None`.
pub fn build_dataset(
    profiles: &[TopicProfile],
    labels: &BTreeMap<String, bool>,
    m: Option<u32>,
    config: &FeatureConfig,
) -> Result<Dataset, ModelError> {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut terms = Vec::new();
    for p in profiles {
        let label = *labels
            .get(&p.ui)
            .ok_or_else(|| ModelError::MissingLabel(p.ui.clone()))?;
        let base = FeatureVector {
            clinical: clinical_at(p, m),
            narrower: p.has_narrower as u8,
            category_dummies: vec![0; config.dummies.len()],
        };
        let vectors: Vec<FeatureVector> = match config.unit {
            ObservationUnit::MultiHot => vec![FeatureVector {
                category_dummies: config
                    .dummies
                    .iter()
                    .map(|d| p.categories.contains(d) as u8)
                    .collect(),
                ..base
            }],
            ObservationUnit::PerCategory if p.categories.is_empty() => vec![base],
            ObservationUnit::PerCategory => p
                .categories
                .iter()
                .map(|c| FeatureVector {
                    category_dummies: config.dummies.iter().map(|d| (d == c) as u8).collect(),
                    ..base.clone()
                })
                .collect(),
        };
        for v in vectors {
            rows.push(v.design_row());
            y.push(if label { 1.0 } else { 0.0 });
            terms.push(p.ui.clone());
        }
    }
    let x = if rows.is_empty() {
        DesignMatrix::new(0, config.names().len(), Vec::new())?
    } else {
        DesignMatrix::from_rows(&rows)?
    };
    Ok(Dataset {
        names: config.names(),
        x,
        y,
        terms,
    })
}
