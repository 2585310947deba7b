//! Emergence prediction: feature encoding, logistic regression fitted by
//! IRLS with Wald inference, and cross-validated evaluation.

pub mod eval;
pub mod features;
pub mod logistic;

use thiserror::Error;

pub use eval::{cross_validate, downsample, evaluate, fit_full, sweep_forecast, CvReport, Metrics, SweepRow};
pub use features::{build_dataset, encode_features, Dataset, FeatureConfig, FeatureVector, ObservationUnit};
pub use logistic::{fit_logistic, fit_logistic_dropping_empty, predict_prob, LogisticModel};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("labels contain a single class")]
    SingleClass,
    #[error("need more rows than columns: {rows} rows, {cols} columns")]
    TooFewRows { rows: usize, cols: usize },
    #[error("design is rank deficient; information matrix is singular")]
    RankDeficient,
    #[error("quasi-separation detected: |coefficient {index}| = {value:.2} exceeds 15")]
    Separation { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no positive examples to balance against")]
    NoPositives,
    #[error("need at least {k} examples of each class, got {positives} positive and {negatives} negative")]
    TooFewExamples { k: usize, positives: usize, negatives: usize },
    #[error("label missing for term {0:?}")]
    MissingLabel(String),
}

/// Row-major dense matrix, sized for design matrices with a handful of
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, ModelError> {
        if data.len() != rows * cols {
            return Err(ModelError::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(ModelError::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent seed for sub-task `stream` of a run seeded with `seed`.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_rows() {
        let m = DesignMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(m.row(1), &[3.0, 4.0]);
        assert_eq!(m.rows().count(), 3);
        assert_eq!(m.select_rows(&[2, 0]).row(0), &[5.0, 6.0]);
        assert!(DesignMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(DesignMatrix::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn sub_seeds_differ() {
        let s: Vec<u64> = (0..5).map(|i| sub_seed(42, i)).collect();
        for i in 0..5 {
            for j in i + 1..5 {
                assert_ne!(s[i], s[j]);
            }
        }
        assert_eq!(sub_seed(42, 3), sub_seed(42, 3));
    }
}
