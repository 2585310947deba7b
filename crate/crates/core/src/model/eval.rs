//! Down-sampling, stratified cross-validation, metrics and the forecasting
//! sweep.

use std::collections::{BTreeMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::features::{build_dataset, Dataset, FeatureConfig};
use super::logistic::{fit_logistic, fit_logistic_dropping_empty, predict_prob, LogisticModel};
use super::{sub_seed, ModelError};
use crate::par;
use crate::profile::TopicProfile;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_measure: Option<f64>,
    pub csi: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f_measure = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        Self {
            tp,
            fp,
            fn_,
            tn,
            accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
            precision,
            recall,
            f_measure,
            csi: ratio(tp, tp + fp + fn_),
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Confusion {
    tp: u64,
    fp: u64,
    fn_: u64,
    tn: u64,
}

impl Confusion {
    fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    fn merge(&mut self, other: Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    fn metrics(self) -> Metrics {
        Metrics::from_counts(self.tp, self.fp, self.fn_, self.tn)
    }
}

/// Confusion-matrix metrics with `π ≥ threshold` counted as positive.
pub fn evaluate(preds: &[f64], labels: &[bool], threshold: f64) -> Result<Metrics, ModelError> {
    if preds.len() != labels.len() {
        return Err(ModelError::DimensionMismatch {
            expected: labels.len(),
            got: preds.len(),
        });
    }
    let mut c = Confusion::default();
    for (&p, &l) in preds.iter().zip(labels) {
        c.add(p >= threshold, l);
    }
    Ok(c.metrics())
}

/// Keeps every positive example and an equal number of negatives drawn
/// uniformly without replacement. When negatives are scarcer than
/// positives all of them are kept. Output preserves input order.
pub fn downsample<T: Clone>(
    examples: &[T],
    label: impl Fn(&T) -> bool,
    seed: u64,
) -> Result<Vec<T>, ModelError> {
    let negatives: Vec<usize> = (0..examples.len()).filter(|&i| !label(&examples[i])).collect();
    let positives = examples.len() - negatives.len();
    if positives == 0 {
        return Err(ModelError::NoPositives);
    }
    let keep: HashSet<usize> = if negatives.len() <= positives {
        negatives.into_iter().collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        index::sample(&mut rng, negatives.len(), positives)
            .into_iter()
            .map(|k| negatives[k])
            .collect()
    };
    Ok(examples
        .iter()
        .enumerate()
        .filter(|(i, e)| label(e) || keep.contains(i))
        .map(|(_, e)| e.clone())
        .collect())
}

/// Stratified fold assignment: each class is shuffled separately and dealt
/// round-robin across `k` folds. Dealing continues from where the previous
/// class stopped, so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    fold_of
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test: Vec<usize>,
    /// Training rows after down-sampling.
    pub train: Vec<usize>,
    pub model: LogisticModel,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    /// Computed once from confusion counts pooled over all test folds.
    pub metrics: Metrics,
    pub fold_of: Vec<usize>,
    pub folds: Vec<FoldReport>,
}

/// Stratified k-fold cross-validation. Each fold down-samples its training
/// rows only, fits, and predicts the untouched test rows.
pub fn cross_validate(dataset: &Dataset, k: usize, seed: u64) -> Result<CvReport, ModelError> {
    let labels: Vec<bool> = dataset.y.iter().map(|&v| v > 0.5).collect();
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if k < 2 || positives < k || negatives < k {
        return Err(ModelError::TooFewExamples {
            k,
            positives,
            negatives,
        });
    }
    let fold_of = stratified_folds(&labels, k, sub_seed(seed, 0));
    let fold_ids: Vec<usize> = (0..k).collect();

    let folds = par::try_map(&fold_ids, |&fold| -> Result<_, ModelError> {
        let all_train: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != fold).collect();
        let test: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == fold).collect();
        let train = downsample(&all_train, |&i| labels[i], sub_seed(seed, 1 + fold as u64))?;
        let y: Vec<f64> = train.iter().map(|&i| dataset.y[i]).collect();
        // early forecasting years can leave a feature unobserved in a fold
        let model = fit_logistic_dropping_empty(&dataset.x.select_rows(&train), &y)?.with_names(dataset.names.clone());
        let mut confusion = Confusion::default();
        for &i in &test {
            let pi = predict_prob(&model, &dataset.x.row(i)[1..])?;
            confusion.add(pi >= DEFAULT_THRESHOLD, labels[i]);
        }
        Ok((
            confusion,
            FoldReport {
                fold,
                test,
                train,
                model,
                metrics: confusion.metrics(),
            },
        ))
    })?;

    let mut pooled = Confusion::default();
    for (c, _) in &folds {
        pooled.merge(*c);
    }
    Ok(CvReport {
        metrics: pooled.metrics(),
        fold_of,
        folds: folds.into_iter().map(|(_, f)| f).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: u32,
    pub metrics: Metrics,
}

/// Cross-validated metrics at each forecasting year. Every year uses the
/// same seed, so the fold split is shared and only the features change.
pub fn sweep_forecast(
    profiles: &[TopicProfile],
    labels: &BTreeMap<String, bool>,
    years: std::ops::RangeInclusive<u32>,
    config: &FeatureConfig,
    k: usize,
    seed: u64,
) -> Result<Vec<SweepRow>, ModelError> {
    let ms: Vec<u32> = years.collect();
    par::try_map(&ms, |&m| {
        let ds = build_dataset(profiles, labels, Some(m), config)?;
        Ok(SweepRow {
            m,
            metrics: cross_validate(&ds, k, seed)?.metrics,
        })
    })
}

/// Logistic fit on every observation at the full horizon, no down-sampling.
pub fn fit_full(
    profiles: &[TopicProfile],
    labels: &BTreeMap<String, bool>,
    config: &FeatureConfig,
) -> Result<LogisticModel, ModelError> {
    let ds = build_dataset(profiles, labels, None, config)?;
    Ok(fit_logistic(&ds.x, &ds.y)?.with_names(ds.names))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn metric_examples() {
        let m = Metrics::from_counts(3, 2, 5, 0);
        assert_eq!(m.csi, Some(0.3));
        let perfect = evaluate(&[0.9, 0.1, 0.7], &[true, false, true], 0.5).unwrap();
        assert_eq!(perfect.accuracy, Some(1.0));
        assert_eq!(perfect.csi, Some(1.0));
        let none = evaluate(&[0.1, 0.2], &[false, false], 0.5).unwrap();
        assert_eq!(none.precision, None);
        assert_eq!(none.recall, None);
        assert_eq!(none.csi, None);
        assert_eq!(none.accuracy, Some(1.0));
        assert!(evaluate(&[0.1], &[true, false], 0.5).is_err());
        // threshold is inclusive
        assert_eq!(evaluate(&[0.5], &[true], 0.5).unwrap().tp, 1);
    }

    #[test]
    fn f_measure_is_harmonic_mean() {
        let m = Metrics::from_counts(4, 1, 3, 7);
        let (p, r) = (0.8, 4.0 / 7.0);
        assert_abs_diff_eq!(m.f_measure.unwrap(), 2.0 * p * r / (p + r), epsilon = 1e-15);
        assert_abs_diff_eq!(m.accuracy.unwrap(), 11.0 / 15.0, epsilon = 1e-15);
    }

    #[test]
    fn downsample_sizes() {
        let items: Vec<(u32, bool)> = (0..40).map(|i| (i, i < 10)).collect();
        let a = downsample(&items, |x| x.1, 7).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(a.iter().filter(|x| x.1).count(), 10);
        assert_eq!(a, downsample(&items, |x| x.1, 7).unwrap());

        let few: Vec<(u32, bool)> = (0..14).map(|i| (i, i < 10)).collect();
        assert_eq!(downsample(&few, |x| x.1, 7).unwrap().len(), 14);

        let none: Vec<(u32, bool)> = (0..5).map(|i| (i, false)).collect();
        assert_eq!(downsample(&none, |x| x.1, 7), Err(ModelError::NoPositives));
    }

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<bool> = (0..53).map(|i| i % 4 == 0).collect();
        let folds = stratified_folds(&labels, 5, 3);
        for f in 0..5 {
            let pos = (0..53).filter(|&i| folds[i] == f && labels[i]).count();
            assert!((2..=3).contains(&pos));
            let all = folds.iter().filter(|&&x| x == f).count();
            assert!((10..=11).contains(&all));
        }
    }
}
