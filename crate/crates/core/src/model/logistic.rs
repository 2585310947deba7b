//! Logistic regression by iteratively reweighted least squares.

use serde::Serialize;

use super::{DesignMatrix, ModelError};
use crate::stats::normal_two_sided_p;

pub const MAX_ITERATIONS: usize = 100;
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
pub const STEP_TOLERANCE: f64 = 1e-10;
/// Coefficient magnitude treated as evidence of (quasi-)separation.
pub const SEPARATION_BOUND: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticModel {
    pub names: Vec<String>,
    /// Intercept first.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub z_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl LogisticModel {
    pub fn with_names(mut self, names: Vec<String>) -> Self {
        self.names = names;
        self
    }

    /// Odds ratio exp(β) of every coefficient.
    pub fn odds_ratios(&self) -> Vec<f64> {
        self.coefficients.iter().map(|b| b.exp()).collect()
    }
}

/// Logistic function, evaluated without overflow for any finite `z`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn linear(row: &[f64], beta: &[f64]) -> f64 {
    row.iter().zip(beta).map(|(x, b)| x * b).sum()
}

pub fn log_likelihood(x: &DesignMatrix, y: &[f64], beta: &[f64]) -> f64 {
    x.rows()
        .zip(y)
        .map(|(row, &yi)| {
            let z = linear(row, beta);
            yi * z - softplus(z)
        })
        .sum()
}

/// Score vector Xᵀ(y − π).
pub fn gradient(x: &DesignMatrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.ncols()];
    for (row, &yi) in x.rows().zip(y) {
        let r = yi - sigmoid(linear(row, beta));
        for (gj, xj) in g.iter_mut().zip(row) {
            *gj += xj * r;
        }
    }
    g
}

/// Fisher information XᵀWX with W = diag(π(1 − π)).
pub fn information(x: &DesignMatrix, beta: &[f64]) -> Vec<Vec<f64>> {
    let p = x.ncols();
    let mut info = vec![vec![0.0; p]; p];
    for row in x.rows() {
        let pi = sigmoid(linear(row, beta));
        let w = pi * (1.0 - pi);
        for a in 0..p {
            let wa = w * row[a];
            for b in 0..=a {
                info[a][b] += wa * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            info[b][a] = info[a][b];
        }
    }
    info
}

/// Lower-triangular Cholesky factor; fails on a non-positive pivot relative
/// to the matrix scale.
fn cholesky(m: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ModelError> {
    let n = m.len();
    let scale = (0..n).map(|i| m[i][i].abs()).fold(0.0, f64::max);
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - s;
                // also rejects NaN pivots
                if d.is_nan() || d <= 1e-12 * scale {
                    return Err(ModelError::RankDeficient);
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i][i];
    }
    x
}

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse(m: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ModelError> {
    let l = cholesky(m)?;
    let n = m.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            cholesky_solve(&l, &e)
        })
        .collect();
    Ok((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximum-likelihood logistic fit with Wald standard errors.
///
/// Newton/IRLS steps β ← β + (XᵀWX)⁻¹Xᵀ(y − π) from β = 0 until the score
/// is below [`GRADIENT_TOLERANCE`] or the step below [`STEP_TOLERANCE`].
pub fn fit_logistic(x: &DesignMatrix, y: &[f64]) -> Result<LogisticModel, ModelError> {
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(ModelError::DimensionMismatch { expected: n, got: y.len() });
    }
    if n < p + 1 {
        return Err(ModelError::TooFewRows { rows: n, cols: p });
    }
    let positives = y.iter().filter(|&&v| v > 0.5).count();
    if positives == 0 || positives == n {
        return Err(ModelError::SingleClass);
    }

    let mut beta = vec![0.0; p];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        let g = gradient(x, y, &beta);
        if max_abs(&g) <= GRADIENT_TOLERANCE {
            converged = true;
            break;
        }
        if let Some((index, &value)) = beta
            .iter()
            .enumerate()
            .find(|(_, b)| b.abs() > SEPARATION_BOUND)
        {
            return Err(ModelError::Separation { index, value });
        }
        let l = cholesky(&information(x, &beta))?;
        let step = cholesky_solve(&l, &g);
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
        }
        iterations += 1;
        if step.iter().map(|s| s * s).sum::<f64>().sqrt() <= STEP_TOLERANCE {
            converged = true;
            break;
        }
    }

    let cov = spd_inverse(&information(x, &beta))?;
    let std_errors: Vec<f64> = (0..p).map(|j| cov[j][j].sqrt()).collect();
    let z_values: Vec<f64> = beta.iter().zip(&std_errors).map(|(b, se)| b / se).collect();
    let p_values = z_values.iter().map(|&z| normal_two_sided_p(z).clamp(0.0, 1.0)).collect();
    Ok(LogisticModel {
        names: (0..p).map(|j| format!("x{j}")).collect(),
        log_likelihood: log_likelihood(x, y, &beta),
        coefficients: beta,
        std_errors,
        z_values,
        p_values,
        converged,
        iterations,
    })
}

/// Like [`fit_logistic`], but predictor columns that are zero in every row
/// are left out of the fit. Their coefficients are reported as 0 with NaN
/// standard errors and p-values, so the model keeps the full column layout
/// and predicts as if the absent feature had no effect.
pub fn fit_logistic_dropping_empty(x: &DesignMatrix, y: &[f64]) -> Result<LogisticModel, ModelError> {
    let p = x.ncols();
    let keep: Vec<usize> = (0..p)
        .filter(|&j| j == 0 || x.rows().any(|r| r[j] != 0.0))
        .collect();
    if keep.len() == p {
        return fit_logistic(x, y);
    }
    let rows: Vec<Vec<f64>> = x.rows().map(|r| keep.iter().map(|&j| r[j]).collect()).collect();
    let reduced = fit_logistic(&DesignMatrix::from_rows(&rows)?, y)?;
    let mut full = LogisticModel {
        names: (0..p).map(|j| format!("x{j}")).collect(),
        coefficients: vec![0.0; p],
        std_errors: vec![f64::NAN; p],
        z_values: vec![f64::NAN; p],
        p_values: vec![f64::NAN; p],
        ..reduced.clone()
    };
    for (k, &j) in keep.iter().enumerate() {
        full.coefficients[j] = reduced.coefficients[k];
        full.std_errors[j] = reduced.std_errors[k];
        full.z_values[j] = reduced.z_values[k];
        full.p_values[j] = reduced.p_values[k];
    }
    Ok(full)
}

/// π = 1/(1 + e^(−z)) with z = β·(1, x).
pub fn predict_prob(model: &LogisticModel, x: &[f64]) -> Result<f64, ModelError> {
    let expected = model.coefficients.len().saturating_sub(1);
    if x.len() != expected {
        return Err(ModelError::DimensionMismatch { expected, got: x.len() });
    }
    let z = model.coefficients[0] + linear(x, &model.coefficients[1..]);
    Ok(sigmoid(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn empty_column_is_left_out() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![1.0, (i % 2) as f64, 0.0])
            .collect();
        let y: Vec<f64> = (0..40).map(|i| ((i % 2 == 0) == (i % 5 == 0)) as u8 as f64).collect();
        let x = DesignMatrix::from_rows(&rows).unwrap();
        assert!(matches!(fit_logistic(&x, &y), Err(ModelError::RankDeficient)));
        let m = fit_logistic_dropping_empty(&x, &y).unwrap();
        let two: Vec<Vec<f64>> = rows.iter().map(|r| r[..2].to_vec()).collect();
        let reference = fit_logistic(&DesignMatrix::from_rows(&two).unwrap(), &y).unwrap();
        assert_eq!(&m.coefficients[..2], &reference.coefficients[..]);
        assert_eq!(m.coefficients[2], 0.0);
        assert!(m.std_errors[2].is_nan());
        assert_eq!(predict_prob(&m, &[1.0, 0.0]).unwrap(), predict_prob(&reference, &[1.0]).unwrap());
    }

    fn model(coefficients: Vec<f64>) -> LogisticModel {
        let p = coefficients.len();
        LogisticModel {
            names: vec![String::new(); p],
            coefficients,
            std_errors: vec![0.0; p],
            z_values: vec![0.0; p],
            p_values: vec![1.0; p],
            log_likelihood: 0.0,
            converged: true,
            iterations: 0,
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(700.0) <= 1.0 && sigmoid(700.0) > 0.999);
        assert!(sigmoid(-700.0) > 0.0);
        for z in [-30.0, -3.0, -0.1, 0.7, 12.0] {
            assert_abs_diff_eq!(sigmoid(z) + sigmoid(-z), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn intercept_only_half() {
        let x = DesignMatrix::from_rows(&vec![vec![1.0]; 10]).unwrap();
        let y: Vec<f64> = (0..10).map(|i| (i % 2) as f64).collect();
        let m = fit_logistic(&x, &y).unwrap();
        assert!(m.converged);
        assert_abs_diff_eq!(m.coefficients[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(predict_prob(&m, &[]).unwrap(), 0.5, epsilon = 1e-12);
        // se of the logit of a proportion: 1/sqrt(n p (1-p))
        assert_abs_diff_eq!(m.std_errors[0], (1.0f64 / 2.5).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn two_by_two_closed_form() {
        // log-odds: group 0 has 3/10, group 1 has 8/10 positives
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (g, pos) in [(0.0, 3), (1.0, 8)] {
            for i in 0..10 {
                rows.push(vec![1.0, g]);
                y.push(if i < pos { 1.0 } else { 0.0 });
            }
        }
        let m = fit_logistic(&DesignMatrix::from_rows(&rows).unwrap(), &y).unwrap();
        let logit = |p: f64| (p / (1.0 - p)).ln();
        assert_abs_diff_eq!(m.coefficients[0], logit(0.3), epsilon = 1e-9);
        assert_abs_diff_eq!(m.coefficients[1], logit(0.8) - logit(0.3), epsilon = 1e-9);
        let se = (1.0 / 3.0 + 1.0 / 7.0 + 1.0 / 8.0 + 1.0 / 2.0f64).sqrt();
        assert_abs_diff_eq!(m.std_errors[1], se, epsilon = 1e-9);
    }

    #[test]
    fn failure_paths() {
        let x = DesignMatrix::from_rows(&[vec![1.0, -2.0], vec![1.0, -1.0], vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            fit_logistic(&x, &[0.0, 0.0, 1.0, 1.0]),
            Err(ModelError::Separation { .. })
        ));
        assert_eq!(fit_logistic(&x, &[1.0; 4]), Err(ModelError::SingleClass));
        let collinear = DesignMatrix::from_rows(&[
            vec![1.0, 1.0, 2.0],
            vec![1.0, 2.0, 4.0],
            vec![1.0, 3.0, 6.0],
            vec![1.0, 4.0, 8.0],
            vec![1.0, 5.0, 10.0],
        ])
        .unwrap();
        assert_eq!(
            fit_logistic(&collinear, &[0.0, 1.0, 0.0, 1.0, 1.0]),
            Err(ModelError::RankDeficient)
        );
        let tiny = DesignMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(fit_logistic(&tiny, &[0.0, 1.0]), Err(ModelError::TooFewRows { .. })));
    }

    #[test]
    fn predict_examples() {
        let m = model(vec![0.0, 1.0]);
        assert_eq!(predict_prob(&m, &[0.0]).unwrap(), 0.5);
        assert!(predict_prob(&m, &[1.0, 2.0]).is_err());
        let clinical = model(vec![0.0, 2.215]);
        assert_abs_diff_eq!(clinical.odds_ratios()[1], 9.16, epsilon = 0.005);
    }

    #[test]
    fn spd_inverse_roundtrip() {
        let m = vec![vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.2], vec![0.5, 0.2, 2.0]];
        let inv = spd_inverse(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                assert_abs_diff_eq!(v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }
}
