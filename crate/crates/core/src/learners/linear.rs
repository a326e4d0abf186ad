//! Logistic-family linear models and LDA.

use crate::learners::common::{sigmoid, solve_linear, Standardizer};
use serde::{Deserialize, Serialize};

/// A linear score model: sigmoid(w' z + b) on standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.apply(row);
        self.weights.iter().zip(&z).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

pub struct LogisticFit {
    pub model: LinearModel,
    pub final_grad_norm: f64,
    pub converged: bool,
}

/// Full-batch gradient descent on L2-penalized logistic loss. Iteration
/// budget and step adaptation are fixed, so the fit is deterministic.
pub fn fit_logistic(x: &[Vec<f64>], y: &[u8], lambda: f64, max_iter: usize) -> LogisticFit {
    let standardizer = Standardizer::fit(x);
    let z = standardizer.apply_all(x);
    let n = z.len();
    let p = z[0].len();
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();

    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut lr = 1.0;
    let mut prev_loss = f64::INFINITY;
    let mut grad_norm = 0.0;

    for _ in 0..max_iter {
        let mut grad_w = vec![0.0; p];
        let mut grad_b = 0.0;
        let mut loss = 0.0;
        for (row, &target) in z.iter().zip(&yf) {
            let m: f64 = w.iter().zip(row).map(|(a, c)| a * c).sum::<f64>() + b;
            let s = sigmoid(m);
            let err = s - target;
            for (g, v) in grad_w.iter_mut().zip(row) {
                *g += err * v;
            }
            grad_b += err;
            // numerically safe cross entropy
            loss += if target > 0.5 {
                -(s.max(1e-12)).ln()
            } else {
                -((1.0 - s).max(1e-12)).ln()
            };
        }
        for (g, wi) in grad_w.iter_mut().zip(&w) {
            *g = *g / n as f64 + lambda * wi;
        }
        grad_b /= n as f64;
        loss = loss / n as f64
            + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();

        if loss > prev_loss + 1e-12 {
            lr *= 0.5;
            if lr < 1e-8 {
                break;
            }
        }
        prev_loss = loss;

        for (wi, g) in w.iter_mut().zip(&grad_w) {
            *wi -= lr * g;
        }
        b -= lr * grad_b;
        grad_norm = grad_w.iter().map(|g| g * g).sum::<f64>().sqrt() + grad_b.abs();
        if grad_norm < 1e-7 {
            break;
        }
    }

    LogisticFit {
        model: LinearModel {
            standardizer,
            weights: w,
            bias: b,
        },
        final_grad_norm: grad_norm,
        converged: grad_norm < 1e-2,
    }
}

pub struct LdaFit {
    pub model: LinearModel,
    pub ridged: bool,
}

/// Fisher LDA on the pooled covariance; falls back to a ridge-regularized
/// covariance (flagged) when the pooled matrix is singular.
pub fn fit_lda(x: &[Vec<f64>], y: &[u8]) -> LdaFit {
    let standardizer = Standardizer::fit(x);
    let z = standardizer.apply_all(x);
    let p = z[0].len();
    let n = z.len() as f64;

    let mut mean = [vec![0.0; p], vec![0.0; p]];
    let mut count = [0usize; 2];
    for (row, &label) in z.iter().zip(y) {
        let c = label as usize;
        count[c] += 1;
        for (m, v) in mean[c].iter_mut().zip(row) {
            *m += v;
        }
    }
    for c in 0..2 {
        for m in mean[c].iter_mut() {
            *m /= count[c] as f64;
        }
    }

    let mut cov = vec![vec![0.0; p]; p];
    for (row, &label) in z.iter().zip(y) {
        let c = label as usize;
        for i in 0..p {
            let di = row[i] - mean[c][i];
            for j in i..p {
                let dj = row[j] - mean[c][j];
                cov[i][j] += di * dj;
            }
        }
    }
    let denom = (n - 2.0).max(1.0);
    for i in 0..p {
        for j in i..p {
            cov[i][j] /= denom;
            cov[j][i] = cov[i][j];
        }
    }

    let diff: Vec<f64> = (0..p).map(|i| mean[1][i] - mean[0][i]).collect();
    let (weights, ridged) = match solve_linear(&cov, &diff) {
        Some(w) => (w, false),
        None => {
            let trace: f64 = (0..p).map(|i| cov[i][i]).sum();
            let ridge = 1e-6 * trace / p as f64 + 1e-9;
            let mut cov_r = cov.clone();
            for (i, row) in cov_r.iter_mut().enumerate() {
                row[i] += ridge;
            }
            (
                solve_linear(&cov_r, &diff).expect("ridged covariance is positive definite"),
                true,
            )
        }
    };

    let prior_ratio = (count[1] as f64 / count[0] as f64).ln();
    let mid: f64 = (0..p)
        .map(|i| weights[i] * 0.5 * (mean[1][i] + mean[0][i]))
        .sum();
    let bias = prior_ratio - mid;

    LdaFit {
        model: LinearModel {
            standardizer,
            weights,
            bias,
        },
        ridged,
    }
}
