//! Shared numeric helpers for the base learners.

use serde::{Deserialize, Serialize};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-column centering and unit-scaling, with a variance floor so constant
/// columns pass through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let n = x.len() as f64;
        let p = x[0].len();
        let mut mean = vec![0.0; p];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut sd = vec![0.0; p];
        for row in x {
            for j in 0..p {
                let d = row[j] - mean[j];
                sd[j] += d * d;
            }
        }
        for s in sd.iter_mut() {
            *s = (*s / (n - 1.0).max(1.0)).sqrt();
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        Standardizer { mean, sd }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply_all(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.apply(r)).collect()
    }
}

/// Solves A x = b by Gaussian elimination with partial pivoting. Returns
/// None if a pivot falls below tolerance.
pub fn solve_linear(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();

    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if m[row][col].abs() > m[pivot][col].abs() {
                pivot = row;
            }
        }
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for col in (row + 1)..n {
            acc -= m[row][col] * x[col];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// 1-D maximum-likelihood slope for squashing margins into scores:
/// maximizes the Bernoulli likelihood of sigmoid(a * margin) over a > 0.
/// The likelihood is concave in a, so bisection on the score equation
/// suffices; separable margins saturate at the upper cap.
pub fn platt_slope(margins: &[f64], labels: &[u8]) -> f64 {
    let grad = |a: f64| -> f64 {
        margins
            .iter()
            .zip(labels)
            .map(|(&m, &y)| m * (y as f64 - sigmoid(a * m)))
            .sum()
    };
    let (mut lo, mut hi) = (1e-4, 100.0);
    if grad(hi) > 0.0 {
        return hi;
    }
    if grad(lo) < 0.0 {
        return lo;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if grad(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
