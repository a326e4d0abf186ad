//! AdaBoost over decision stumps.

use crate::learners::common::sigmoid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    /// +1: predict positive when value >= threshold; -1: inverted.
    pub polarity: f64,
    pub alpha: f64,
}

impl Stump {
    /// Prediction in {-1, +1}.
    pub fn predict(&self, row: &[f64]) -> f64 {
        if row[self.feature] >= self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StumpsModel {
    pub stumps: Vec<Stump>,
}

impl StumpsModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.stumps.iter().map(|s| s.alpha * s.predict(row)).sum()
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

/// Exhaustive weighted best stump: every feature, every midpoint between
/// distinct sorted values plus the below-minimum threshold, both polarities.
/// Ties break toward the lower feature index and threshold.
pub fn best_stump(x: &[Vec<f64>], y_pm: &[f64], weights: &[f64]) -> (Stump, f64) {
    let n = x.len();
    let p = x[0].len();
    let mut best: Option<(Stump, f64)> = None;

    for f in 0..p {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[a][f].partial_cmp(&x[b][f]).unwrap().then(a.cmp(&b)));

        // err(polarity=+1, threshold t) = sum of w where prediction != y;
        // sweep thresholds from below the minimum upward, maintaining the
        // error incrementally.
        let mut err_plus: f64 = order
            .iter()
            .map(|&i| if y_pm[i] < 0.0 { weights[i] } else { 0.0 })
            .sum(); // threshold below min: all predicted +1
        let total_w: f64 = weights.iter().sum();

        let consider = |err_plus: f64, threshold: f64, best: &mut Option<(Stump, f64)>| {
            for (polarity, err) in [(1.0, err_plus), (-1.0, total_w - err_plus)] {
                if best.as_ref().map_or(true, |(_, b)| err < b - 1e-12) {
                    *best = Some((
                        Stump {
                            feature: f,
                            threshold,
                            polarity,
                            alpha: 0.0,
                        },
                        err,
                    ));
                }
            }
        };

        consider(err_plus, x[order[0]][f] - 1.0, &mut best);
        for w in order.windows(2) {
            let i = w[0];
            // moving threshold above x[i]: i now predicted -1
            err_plus += if y_pm[i] > 0.0 { weights[i] } else { -weights[i] };
            if x[w[1]][f] > x[i][f] {
                let threshold = 0.5 * (x[i][f] + x[w[1]][f]);
                consider(err_plus, threshold, &mut best);
            }
        }
    }
    best.expect("at least one stump candidate exists")
}

pub fn fit_boosted_stumps(x: &[Vec<f64>], y: &[u8], rounds: usize) -> StumpsModel {
    let n = x.len();
    let y_pm: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let mut weights = vec![1.0 / n as f64; n];
    let mut stumps = Vec::with_capacity(rounds);

    for _ in 0..rounds {
        let (mut stump, err) = best_stump(x, &y_pm, &weights);
        let err = err.clamp(1e-10, 1.0 - 1e-10);
        let alpha = 0.5 * ((1.0 - err) / err).ln();
        stump.alpha = alpha;
        let mut z = 0.0;
        for i in 0..n {
            weights[i] *= (-alpha * y_pm[i] * stump.predict(&x[i])).exp();
            z += weights[i];
        }
        for w in weights.iter_mut() {
            *w /= z;
        }
        let done = alpha > 10.0; // perfect stump, further rounds are no-ops
        stumps.push(stump);
        if done {
            break;
        }
    }
    StumpsModel { stumps }
}
