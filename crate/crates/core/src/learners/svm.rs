//! Hinge-loss linear SVM by full-batch subgradient descent, plus a random
//! Fourier feature approximation of the RBF kernel. Margins are squashed to
//! [0,1] scores through a slope fitted by 1-D maximum likelihood.

use crate::learners::common::{platt_slope, sigmoid, Standardizer};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub platt_slope: f64,
}

impl SvmModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.apply(row);
        self.margin_std(&z)
    }

    fn margin_std(&self, z: &[f64]) -> f64 {
        self.weights.iter().zip(z).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        sigmoid(self.platt_slope * self.margin(row))
    }
}

/// Pegasos-style deterministic subgradient descent on
/// lambda/2 ||w||^2 + mean hinge.
pub fn fit_linear_svm(x: &[Vec<f64>], y: &[u8], lambda: f64, iters: usize) -> SvmModel {
    let standardizer = Standardizer::fit(x);
    let z = standardizer.apply_all(x);
    fit_svm_on_std(&z, y, lambda, iters, standardizer)
}

fn fit_svm_on_std(
    z: &[Vec<f64>],
    y: &[u8],
    lambda: f64,
    iters: usize,
    standardizer: Standardizer,
) -> SvmModel {
    let n = z.len();
    let p = z[0].len();
    let ys: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();

    let mut w = vec![0.0; p];
    let mut b = 0.0;
    for t in 0..iters {
        let lr = 1.0 / (lambda * (t + 1) as f64);
        let mut grad_w: Vec<f64> = w.iter().map(|wi| lambda * wi).collect();
        let mut grad_b = 0.0;
        for (row, &target) in z.iter().zip(&ys) {
            let m: f64 = w.iter().zip(row).map(|(a, c)| a * c).sum::<f64>() + b;
            if target * m < 1.0 {
                for (g, v) in grad_w.iter_mut().zip(row) {
                    *g -= target * v / n as f64;
                }
                grad_b -= target / n as f64;
            }
        }
        for (wi, g) in w.iter_mut().zip(&grad_w) {
            *wi -= lr.min(1.0) * g;
        }
        b -= lr.min(1.0) * grad_b;
    }

    let mut model = SvmModel {
        standardizer,
        weights: w,
        bias: b,
        platt_slope: 1.0,
    };
    let margins: Vec<f64> = z.iter().map(|row| model.margin_std(row)).collect();
    model.platt_slope = platt_slope(&margins, y);
    model
}

/// RBF kernel approximation: cos(omega' z + phase) features with
/// omega ~ N(0, 2*gamma I), then a linear SVM in feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RffModel {
    pub standardizer: Standardizer,
    /// One frequency vector per random feature.
    pub omega: Vec<Vec<f64>>,
    pub phase: Vec<f64>,
    pub svm: SvmModel,
}

impl RffModel {
    fn features(&self, row: &[f64]) -> Vec<f64> {
        let z = self.standardizer.apply(row);
        let d = self.omega.len() as f64;
        self.omega
            .iter()
            .zip(&self.phase)
            .map(|(w, &ph)| {
                let dot: f64 = w.iter().zip(&z).map(|(a, b)| a * b).sum();
                (2.0 / d).sqrt() * (dot + ph).cos()
            })
            .collect()
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        self.svm.score(&self.features(row))
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen::<f64>().max(1e-12);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn fit_rff_svm(
    x: &[Vec<f64>],
    y: &[u8],
    gamma: f64,
    n_features: usize,
    lambda: f64,
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> RffModel {
    let standardizer = Standardizer::fit(x);
    let p = x[0].len();
    let omega: Vec<Vec<f64>> = (0..n_features)
        .map(|_| (0..p).map(|_| normal(rng) * (2.0 * gamma).sqrt()).collect())
        .collect();
    let phase: Vec<f64> = (0..n_features)
        .map(|_| rng.gen::<f64>() * 2.0 * std::f64::consts::PI)
        .collect();

    let shell = RffModel {
        standardizer,
        omega,
        phase,
        svm: SvmModel {
            standardizer: Standardizer {
                mean: vec![],
                sd: vec![],
            },
            weights: vec![],
            bias: 0.0,
            platt_slope: 1.0,
        },
    };
    let feats: Vec<Vec<f64>> = x.iter().map(|row| shell.features(row)).collect();
    // features are already bounded; identity standardizer
    let identity = Standardizer {
        mean: vec![0.0; n_features],
        sd: vec![1.0; n_features],
    };
    let svm = fit_svm_on_std(&feats, y, lambda, iters, identity);

    RffModel {
        standardizer: shell.standardizer,
        omega: shell.omega,
        phase: shell.phase,
        svm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn separable(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = (i % 2) as u8;
            let shift = if label == 1 { 2.5 } else { -2.5 };
            x.push(vec![shift + rng.gen::<f64>(), rng.gen::<f64>() * 2.0]);
            y.push(label);
        }
        (x, y)
    }

    #[test]
    fn linear_svm_separates() {
        let (x, y) = separable(200, 7);
        let model = fit_linear_svm(&x, &y, 0.01, 300);
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(row, &label)| (model.score(row) >= 0.5) == (label == 1))
            .count();
        assert!(correct >= 198, "correct = {correct}");
    }

    #[test]
    fn score_half_at_zero_margin() {
        let (x, y) = separable(100, 8);
        let model = fit_linear_svm(&x, &y, 0.01, 200);
        // a raw row with zero margin along feature 0
        let z0 = -model.bias / model.weights[0];
        let raw0 = z0 * model.standardizer.sd[0] + model.standardizer.mean[0];
        let raw1 = model.standardizer.mean[1];
        let score = model.score(&[raw0, raw1]);
        assert!((score - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rff_handles_radial_structure() {
        // ring data: inner circle positive, outer negative
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..300 {
            let label = (i % 2) as u8;
            let r = if label == 1 { 0.5 } else { 2.0 };
            let th = rng.gen::<f64>() * std::f64::consts::TAU;
            x.push(vec![r * th.cos() + 0.05 * normal(&mut rng), r * th.sin() + 0.05 * normal(&mut rng)]);
            y.push(label);
        }
        let mut frng = ChaCha8Rng::seed_from_u64(10);
        let model = fit_rff_svm(&x, &y, 1.0, 150, 0.003, 300, &mut frng);
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(row, &label)| (model.score(row) >= 0.5) == (label == 1))
            .count();
        assert!(correct as f64 >= 0.95 * 300.0, "correct = {correct}");
    }

    #[test]
    fn deterministic_under_seed() {
        let (x, y) = separable(100, 11);
        let mut r1 = ChaCha8Rng::seed_from_u64(42);
        let mut r2 = ChaCha8Rng::seed_from_u64(42);
        let a = fit_rff_svm(&x, &y, 0.5, 50, 0.01, 100, &mut r1);
        let b = fit_rff_svm(&x, &y, 0.5, 50, 0.01, 100, &mut r2);
        assert_eq!(a, b);
    }
}
