//! One-hidden-layer neural network with logistic activations, full-batch
//! gradient descent with momentum and a fixed iteration budget.

use crate::learners::common::{sigmoid, Standardizer};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub standardizer: Standardizer,
    /// hidden x input weights
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpModel {
    pub fn score(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.apply(row);
        let mut out = self.b2;
        for (wh, (&bh, &wo)) in self.w1.iter().zip(self.b1.iter().zip(&self.w2)) {
            let a: f64 = wh.iter().zip(&z).map(|(w, x)| w * x).sum::<f64>() + bh;
            out += wo * sigmoid(a);
        }
        sigmoid(out)
    }
}

pub struct MlpOptions {
    pub hidden: usize,
    pub iters: usize,
    pub lr: f64,
    pub momentum: f64,
}

impl Default for MlpOptions {
    fn default() -> Self {
        MlpOptions {
            hidden: 8,
            iters: 300,
            lr: 0.5,
            momentum: 0.9,
        }
    }
}

pub fn fit_mlp(x: &[Vec<f64>], y: &[u8], opts: &MlpOptions, rng: &mut ChaCha8Rng) -> MlpModel {
    let standardizer = Standardizer::fit(x);
    let z = standardizer.apply_all(x);
    let n = z.len();
    let p = z[0].len();
    let h = opts.hidden;
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();

    let mut w1: Vec<Vec<f64>> = (0..h)
        .map(|_| (0..p).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    let mut b1: Vec<f64> = (0..h).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut w2: Vec<f64> = (0..h).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut b2: f64 = 0.0;

    let mut vw1 = vec![vec![0.0; p]; h];
    let mut vb1 = vec![0.0; h];
    let mut vw2 = vec![0.0; h];
    let mut vb2 = 0.0;

    let mut hidden = vec![0.0; h];
    for _ in 0..opts.iters {
        let mut gw1 = vec![vec![0.0; p]; h];
        let mut gb1 = vec![0.0; h];
        let mut gw2 = vec![0.0; h];
        let mut gb2 = 0.0;

        for (row, &target) in z.iter().zip(&yf) {
            for j in 0..h {
                let a: f64 = w1[j].iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + b1[j];
                hidden[j] = sigmoid(a);
            }
            let out = sigmoid(
                w2.iter().zip(&hidden).map(|(w, a)| w * a).sum::<f64>() + b2,
            );
            let delta = out - target; // d loss / d pre-activation (cross entropy)
            for j in 0..h {
                gw2[j] += delta * hidden[j];
                let dh = delta * w2[j] * hidden[j] * (1.0 - hidden[j]);
                for (g, v) in gw1[j].iter_mut().zip(row) {
                    *g += dh * v;
                }
                gb1[j] += dh;
            }
            gb2 += delta;
        }

        let scale = opts.lr / n as f64;
        for j in 0..h {
            for k in 0..p {
                vw1[j][k] = opts.momentum * vw1[j][k] - scale * gw1[j][k];
                w1[j][k] += vw1[j][k];
            }
            vb1[j] = opts.momentum * vb1[j] - scale * gb1[j];
            b1[j] += vb1[j];
            vw2[j] = opts.momentum * vw2[j] - scale * gw2[j];
            w2[j] += vw2[j];
        }
        vb2 = opts.momentum * vb2 - scale * gb2;
        b2 += vb2;
    }

    MlpModel {
        standardizer,
        w1,
        b1,
        w2,
        b2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn learns_separable_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let label = (i % 2) as u8;
            let shift = if label == 1 { 2.0 } else { -2.0 };
            x.push(vec![shift + rng.gen::<f64>(), rng.gen::<f64>()]);
            y.push(label);
        }
        let mut nrng = ChaCha8Rng::seed_from_u64(2);
        let model = fit_mlp(&x, &y, &MlpOptions::default(), &mut nrng);
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(row, &label)| (model.score(row) >= 0.5) == (label == 1))
            .count();
        assert!(correct >= 195, "correct = {correct}");
    }

    #[test]
    fn learns_xor_with_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..200 {
            let a = rng.gen::<f64>() > 0.5;
            let b = rng.gen::<f64>() > 0.5;
            x.push(vec![
                a as i32 as f64 + 0.05 * rng.gen::<f64>(),
                b as i32 as f64 + 0.05 * rng.gen::<f64>(),
            ]);
            y.push((a ^ b) as u8);
        }
        let mut nrng = ChaCha8Rng::seed_from_u64(4);
        let opts = MlpOptions {
            hidden: 8,
            iters: 2000,
            lr: 1.0,
            momentum: 0.9,
        };
        let model = fit_mlp(&x, &y, &opts, &mut nrng);
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(row, &label)| (model.score(row) >= 0.5) == (label == 1))
            .count();
        assert!(correct >= 190, "correct = {correct}");
    }

    #[test]
    fn deterministic_under_seed() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0]];
        let y = vec![1, 0, 1, 0];
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        let a = fit_mlp(&x, &y, &MlpOptions::default(), &mut r1);
        let b = fit_mlp(&x, &y, &MlpOptions::default(), &mut r2);
        assert_eq!(a, b);
    }
}
