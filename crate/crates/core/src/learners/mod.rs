//! The roster of base classifiers behind one train/score interface.
//!
//! Fourteen learner kinds, each trained from scratch, each emitting a
//! positive-class score in [0,1]. Hyperparameters come from small named
//! grids tuned by stratified cross-validation.

pub mod common;
pub mod linear;
pub mod nn;
pub mod stumps;
pub mod svm;
pub mod tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use common::Standardizer;
use linear::LinearModel;
use nn::{MlpModel, MlpOptions};
use stumps::StumpsModel;
use svm::{RffModel, SvmModel};
use tree::{ForestModel, ForestOptions, TreeNode, TreeOptions};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("training subset has a single class")]
    DegenerateClass,
    #[error("fold {0} is missing a class")]
    DegenerateFold(usize),
    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least 2 rows per class, class {0} has {1}")]
    ClassTooSmall(u8, usize),
    #[error("{0} produced a non-finite score")]
    NonFiniteScore(&'static str),
}

/// The fourteen base classifier kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    LogisticRegression,
    PenalizedLogistic,
    Lda,
    GaussianNaiveBayes,
    Knn,
    WeightedKnn,
    DecisionTree,
    RandomForest,
    LinearSvm,
    RbfSvmApprox,
    NeuralNet1h,
    ModelAvgNeuralNet,
    BoostedStumps,
    BayesLinear,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 14] = [
        LearnerKind::LogisticRegression,
        LearnerKind::PenalizedLogistic,
        LearnerKind::Lda,
        LearnerKind::GaussianNaiveBayes,
        LearnerKind::Knn,
        LearnerKind::WeightedKnn,
        LearnerKind::DecisionTree,
        LearnerKind::RandomForest,
        LearnerKind::LinearSvm,
        LearnerKind::RbfSvmApprox,
        LearnerKind::NeuralNet1h,
        LearnerKind::ModelAvgNeuralNet,
        LearnerKind::BoostedStumps,
        LearnerKind::BayesLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::LogisticRegression => "logistic_regression",
            LearnerKind::PenalizedLogistic => "penalized_logistic",
            LearnerKind::Lda => "lda",
            LearnerKind::GaussianNaiveBayes => "gaussian_naive_bayes",
            LearnerKind::Knn => "knn",
            LearnerKind::WeightedKnn => "weighted_knn",
            LearnerKind::DecisionTree => "decision_tree",
            LearnerKind::RandomForest => "random_forest",
            LearnerKind::LinearSvm => "linear_svm",
            LearnerKind::RbfSvmApprox => "rbf_svm_approx",
            LearnerKind::NeuralNet1h => "neural_net_1h",
            LearnerKind::ModelAvgNeuralNet => "model_avg_neural_net",
            LearnerKind::BoostedStumps => "boosted_stumps",
            LearnerKind::BayesLinear => "bayes_linear",
        }
    }
}

pub type HyperParams = BTreeMap<String, f64>;

fn params(pairs: &[(&str, f64)]) -> HyperParams {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

/// A learner kind plus its tuning grid and training seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub hyper_grid: Vec<HyperParams>,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn with_defaults(kind: LearnerKind, seed: u64) -> Self {
        let hyper_grid = match kind {
            LearnerKind::LogisticRegression
            | LearnerKind::Lda
            | LearnerKind::GaussianNaiveBayes => vec![params(&[])],
            LearnerKind::PenalizedLogistic => [0.001, 0.01, 0.1, 1.0]
                .iter()
                .map(|&l| params(&[("lambda", l)]))
                .collect(),
            LearnerKind::Knn => [1.0, 3.0, 5.0, 9.0, 15.0]
                .iter()
                .map(|&k| params(&[("k", k)]))
                .collect(),
            LearnerKind::WeightedKnn => [3.0, 5.0, 9.0, 15.0]
                .iter()
                .map(|&k| params(&[("k", k)]))
                .collect(),
            LearnerKind::DecisionTree => [2.0, 4.0, 8.0]
                .iter()
                .map(|&d| params(&[("max_depth", d)]))
                .collect(),
            LearnerKind::RandomForest => [4.0, 8.0]
                .iter()
                .map(|&d| {
                    params(&[
                        ("n_trees", 100.0),
                        ("max_depth", d),
                        ("mtry", 0.0),
                        ("bootstrap", 1.0),
                    ])
                })
                .collect(),
            LearnerKind::LinearSvm => [0.001, 0.01, 0.1]
                .iter()
                .map(|&l| params(&[("lambda", l)]))
                .collect(),
            LearnerKind::RbfSvmApprox => [0.05, 0.2, 1.0]
                .iter()
                .map(|&g| params(&[("gamma", g), ("n_features", 100.0)]))
                .collect(),
            LearnerKind::NeuralNet1h => [4.0, 8.0, 16.0]
                .iter()
                .map(|&h| params(&[("hidden", h)]))
                .collect(),
            LearnerKind::ModelAvgNeuralNet => vec![params(&[("hidden", 8.0)])],
            LearnerKind::BoostedStumps => [20.0, 50.0]
                .iter()
                .map(|&t| params(&[("rounds", t)]))
                .collect(),
            LearnerKind::BayesLinear => [0.5, 2.0, 10.0]
                .iter()
                .map(|&v| params(&[("prior_var", v)]))
                .collect(),
        };
        LearnerSpec {
            kind,
            hyper_grid,
            seed,
        }
    }
}

/// The L=14 default roster.
pub fn default_roster(seed: u64) -> Vec<LearnerSpec> {
    LearnerKind::ALL
        .iter()
        .enumerate()
        .map(|(i, &kind)| LearnerSpec::with_defaults(kind, seed.wrapping_add(i as u64)))
        .collect()
}

/// Fitted parameters, one variant per learner family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedState {
    Linear(LinearModel),
    NaiveBayes(NbModel),
    Knn(KnnModel),
    Tree(TreeNode),
    Forest(ForestModel),
    Svm(SvmModel),
    Rff(RffModel),
    Mlp(MlpModel),
    MlpAvg(Vec<MlpModel>),
    Stumps(StumpsModel),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub kind: LearnerKind,
    pub chosen_hyperparams: HyperParams,
    pub state: FittedState,
    pub feature_count: usize,
    /// Fit warnings such as non-convergence or a ridged covariance.
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub log_prior: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub vars: [Vec<f64>; 2],
}

impl NbModel {
    fn score(&self, row: &[f64]) -> f64 {
        let mut log_like = [0.0f64; 2];
        for c in 0..2 {
            let mut acc = self.log_prior[c];
            for ((&x, &m), &v) in row.iter().zip(&self.means[c]).zip(&self.vars[c]) {
                acc += -0.5 * ((x - m) * (x - m) / v + v.ln());
            }
            log_like[c] = acc;
        }
        common::sigmoid(log_like[1] - log_like[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub weighted: bool,
    pub standardizer: Standardizer,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl KnnModel {
    fn score(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.apply(row);
        let mut dists: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d: f64 = r.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
                (d.sqrt(), i)
            })
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let k = self.k.min(dists.len());
        if self.weighted {
            let mut num = 0.0;
            let mut den = 0.0;
            for &(d, i) in &dists[..k] {
                let w = 1.0 / (d + 1e-9);
                num += w * self.labels[i] as f64;
                den += w;
            }
            num / den
        } else {
            dists[..k]
                .iter()
                .map(|&(_, i)| self.labels[i] as f64)
                .sum::<f64>()
                / k as f64
        }
    }
}

fn class_counts(y: &[u8]) -> (usize, usize) {
    let pos = y.iter().filter(|&&v| v == 1).count();
    (pos, y.len() - pos)
}

fn check_classes(y: &[u8]) -> Result<(), LearnerError> {
    let (pos, neg) = class_counts(y);
    if pos == 0 || neg == 0 {
        return Err(LearnerError::DegenerateClass);
    }
    if pos < 2 {
        return Err(LearnerError::ClassTooSmall(1, pos));
    }
    if neg < 2 {
        return Err(LearnerError::ClassTooSmall(0, neg));
    }
    Ok(())
}

fn get(h: &HyperParams, key: &str, default: f64) -> f64 {
    h.get(key).copied().unwrap_or(default)
}

/// Fits one learner. Deterministic given (spec.seed, hyperparams, data).
pub fn fit(
    spec: &LearnerSpec,
    hyper: &HyperParams,
    x: &[Vec<f64>],
    y: &[u8],
) -> Result<TrainedClassifier, LearnerError> {
    check_classes(y)?;
    let feature_count = x[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x9E3779B97F4A7C15));
    let mut flags = Vec::new();

    let state = match spec.kind {
        LearnerKind::LogisticRegression => {
            let fit = linear::fit_logistic(x, y, 1e-4, 800);
            if !fit.converged {
                flags.push(format!("non_convergence(grad={:.3e})", fit.final_grad_norm));
            }
            FittedState::Linear(fit.model)
        }
        LearnerKind::PenalizedLogistic => {
            let lambda = get(hyper, "lambda", 0.01);
            let fit = linear::fit_logistic(x, y, lambda, 800);
            if !fit.converged {
                flags.push(format!("non_convergence(grad={:.3e})", fit.final_grad_norm));
            }
            FittedState::Linear(fit.model)
        }
        LearnerKind::BayesLinear => {
            // MAP estimate under a Gaussian prior N(0, prior_var I)
            let prior_var = get(hyper, "prior_var", 2.0);
            let lambda = 1.0 / (prior_var * x.len() as f64);
            let fit = linear::fit_logistic(x, y, lambda, 800);
            if !fit.converged {
                flags.push(format!("non_convergence(grad={:.3e})", fit.final_grad_norm));
            }
            FittedState::Linear(fit.model)
        }
        LearnerKind::Lda => {
            let fit = linear::fit_lda(x, y);
            if fit.ridged {
                flags.push("singular_covariance_ridged".to_string());
            }
            FittedState::Linear(fit.model)
        }
        LearnerKind::GaussianNaiveBayes => {
            let p = feature_count;
            let mut means = [vec![0.0; p], vec![0.0; p]];
            let mut vars = [vec![0.0; p], vec![0.0; p]];
            let mut counts = [0usize; 2];
            for (row, &label) in x.iter().zip(y) {
                let c = label as usize;
                counts[c] += 1;
                for (m, v) in means[c].iter_mut().zip(row) {
                    *m += v;
                }
            }
            for c in 0..2 {
                for m in means[c].iter_mut() {
                    *m /= counts[c] as f64;
                }
            }
            for (row, &label) in x.iter().zip(y) {
                let c = label as usize;
                for j in 0..p {
                    let d = row[j] - means[c][j];
                    vars[c][j] += d * d;
                }
            }
            // overall variance sets the floor for near-constant features
            let floor: f64 = {
                let s = Standardizer::fit(x);
                1e-9 * s.sd.iter().map(|v| v * v).fold(0.0f64, f64::max).max(1e-9)
            };
            for c in 0..2 {
                for v in vars[c].iter_mut() {
                    *v = (*v / (counts[c] as f64 - 1.0).max(1.0)).max(floor);
                }
            }
            let n = y.len() as f64;
            FittedState::NaiveBayes(NbModel {
                log_prior: [(counts[0] as f64 / n).ln(), (counts[1] as f64 / n).ln()],
                means,
                vars,
            })
        }
        LearnerKind::Knn | LearnerKind::WeightedKnn => {
            let standardizer = Standardizer::fit(x);
            FittedState::Knn(KnnModel {
                k: get(hyper, "k", 5.0) as usize,
                weighted: spec.kind == LearnerKind::WeightedKnn,
                rows: standardizer.apply_all(x),
                labels: y.to_vec(),
                standardizer,
            })
        }
        LearnerKind::DecisionTree => {
            let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
            let indices: Vec<usize> = (0..x.len()).collect();
            let opts = TreeOptions {
                max_depth: get(hyper, "max_depth", 4.0) as usize,
                min_leaf: 1,
                mtry: 0,
            };
            FittedState::Tree(tree::build_tree(x, &yf, &indices, &opts, &mut rng))
        }
        LearnerKind::RandomForest => {
            let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
            let opts = ForestOptions {
                n_trees: get(hyper, "n_trees", 100.0) as usize,
                max_depth: get(hyper, "max_depth", 8.0) as usize,
                min_leaf: 1,
                mtry: get(hyper, "mtry", 0.0) as usize,
                bootstrap: get(hyper, "bootstrap", 1.0) != 0.0,
                vote: true,
            };
            FittedState::Forest(tree::build_forest(x, &yf, &opts, &mut rng))
        }
        LearnerKind::LinearSvm => {
            let lambda = get(hyper, "lambda", 0.01);
            FittedState::Svm(svm::fit_linear_svm(x, y, lambda, 300))
        }
        LearnerKind::RbfSvmApprox => {
            let gamma = get(hyper, "gamma", 0.2);
            let d = get(hyper, "n_features", 100.0) as usize;
            FittedState::Rff(svm::fit_rff_svm(x, y, gamma, d, 0.01, 300, &mut rng))
        }
        LearnerKind::NeuralNet1h => {
            let opts = MlpOptions {
                hidden: get(hyper, "hidden", 8.0) as usize,
                ..MlpOptions::default()
            };
            FittedState::Mlp(nn::fit_mlp(x, y, &opts, &mut rng))
        }
        LearnerKind::ModelAvgNeuralNet => {
            let opts = MlpOptions {
                hidden: get(hyper, "hidden", 8.0) as usize,
                ..MlpOptions::default()
            };
            let nets = (0..5).map(|_| nn::fit_mlp(x, y, &opts, &mut rng)).collect();
            FittedState::MlpAvg(nets)
        }
        LearnerKind::BoostedStumps => {
            let rounds = get(hyper, "rounds", 50.0) as usize;
            FittedState::Stumps(stumps::fit_boosted_stumps(x, y, rounds))
        }
    };

    Ok(TrainedClassifier {
        kind: spec.kind,
        chosen_hyperparams: hyper.clone(),
        state,
        feature_count,
        flags,
    })
}

/// Positive-class score in [0,1].
pub fn predict_score(model: &TrainedClassifier, row: &[f64]) -> Result<f64, LearnerError> {
    if row.len() != model.feature_count {
        return Err(LearnerError::DimensionMismatch {
            expected: model.feature_count,
            got: row.len(),
        });
    }
    let s = match &model.state {
        FittedState::Linear(m) => m.score(row),
        FittedState::NaiveBayes(m) => m.score(row),
        FittedState::Knn(m) => m.score(row),
        FittedState::Tree(t) => t.predict(row),
        FittedState::Forest(f) => f.predict(row),
        FittedState::Svm(m) => m.score(row),
        FittedState::Rff(m) => m.score(row),
        FittedState::Mlp(m) => m.score(row),
        FittedState::MlpAvg(nets) => {
            nets.iter().map(|n| n.score(row)).sum::<f64>() / nets.len() as f64
        }
        FittedState::Stumps(m) => m.score(row),
    };
    Ok(s.clamp(0.0, 1.0))
}

/// 1(score >= 0.5); the threshold is inclusive-positive.
pub fn predict_label(model: &TrainedClassifier, row: &[f64]) -> Result<u8, LearnerError> {
    Ok((predict_score(model, row)? >= 0.5) as u8)
}

/// Stratified fold assignment: class members are shuffled under the seed
/// and dealt round-robin, so every fold keeps the class ratio.
pub fn stratified_folds(y: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>, LearnerError> {
    let (pos, neg) = class_counts(y);
    if pos < folds || neg < folds {
        return Err(LearnerError::DegenerateFold(0));
    }
    let mut assignment = vec![0usize; y.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for class in [1u8, 0u8] {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        use rand::seq::SliceRandom;
        members.shuffle(&mut rng);
        for (pos_in_class, &i) in members.iter().enumerate() {
            assignment[i] = pos_in_class % folds;
        }
    }
    Ok(assignment)
}

/// Grid search by stratified cross-validation. Picks the grid point with
/// the highest mean fold accuracy; ties break toward the earlier grid
/// entry. A singleton grid skips CV entirely.
pub fn tune(
    spec: &LearnerSpec,
    x: &[Vec<f64>],
    y: &[u8],
    folds: usize,
) -> Result<HyperParams, LearnerError> {
    assert!(folds >= 2, "need at least 2 folds");
    if spec.hyper_grid.len() == 1 {
        return Ok(spec.hyper_grid[0].clone());
    }
    check_classes(y)?;
    let assignment = stratified_folds(y, folds, spec.seed)?;

    let mut best: Option<(f64, usize)> = None;
    for (gi, hyper) in spec.hyper_grid.iter().enumerate() {
        let mut fold_acc = Vec::with_capacity(folds);
        for f in 0..folds {
            let train_idx: Vec<usize> = (0..x.len()).filter(|&i| assignment[i] != f).collect();
            let val_idx: Vec<usize> = (0..x.len()).filter(|&i| assignment[i] == f).collect();
            let tx: Vec<Vec<f64>> = train_idx.iter().map(|&i| x[i].clone()).collect();
            let ty: Vec<u8> = train_idx.iter().map(|&i| y[i]).collect();
            if ty.iter().all(|&v| v == ty[0]) {
                return Err(LearnerError::DegenerateFold(f));
            }
            let model = fit(spec, hyper, &tx, &ty)?;
            let correct = val_idx
                .iter()
                .filter(|&&i| predict_label(&model, &x[i]).unwrap() == y[i])
                .count();
            fold_acc.push(correct as f64 / val_idx.len() as f64);
        }
        let mean = fold_acc.iter().sum::<f64>() / folds as f64;
        if best.map_or(true, |(b, _)| mean > b + 1e-12) {
            best = Some((mean, gi));
        }
    }
    let (_, gi) = best.unwrap();
    Ok(spec.hyper_grid[gi].clone())
}

/// Convenience: tune then fit.
pub fn tune_and_fit(
    spec: &LearnerSpec,
    x: &[Vec<f64>],
    y: &[u8],
    folds: usize,
) -> Result<TrainedClassifier, LearnerError> {
    let hyper = tune(spec, x, y, folds)?;
    fit(spec, &hyper, x, y)
}
