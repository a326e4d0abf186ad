//! Majority vote, weighted vote, traditional stacking and the two-step
//! stacking estimator.
//!
//! First step: L base classifiers are fitted on each of K resamples of the
//! training pool and fused by a meta-combiner trained on the resample's
//! validation scores. Second step: the K first-step outputs are fused by
//! one more combiner trained on the held-out validation set. All 0.5
//! thresholds are inclusive-positive.

use crate::learners::tree::{build_forest, ForestModel, ForestOptions};
use crate::learners::{
    self, HyperParams, LearnerError, LearnerKind, LearnerSpec, TrainedClassifier,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("empty vote")]
    EmptyVote,
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("meta fit needs both classes present")]
    DegenerateClass,
    #[error("meta fit needs at least 10 rows, got {0}")]
    TooFewRows(usize),
    #[error("test index {0} appeared in a fitting subset")]
    PartitionLeak(usize),
    #[error("learner {kind} failed in split {split}: {source}")]
    Learner {
        kind: &'static str,
        split: usize,
        source: LearnerError,
    },
    #[error("non-finite weight at position {0}")]
    NonFiniteWeight(usize),
}

/// Eq.-(1)-style majority vote: 1(mean >= 0.5).
pub fn majority_vote(labels: &[u8]) -> Result<u8, EnsembleError> {
    if labels.is_empty() {
        return Err(EnsembleError::EmptyVote);
    }
    let mean = labels.iter().map(|&l| l as f64).sum::<f64>() / labels.len() as f64;
    Ok((mean >= 0.5) as u8)
}

/// Eq.-(2)-style weighted vote: 1(sum w_l c_l >= 0.5). Weights may be
/// negative.
pub fn weighted_vote(labels: &[u8], weights: &[f64]) -> Result<u8, EnsembleError> {
    if labels.is_empty() {
        return Err(EnsembleError::EmptyVote);
    }
    if labels.len() != weights.len() {
        return Err(EnsembleError::ArityMismatch {
            expected: labels.len(),
            got: weights.len(),
        });
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
        return Err(EnsembleError::NonFiniteWeight(i));
    }
    let sum: f64 = labels
        .iter()
        .zip(weights)
        .map(|(&c, &w)| w * c as f64)
        .sum();
    Ok((sum >= 0.5) as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaKind {
    RandomForest,
    LinearLeastSquares,
    /// Least squares shrunk toward the uniform weight vector 1/A. Used for
    /// the weighted-voting ensemble, where plain least squares on a small
    /// validation set produces unstable (often negative) weights for highly
    /// correlated voters; shrinkage keeps the combiner a quality-tilted
    /// majority vote.
    ShrunkLeastSquares,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetaState {
    Forest(ForestModel),
    /// Least-squares weights in the literal sum-of-weighted-outputs form
    /// (no intercept).
    Linear(Vec<f64>),
}

/// Fuses A base outputs into one score in [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaCombiner {
    pub kind: MetaKind,
    pub input_arity: usize,
    pub state: MetaState,
}

impl MetaCombiner {
    pub fn combine(&self, inputs: &[f64]) -> Result<f64, EnsembleError> {
        if inputs.len() != self.input_arity {
            return Err(EnsembleError::ArityMismatch {
                expected: self.input_arity,
                got: inputs.len(),
            });
        }
        let raw = match &self.state {
            MetaState::Forest(f) => f.predict(inputs),
            MetaState::Linear(w) => w.iter().zip(inputs).map(|(a, b)| a * b).sum(),
        };
        Ok(raw.clamp(0.0, 1.0))
    }
}

/// Minimum leaf size for first-stage (and traditional) random-forest
/// meta-combiners.
pub const FIRST_META_MIN_LEAF: usize = 5;

/// Minimum leaf size for the second-stage combiner. Its K inputs are bundle
/// scores that are strongly mutually correlated and its meta set is small, so
/// it is regularized much harder than the first-stage combiners: coarse
/// leaves keep it close to a smoothed average of the bundle scores instead of
/// memorizing noise in the second validation labels.
pub const SECOND_META_MIN_LEAF: usize = 28;

/// Fits a meta-combiner on base outputs against labels. The random-forest
/// kind uses fixed settings (200 trees, depth 6, per-split subsampling of
/// ceil(sqrt(A))) and is deterministic under `seed`; the linear kind solves
/// the normal equations of sum(w*c) against the labels.
pub fn fit_meta(
    base_outputs: &[Vec<f64>],
    labels: &[u8],
    kind: MetaKind,
    seed: u64,
) -> Result<MetaCombiner, EnsembleError> {
    fit_meta_with_leaf(base_outputs, labels, kind, seed, FIRST_META_MIN_LEAF)
}

/// As [`fit_meta`], with an explicit minimum leaf size for the forest kind.
pub fn fit_meta_with_leaf(
    base_outputs: &[Vec<f64>],
    labels: &[u8],
    kind: MetaKind,
    seed: u64,
    min_leaf: usize,
) -> Result<MetaCombiner, EnsembleError> {
    let n = base_outputs.len();
    if n < 10 {
        return Err(EnsembleError::TooFewRows(n));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == n {
        return Err(EnsembleError::DegenerateClass);
    }
    let arity = base_outputs[0].len();

    let state = match kind {
        MetaKind::RandomForest => {
            let yf: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let opts = ForestOptions {
                n_trees: 200,
                max_depth: 6,
                min_leaf,
                mtry: (arity as f64).sqrt().ceil() as usize,
                bootstrap: true,
                vote: false,
            };
            MetaState::Forest(build_forest(base_outputs, &yf, &opts, &mut rng))
        }
        MetaKind::LinearLeastSquares => {
            let mut xtx = vec![vec![0.0; arity]; arity];
            let mut xty = vec![0.0; arity];
            for (row, &label) in base_outputs.iter().zip(labels) {
                for i in 0..arity {
                    xty[i] += row[i] * label as f64;
                    for j in i..arity {
                        xtx[i][j] += row[i] * row[j];
                    }
                }
            }
            for i in 0..arity {
                for j in 0..i {
                    xtx[i][j] = xtx[j][i];
                }
            }
            let weights = match learners::common::solve_linear(&xtx, &xty) {
                Some(w) => w,
                None => {
                    // collinear base outputs: tiny ridge keeps the solve stable
                    let mut ridged = xtx.clone();
                    for (i, row) in ridged.iter_mut().enumerate() {
                        row[i] += 1e-8;
                    }
                    learners::common::solve_linear(&ridged, &xty)
                        .expect("ridged normal equations are solvable")
                }
            };
            MetaState::Linear(weights)
        }
    };

    Ok(MetaCombiner {
        kind,
        input_arity: arity,
        state,
    })
}

/// Records every subject index any fit operation consumed, for the
/// test-leakage audit.
#[derive(Debug, Default, Clone)]
pub struct AuditLog {
    pub fitted_indices: BTreeSet<usize>,
}

impl AuditLog {
    pub fn record(&mut self, indices: &[usize]) {
        self.fitted_indices.extend(indices.iter().copied());
    }

    pub fn disjoint_from(&self, test: &[usize]) -> bool {
        test.iter().all(|i| !self.fitted_indices.contains(i))
    }
}

/// Which signals flow into the combiners: continuous scores (default) or
/// thresholded labels (the literal equation form).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StackOptions {
    pub first_meta_kind: MetaKind,
    pub second_meta_kind: MetaKind,
    pub first_label_inputs: bool,
    pub second_label_inputs: bool,
}

impl Default for StackOptions {
    fn default() -> Self {
        StackOptions {
            first_meta_kind: MetaKind::RandomForest,
            second_meta_kind: MetaKind::RandomForest,
            first_label_inputs: false,
            second_label_inputs: false,
        }
    }
}

/// One stacked bundle: L classifiers plus their meta-combiner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FirstStepModel {
    pub classifiers: Vec<TrainedClassifier>,
    pub combiner: MetaCombiner,
    pub split_index: usize,
    pub label_inputs: bool,
}

impl FirstStepModel {
    pub fn base_outputs(&self, row: &[f64]) -> Result<Vec<f64>, LearnerError> {
        self.classifiers
            .iter()
            .map(|c| {
                let s = learners::predict_score(c, row)?;
                if !s.is_finite() {
                    return Err(LearnerError::NonFiniteScore(c.kind.name()));
                }
                Ok(if self.label_inputs {
                    (s >= 0.5) as u8 as f64
                } else {
                    s
                })
            })
            .collect()
    }

    pub fn predict_score(&self, row: &[f64]) -> Result<f64, EnsembleError> {
        let outputs = self.base_outputs(row).map_err(|e| EnsembleError::Learner {
            kind: "base",
            split: self.split_index,
            source: e,
        })?;
        self.combiner.combine(&outputs)
    }

    pub fn predict_label(&self, row: &[f64]) -> Result<u8, EnsembleError> {
        Ok((self.predict_score(row)? >= 0.5) as u8)
    }
}

/// A tuned roster entry: the spec plus its chosen hyperparameters.
pub type TunedRoster = Vec<(LearnerSpec, HyperParams)>;

/// Fits L classifiers on `train_idx` and the combiner on their `val_idx`
/// outputs. Per-learner seeds are derived from `seed` and the split index.
#[allow(clippy::too_many_arguments)]
pub fn fit_first_step(
    x: &[Vec<f64>],
    y: &[u8],
    train_idx: &[usize],
    val_idx: &[usize],
    roster: &TunedRoster,
    split_index: usize,
    seed: u64,
    opts: &StackOptions,
    audit: &mut AuditLog,
) -> Result<FirstStepModel, EnsembleError> {
    let tx: Vec<Vec<f64>> = train_idx.iter().map(|&i| x[i].clone()).collect();
    let ty: Vec<u8> = train_idx.iter().map(|&i| y[i]).collect();

    let mut classifiers = Vec::with_capacity(roster.len());
    for (l, (spec, hyper)) in roster.iter().enumerate() {
        let mut spec = spec.clone();
        spec.seed = seed
            .wrapping_add(1_000_003u64.wrapping_mul(split_index as u64))
            .wrapping_add(l as u64);
        let model = learners::fit(&spec, hyper, &tx, &ty).map_err(|e| EnsembleError::Learner {
            kind: spec.kind.name(),
            split: split_index,
            source: e,
        })?;
        classifiers.push(model);
    }
    audit.record(train_idx);

    let shell = FirstStepModel {
        classifiers,
        combiner: MetaCombiner {
            kind: opts.first_meta_kind,
            input_arity: roster.len(),
            state: MetaState::Linear(vec![0.0; roster.len()]),
        },
        split_index,
        label_inputs: opts.first_label_inputs,
    };
    let outputs: Vec<Vec<f64>> = val_idx
        .iter()
        .map(|&i| {
            shell.base_outputs(&x[i]).map_err(|e| EnsembleError::Learner {
                kind: "base",
                split: split_index,
                source: e,
            })
        })
        .collect::<Result<_, _>>()?;
    let labels: Vec<u8> = val_idx.iter().map(|&i| y[i]).collect();
    let combiner = fit_meta(
        &outputs,
        &labels,
        opts.first_meta_kind,
        seed.wrapping_add(777).wrapping_add(split_index as u64),
    )?;
    audit.record(val_idx);

    Ok(FirstStepModel {
        combiner,
        ..shell
    })
}

/// The full two-step estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoStepModel {
    pub first_steps: Vec<FirstStepModel>,
    pub second_combiner: MetaCombiner,
    pub second_label_inputs: bool,
    pub roster_kinds: Vec<LearnerKind>,
    pub partition_fingerprint: String,
}

impl TwoStepModel {
    pub fn k(&self) -> usize {
        self.first_steps.len()
    }

    /// The K first-step outputs feeding the second combiner.
    pub fn first_step_outputs(&self, row: &[f64]) -> Result<Vec<f64>, EnsembleError> {
        self.first_steps
            .iter()
            .map(|fs| {
                let s = fs.predict_score(row)?;
                Ok(if self.second_label_inputs {
                    (s >= 0.5) as u8 as f64
                } else {
                    s
                })
            })
            .collect()
    }

    pub fn predict(&self, row: &[f64]) -> Result<(u8, f64), EnsembleError> {
        let outputs = self.first_step_outputs(row)?;
        let score = self.second_combiner.combine(&outputs)?;
        Ok(((score >= 0.5) as u8, score))
    }
}

/// Fits the two-step model on the given partition. The test set never
/// enters any fit; a leak check enforces it.
pub fn fit_two_step(
    x: &[Vec<f64>],
    y: &[u8],
    partition: &crate::dataset::Partition,
    roster: &TunedRoster,
    seed: u64,
    opts: &StackOptions,
    audit: &mut AuditLog,
) -> Result<TwoStepModel, EnsembleError> {
    let test_set: BTreeSet<usize> = partition.test.iter().copied().collect();
    for (train_k, val_k) in &partition.first_step_splits {
        for &i in train_k.iter().chain(val_k).chain(&partition.validation0) {
            if test_set.contains(&i) {
                return Err(EnsembleError::PartitionLeak(i));
            }
        }
    }

    let mut first_steps = Vec::with_capacity(partition.k());
    for (k, (train_k, val_k)) in partition.first_step_splits.iter().enumerate() {
        first_steps.push(fit_first_step(
            x, y, train_k, val_k, roster, k, seed, opts, audit,
        )?);
    }

    let shell = TwoStepModel {
        first_steps,
        second_combiner: MetaCombiner {
            kind: opts.second_meta_kind,
            input_arity: partition.k(),
            state: MetaState::Linear(vec![0.0; partition.k()]),
        },
        second_label_inputs: opts.second_label_inputs,
        roster_kinds: roster.iter().map(|(s, _)| s.kind).collect(),
        partition_fingerprint: partition.fingerprint(),
    };

    let outputs: Vec<Vec<f64>> = partition
        .validation0
        .iter()
        .map(|&i| shell.first_step_outputs(&x[i]))
        .collect::<Result<_, _>>()?;
    let labels: Vec<u8> = partition.validation0.iter().map(|&i| y[i]).collect();
    let second_combiner = fit_meta_with_leaf(
        &outputs,
        &labels,
        opts.second_meta_kind,
        seed.wrapping_add(0xBEEF),
        SECOND_META_MIN_LEAF,
    )?;
    audit.record(&partition.validation0);

    Ok(TwoStepModel {
        second_combiner,
        ..shell
    })
}

/// Traditional single-layer stacking: one first-step bundle trained on the
/// whole training pool with the second-step validation set as meta set.
#[allow(clippy::too_many_arguments)]
pub fn fit_traditional_stack(
    x: &[Vec<f64>],
    y: &[u8],
    train_idx: &[usize],
    meta_idx: &[usize],
    roster: &TunedRoster,
    seed: u64,
    opts: &StackOptions,
    audit: &mut AuditLog,
) -> Result<FirstStepModel, EnsembleError> {
    fit_first_step(x, y, train_idx, meta_idx, roster, 0, seed, opts, audit)
}

/// Weighted-voting baseline: the same layout with the combiner constrained
/// to the linear weighted-sum form.
#[allow(clippy::too_many_arguments)]
pub fn fit_weighted_vote_baseline(
    x: &[Vec<f64>],
    y: &[u8],
    train_idx: &[usize],
    meta_idx: &[usize],
    roster: &TunedRoster,
    seed: u64,
    audit: &mut AuditLog,
) -> Result<FirstStepModel, EnsembleError> {
    let opts = StackOptions {
        first_meta_kind: MetaKind::LinearLeastSquares,
        second_meta_kind: MetaKind::LinearLeastSquares,
        first_label_inputs: false,
        second_label_inputs: false,
    };
    fit_first_step(x, y, train_idx, meta_idx, roster, 0, seed, &opts, audit)
}
