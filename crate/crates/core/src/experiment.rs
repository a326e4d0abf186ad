//! Config-driven experiment harness: load or generate a cohort, then for
//! each replicate draw a fresh partition, fit PCA on the training pool
//! only, tune and fit the roster, apply the accuracy exclusion rule, fit
//! the requested ensemble variants, and score everything on the untouched
//! test set. Replicates run in parallel; aggregation is deterministic
//! under the configured seed.

use crate::dataset::{
    self, make_paper_partition, Dataset, DatasetError, Partition, StrainBlock, CLINICAL_START,
    GLPS_START, GS_START, NUM_CLINICAL, SEGMENTS,
};
use crate::ensemble::{
    fit_meta, fit_two_step, AuditLog, EnsembleError, FirstStepModel, MetaCombiner, MetaKind,
    MetaState, StackOptions, TunedRoster, TwoStepModel,
};
use crate::learners::{self, LearnerKind, LearnerSpec, TrainedClassifier};
use crate::metrics::{self, ConfusionMatrix};
use crate::stats::pca::{fit_pca_on, select_pcs, PcPolicy, PcaModel};
use crate::stats::{screen_features, ScreeningEntry};
use crate::synthgen::{self, GeneratorConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(#[from] DatasetError),
    #[error("generator error: {0}")]
    Generator(#[from] synthgen::GenError),
    #[error("{failed} of {total} replicates failed (at most 10% may fail)")]
    TooManyFailures { failed: usize, total: usize },
    #[error("test-set leakage detected in {0} replicates")]
    LeakageDetected(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// The seven ensemble variants the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleVariant {
    TwoStep14,
    TwoStep3,
    TradStack14,
    TradStack3,
    WeightedVote14,
    WeightedVote3,
    TwoStepGlpsOnly,
}

impl EnsembleVariant {
    pub const ALL: [EnsembleVariant; 7] = [
        EnsembleVariant::TwoStep14,
        EnsembleVariant::TwoStep3,
        EnsembleVariant::TradStack14,
        EnsembleVariant::TradStack3,
        EnsembleVariant::WeightedVote14,
        EnsembleVariant::WeightedVote3,
        EnsembleVariant::TwoStepGlpsOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnsembleVariant::TwoStep14 => "two_step_14",
            EnsembleVariant::TwoStep3 => "two_step_3",
            EnsembleVariant::TradStack14 => "trad_stack_14",
            EnsembleVariant::TradStack3 => "trad_stack_3",
            EnsembleVariant::WeightedVote14 => "weighted_vote_14",
            EnsembleVariant::WeightedVote3 => "weighted_vote_3",
            EnsembleVariant::TwoStepGlpsOnly => "two_step_glps_only",
        }
    }

    fn uses_small_roster(self) -> bool {
        matches!(
            self,
            EnsembleVariant::TwoStep3
                | EnsembleVariant::TradStack3
                | EnsembleVariant::WeightedVote3
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// CSV cohort on disk.
    CohortPath(PathBuf),
    /// Seeded synthetic cohort.
    Generator(GeneratorConfig),
}

fn default_k() -> usize {
    10
}
fn default_replicates() -> usize {
    50
}
fn default_threshold() -> f64 {
    0.60
}
fn default_tune_folds() -> usize {
    3
}
fn default_roster() -> Vec<LearnerKind> {
    LearnerKind::ALL.to_vec()
}
fn default_ensembles() -> Vec<EnsembleVariant> {
    EnsembleVariant::ALL.to_vec()
}
fn default_pc_policy() -> PcPolicy {
    PcPolicy::PaperFixed
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default = "default_roster")]
    pub roster: Vec<LearnerKind>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_pc_policy")]
    pub pc_policy: PcPolicy,
    #[serde(default = "default_threshold")]
    pub exclusion_threshold: f64,
    #[serde(default = "default_ensembles")]
    pub ensembles: Vec<EnsembleVariant>,
    #[serde(default = "default_tune_folds")]
    pub tune_folds: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.replicates < 1 {
            return Err(ExperimentError::Config("replicates must be >= 1".into()));
        }
        if !(self.exclusion_threshold > 0.0 && self.exclusion_threshold < 1.0) {
            return Err(ExperimentError::Config(
                "exclusion_threshold must be in (0,1)".into(),
            ));
        }
        if self.k < 1 {
            return Err(ExperimentError::Config("k must be >= 1".into()));
        }
        if self.roster.is_empty() {
            return Err(ExperimentError::Config("roster must not be empty".into()));
        }
        if self.ensembles.is_empty() {
            return Err(ExperimentError::Config(
                "at least one ensemble variant required".into(),
            ));
        }
        if self.tune_folds < 2 {
            return Err(ExperimentError::Config("tune_folds must be >= 2".into()));
        }
        Ok(())
    }

    pub fn default_synthetic() -> Self {
        ExperimentConfig {
            data: DataSource::Generator(synthgen::default_calibration()),
            roster: default_roster(),
            k: default_k(),
            replicates: default_replicates(),
            seed: 42,
            pc_policy: default_pc_policy(),
            exclusion_threshold: default_threshold(),
            ensembles: default_ensembles(),
            tune_folds: default_tune_folds(),
            output_dir: None,
        }
    }
}

/// Test-set performance of one model in one replicate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RunMetrics {
    pub accuracy: f64,
    pub auc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

fn run_metrics(scores: &[f64], truth: &[u8]) -> Result<RunMetrics, String> {
    let pred: Vec<u8> = scores.iter().map(|&s| (s >= 0.5) as u8).collect();
    let cm: ConfusionMatrix = metrics::confusion(&pred, truth).map_err(|e| e.to_string())?;
    let roc = metrics::roc_and_auc(scores, truth).map_err(|e| e.to_string())?;
    Ok(RunMetrics {
        accuracy: metrics::accuracy(&cm),
        auc: roc.auc,
        sensitivity: metrics::sensitivity(&cm).map_err(|e| e.to_string())?,
        specificity: metrics::specificity(&cm).map_err(|e| e.to_string())?,
    })
}

/// One successful replicate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateSuccess {
    pub seed: u64,
    pub excluded: Vec<String>,
    pub ensemble_metrics: BTreeMap<String, RunMetrics>,
    pub individual_test: BTreeMap<String, RunMetrics>,
    pub individual_validation_accuracy: BTreeMap<String, f64>,
    pub audit_ok: bool,
}

/// Mean and sample standard deviation over replicates, with the raw
/// per-replicate values kept for recomputation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub sd: f64,
    pub values: Vec<f64>,
}

impl Aggregate {
    pub fn from_values(values: Vec<f64>) -> Aggregate {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Aggregate { mean, sd, values }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelAggregate {
    pub accuracy: Aggregate,
    pub auc: Aggregate,
    pub sensitivity: Aggregate,
    pub specificity: Aggregate,
}

impl ModelAggregate {
    fn from_runs(runs: &[RunMetrics]) -> ModelAggregate {
        ModelAggregate {
            accuracy: Aggregate::from_values(runs.iter().map(|r| r.accuracy).collect()),
            auc: Aggregate::from_values(runs.iter().map(|r| r.auc).collect()),
            sensitivity: Aggregate::from_values(runs.iter().map(|r| r.sensitivity).collect()),
            specificity: Aggregate::from_values(runs.iter().map(|r| r.specificity).collect()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: ExperimentConfig,
    pub replicates_requested: usize,
    pub replicates_succeeded: usize,
    pub seed_log: Vec<u64>,
    pub failures: Vec<(usize, String)>,
    pub audit_violations: usize,
    pub exclusions_per_replicate: Vec<Vec<String>>,
    pub ensembles: BTreeMap<String, ModelAggregate>,
    /// Per-learner test-set metrics when fitted alone on the training pool.
    pub individuals_test: BTreeMap<String, ModelAggregate>,
    /// Per-learner validation accuracy (the exclusion-rule measurement).
    pub individuals_validation_accuracy: BTreeMap<String, Aggregate>,
}

/// Full experiment output: the serializable report plus the artifacts the
/// report files are built from.
pub struct ExperimentOutput {
    pub report: EvaluationReport,
    /// Pooled (score, label) pairs per ensemble across replicates.
    pub pooled_scores: BTreeMap<String, Vec<(f64, u8)>>,
    pub screening: Vec<ScreeningEntry>,
    pub pca_models: Vec<PcaModel>,
}

/// Projects a raw 71-feature row through the three block PCA models into
/// the reduced model-input layout (PC scores, then the unblocked columns).
pub fn reduce_row(row: &[f64], pss: &PcaModel, ssr: &PcaModel, tp: &PcaModel) -> Vec<f64> {
    let mut v = Vec::with_capacity(pss.retained + ssr.retained + tp.retained + 20);
    v.extend(pss.project(&row[StrainBlock::Pss.start()..StrainBlock::Pss.start() + SEGMENTS]));
    v.extend(ssr.project(&row[StrainBlock::Ssr.start()..StrainBlock::Ssr.start() + SEGMENTS]));
    v.extend(tp.project(&row[StrainBlock::Tp.start()..StrainBlock::Tp.start() + SEGMENTS]));
    v.extend_from_slice(&row[GS_START..]);
    v
}

/// GLPS-ablation input: the three GLPS layers plus the clinical columns.
pub fn glps_only_row(row: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(3 + NUM_CLINICAL);
    v.extend_from_slice(&row[GLPS_START..GLPS_START + 3]);
    v.extend_from_slice(&row[CLINICAL_START..]);
    v
}

/// Column indices of the GLPS-ablation input within a raw row.
pub fn glps_only_indices() -> Vec<usize> {
    (GLPS_START..GLPS_START + 3)
        .chain(CLINICAL_START..CLINICAL_START + NUM_CLINICAL)
        .collect()
}

pub fn load_or_generate(source: &DataSource) -> Result<Dataset, ExperimentError> {
    match source {
        DataSource::CohortPath(p) => Ok(dataset::load_cohort(
            p,
            &crate::dataset::FeatureSchema::standard(),
        )?),
        DataSource::Generator(cfg) => Ok(synthgen::generate_cohort(cfg)?),
    }
}

/// Builds a stacked bundle from already-fitted base classifiers by fitting
/// only the combiner on the meta rows. Used so the pool-fitted roster can
/// back both the traditional-stacking and weighted-voting variants without
/// refitting.
fn stack_from_fitted(
    classifiers: Vec<TrainedClassifier>,
    x: &[Vec<f64>],
    y: &[u8],
    meta_idx: &[usize],
    kind: MetaKind,
    label_inputs: bool,
    seed: u64,
    audit: &mut AuditLog,
) -> Result<FirstStepModel, EnsembleError> {
    let shell = FirstStepModel {
        combiner: MetaCombiner {
            kind,
            input_arity: classifiers.len(),
            state: MetaState::Linear(vec![0.0; classifiers.len()]),
        },
        classifiers,
        split_index: 0,
        label_inputs,
    };
    let outputs: Vec<Vec<f64>> = meta_idx
        .iter()
        .map(|&i| {
            shell.base_outputs(&x[i]).map_err(|e| EnsembleError::Learner {
                kind: "base",
                split: 0,
                source: e,
            })
        })
        .collect::<Result<_, _>>()?;
    let labels: Vec<u8> = meta_idx.iter().map(|&i| y[i]).collect();
    let combiner = fit_meta(&outputs, &labels, kind, seed)?;
    audit.record(meta_idx);
    Ok(FirstStepModel { combiner, ..shell })
}

struct ReplicateArtifacts {
    success: ReplicateSuccess,
    pooled: BTreeMap<String, Vec<(f64, u8)>>,
}

fn replicate_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(0x51_7C_C1_B7_27_22_0A_95u64.wrapping_mul(index as u64 + 1))
}

fn run_replicate(
    d: &Dataset,
    cfg: &ExperimentConfig,
    rep_seed: u64,
) -> Result<ReplicateArtifacts, String> {
    let partition: Partition =
        make_paper_partition(d, cfg.k, rep_seed).map_err(|e| e.to_string())?;
    let pool = &partition.training_pool;
    let mut audit = AuditLog::default();

    // feature reduction, fitted strictly on the training pool
    let mut pca_models = Vec::with_capacity(3);
    for block in StrainBlock::ALL {
        let mut m = fit_pca_on(d, block, pool).map_err(|e| e.to_string())?;
        m.retained = select_pcs(&m, cfg.pc_policy);
        pca_models.push(m);
    }
    audit.record(pool);
    let (pss, ssr, tp) = (&pca_models[0], &pca_models[1], &pca_models[2]);
    let x: Vec<Vec<f64>> = d.rows.iter().map(|r| reduce_row(r, pss, ssr, tp)).collect();
    let x_glps: Vec<Vec<f64>> = d.rows.iter().map(|r| glps_only_row(r)).collect();
    let y = &d.labels;

    // tune each learner on the pool, then fit on the pool for the
    // individual baseline and the exclusion measurement
    let pool_x: Vec<Vec<f64>> = pool.iter().map(|&i| x[i].clone()).collect();
    let pool_y: Vec<u8> = pool.iter().map(|&i| y[i]).collect();
    let mut roster: TunedRoster = Vec::with_capacity(cfg.roster.len());
    let mut pool_models = Vec::with_capacity(cfg.roster.len());
    for (l, &kind) in cfg.roster.iter().enumerate() {
        let spec = LearnerSpec::with_defaults(kind, rep_seed.wrapping_add(l as u64));
        let hyper =
            learners::tune(&spec, &pool_x, &pool_y, cfg.tune_folds).map_err(|e| e.to_string())?;
        let model = learners::fit(&spec, &hyper, &pool_x, &pool_y).map_err(|e| e.to_string())?;
        roster.push((spec, hyper));
        pool_models.push(model);
    }
    audit.record(pool);

    let score_on = |model: &TrainedClassifier, idx: &[usize]| -> Result<Vec<f64>, String> {
        idx.iter()
            .map(|&i| learners::predict_score(model, &x[i]).map_err(|e| e.to_string()))
            .collect()
    };

    // exclusion rule on validation accuracy, never on test accuracy
    let mut individual_validation_accuracy = BTreeMap::new();
    let mut individual_test = BTreeMap::new();
    let mut excluded = Vec::new();
    let mut surviving = Vec::new();
    let mut val_acc_by_pos: Vec<(usize, f64)> = Vec::new();
    for (pos, (model, &kind)) in pool_models.iter().zip(&cfg.roster).enumerate() {
        let val_scores = score_on(model, &partition.validation0)?;
        let val_truth: Vec<u8> = partition.validation0.iter().map(|&i| y[i]).collect();
        let val_pred: Vec<u8> = val_scores.iter().map(|&s| (s >= 0.5) as u8).collect();
        let cm = metrics::confusion(&val_pred, &val_truth).map_err(|e| e.to_string())?;
        let val_acc = metrics::accuracy(&cm);
        individual_validation_accuracy.insert(kind.name().to_string(), val_acc);

        let test_scores = score_on(model, &partition.test)?;
        let test_truth: Vec<u8> = partition.test.iter().map(|&i| y[i]).collect();
        individual_test.insert(
            kind.name().to_string(),
            run_metrics(&test_scores, &test_truth)
                .map_err(|e| format!("{}: {e}", kind.name()))?,
        );

        if val_acc < cfg.exclusion_threshold {
            excluded.push(kind.name().to_string());
        } else {
            surviving.push(pos);
            val_acc_by_pos.push((pos, val_acc));
        }
    }
    if surviving.len() < 2 {
        return Err(format!(
            "exclusion rule left {} learners; need at least 2",
            surviving.len()
        ));
    }

    // small roster: the three best survivors by validation accuracy
    val_acc_by_pos.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let top3: Vec<usize> = val_acc_by_pos.iter().take(3).map(|&(p, _)| p).collect();

    let take = |positions: &[usize]| -> TunedRoster {
        positions.iter().map(|&p| roster[p].clone()).collect()
    };
    let take_models = |positions: &[usize]| -> Vec<TrainedClassifier> {
        positions.iter().map(|&p| pool_models[p].clone()).collect()
    };
    let full_roster = take(&surviving);
    let small_roster = take(&top3);

    let test_truth: Vec<u8> = partition.test.iter().map(|&i| y[i]).collect();
    let opts = StackOptions::default();
    let mut ensemble_metrics = BTreeMap::new();
    let mut pooled: BTreeMap<String, Vec<(f64, u8)>> = BTreeMap::new();

    for &variant in &cfg.ensembles {
        let roster_for = if variant.uses_small_roster() {
            &small_roster
        } else {
            &full_roster
        };
        let scores: Vec<f64> = match variant {
            EnsembleVariant::TwoStep14 | EnsembleVariant::TwoStep3 => {
                let model = fit_two_step(&x, y, &partition, roster_for, rep_seed, &opts, &mut audit)
                    .map_err(|e| e.to_string())?;
                partition
                    .test
                    .iter()
                    .map(|&i| model.predict(&x[i]).map(|(_, s)| s))
                    .collect::<Result<_, _>>()
                    .map_err(|e: EnsembleError| e.to_string())?
            }
            EnsembleVariant::TwoStepGlpsOnly => {
                let model = fit_two_step(
                    &x_glps,
                    y,
                    &partition,
                    &full_roster,
                    rep_seed.wrapping_add(0x61),
                    &opts,
                    &mut audit,
                )
                .map_err(|e| e.to_string())?;
                partition
                    .test
                    .iter()
                    .map(|&i| model.predict(&x_glps[i]).map(|(_, s)| s))
                    .collect::<Result<_, _>>()
                    .map_err(|e: EnsembleError| e.to_string())?
            }
            EnsembleVariant::TradStack14 | EnsembleVariant::TradStack3 => {
                let positions = if variant.uses_small_roster() {
                    &top3
                } else {
                    &surviving
                };
                let model = stack_from_fitted(
                    take_models(positions),
                    &x,
                    y,
                    &partition.validation0,
                    MetaKind::RandomForest,
                    false,
                    rep_seed.wrapping_add(0x7ad),
                    &mut audit,
                )
                .map_err(|e| e.to_string())?;
                partition
                    .test
                    .iter()
                    .map(|&i| model.predict_score(&x[i]))
                    .collect::<Result<_, _>>()
                    .map_err(|e: EnsembleError| e.to_string())?
            }
            EnsembleVariant::WeightedVote14 | EnsembleVariant::WeightedVote3 => {
                let positions = if variant.uses_small_roster() {
                    &top3
                } else {
                    &surviving
                };
                let model = stack_from_fitted(
                    take_models(positions),
                    &x,
                    y,
                    &partition.validation0,
                    MetaKind::LinearLeastSquares,
                    false,
                    rep_seed.wrapping_add(0x3f),
                    &mut audit,
                )
                .map_err(|e| e.to_string())?;
                partition
                    .test
                    .iter()
                    .map(|&i| model.predict_score(&x[i]))
                    .collect::<Result<_, _>>()
                    .map_err(|e: EnsembleError| e.to_string())?
            }
        };
        ensemble_metrics.insert(
            variant.name().to_string(),
            run_metrics(&scores, &test_truth).map_err(|e| format!("{}: {e}", variant.name()))?,
        );
        pooled.insert(
            variant.name().to_string(),
            scores.iter().copied().zip(test_truth.iter().copied()).collect(),
        );
    }

    let audit_ok = audit.disjoint_from(&partition.test);
    Ok(ReplicateArtifacts {
        success: ReplicateSuccess {
            seed: rep_seed,
            excluded,
            ensemble_metrics,
            individual_test,
            individual_validation_accuracy,
            audit_ok,
        },
        pooled,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let d = load_or_generate(&cfg.data)?;

    let seeds: Vec<u64> = (0..cfg.replicates)
        .map(|i| replicate_seed(cfg.seed, i))
        .collect();
    let results: Vec<Result<ReplicateArtifacts, String>> = seeds
        .par_iter()
        .map(|&s| run_replicate(&d, cfg, s))
        .collect();

    let mut failures = Vec::new();
    let mut successes = Vec::new();
    let mut pooled_scores: BTreeMap<String, Vec<(f64, u8)>> = BTreeMap::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(a) => {
                for (name, mut pairs) in a.pooled {
                    pooled_scores.entry(name).or_default().append(&mut pairs);
                }
                successes.push(a.success);
            }
            Err(e) => failures.push((i, e)),
        }
    }

    let total = cfg.replicates;
    let failed = failures.len();
    if (total - failed) * 10 < total * 9 {
        return Err(ExperimentError::TooManyFailures { failed, total });
    }
    let audit_violations = successes.iter().filter(|s| !s.audit_ok).count();
    if audit_violations > 0 {
        return Err(ExperimentError::LeakageDetected(audit_violations));
    }

    let mut ensembles = BTreeMap::new();
    for variant in &cfg.ensembles {
        let runs: Vec<RunMetrics> = successes
            .iter()
            .filter_map(|s| s.ensemble_metrics.get(variant.name()).copied())
            .collect();
        if !runs.is_empty() {
            ensembles.insert(variant.name().to_string(), ModelAggregate::from_runs(&runs));
        }
    }
    let mut individuals_test = BTreeMap::new();
    let mut individuals_validation_accuracy = BTreeMap::new();
    for &kind in &cfg.roster {
        let runs: Vec<RunMetrics> = successes
            .iter()
            .filter_map(|s| s.individual_test.get(kind.name()).copied())
            .collect();
        if !runs.is_empty() {
            individuals_test.insert(kind.name().to_string(), ModelAggregate::from_runs(&runs));
        }
        let vals: Vec<f64> = successes
            .iter()
            .filter_map(|s| s.individual_validation_accuracy.get(kind.name()).copied())
            .collect();
        if !vals.is_empty() {
            individuals_validation_accuracy
                .insert(kind.name().to_string(), Aggregate::from_values(vals));
        }
    }

    let report = EvaluationReport {
        config: cfg.clone(),
        replicates_requested: total,
        replicates_succeeded: total - failed,
        seed_log: seeds,
        failures,
        audit_violations,
        exclusions_per_replicate: successes.iter().map(|s| s.excluded.clone()).collect(),
        ensembles,
        individuals_test,
        individuals_validation_accuracy,
    };

    // report-level artifacts computed on the full cohort (descriptive, not
    // part of any model fit)
    let screening = screen_features(&d, 0.05).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let mut pca_models = Vec::with_capacity(3);
    let all: Vec<usize> = (0..d.n()).collect();
    for block in StrainBlock::ALL {
        let mut m =
            fit_pca_on(&d, block, &all).map_err(|e| ExperimentError::Config(e.to_string()))?;
        m.retained = select_pcs(&m, cfg.pc_policy);
        pca_models.push(m);
    }

    Ok(ExperimentOutput {
        report,
        pooled_scores,
        screening,
        pca_models,
    })
}

/// Writes report.json, tables.txt, roc_<model>.csv per configured
/// ensemble, screening.csv, and pca_loadings.csv into `dir`. All writes
/// are atomic (temp file then rename).
pub fn emit_reports(output: &ExperimentOutput, dir: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir)?;

    let json = serde_json::to_vec_pretty(&output.report)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    crate::persist::atomic_write(&dir.join("report.json"), &json)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;

    crate::persist::atomic_write(&dir.join("tables.txt"), render_tables(&output.report).as_bytes())
        .map_err(|e| ExperimentError::Config(e.to_string()))?;

    for (name, pairs) in &output.pooled_scores {
        let scores: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let truth: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        let mut csv = String::from("fpr,tpr\n");
        if let Ok(roc) = metrics::roc_and_auc(&scores, &truth) {
            for (fpr, tpr) in &roc.points {
                csv.push_str(&format!("{fpr},{tpr}\n"));
            }
        }
        crate::persist::atomic_write(&dir.join(format!("roc_{name}.csv")), csv.as_bytes())
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
    }

    let mut csv = String::from("feature,t_statistic,df,p_value,mean_case,mean_control,significant\n");
    for e in &output.screening {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.feature,
            e.result.statistic,
            e.result.degrees_of_freedom,
            e.result.p_value,
            e.result.mean_case,
            e.result.mean_control,
            e.significant
        ));
    }
    crate::persist::atomic_write(&dir.join("screening.csv"), csv.as_bytes())
        .map_err(|e| ExperimentError::Config(e.to_string()))?;

    let mut csv = String::from("block,segment,component,loading,eigenvalue\n");
    for m in &output.pca_models {
        for c in 0..m.retained {
            for (seg, row) in m.loadings.iter().enumerate() {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    m.block.name(),
                    seg + 1,
                    c + 1,
                    row[c],
                    m.eigenvalues[c]
                ));
            }
        }
    }
    crate::persist::atomic_write(&dir.join("pca_loadings.csv"), csv.as_bytes())
        .map_err(|e| ExperimentError::Config(e.to_string()))?;

    Ok(())
}

/// Aligned text tables mirroring the report content to three decimals.
pub fn render_tables(report: &EvaluationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Replicates: {} requested, {} succeeded\n\n",
        report.replicates_requested, report.replicates_succeeded
    ));

    out.push_str("Individual learners (test set)\n");
    out.push_str(&format!(
        "{:<24} {:>14} {:>14} {:>12} {:>12}\n",
        "learner", "accuracy (sd)", "auc (sd)", "sensitivity", "specificity"
    ));
    for (name, agg) in &report.individuals_test {
        out.push_str(&format!(
            "{:<24} {:>6.3} ({:.3}) {:>6.3} ({:.3}) {:>12.3} {:>12.3}\n",
            name,
            agg.accuracy.mean,
            agg.accuracy.sd,
            agg.auc.mean,
            agg.auc.sd,
            agg.sensitivity.mean,
            agg.specificity.mean
        ));
    }

    out.push_str("\nEnsembles (test set)\n");
    out.push_str(&format!(
        "{:<24} {:>14} {:>14} {:>12} {:>12}\n",
        "ensemble", "accuracy (sd)", "auc (sd)", "sensitivity", "specificity"
    ));
    for (name, agg) in &report.ensembles {
        out.push_str(&format!(
            "{:<24} {:>6.3} ({:.3}) {:>6.3} ({:.3}) {:>12.3} {:>12.3}\n",
            name,
            agg.accuracy.mean,
            agg.accuracy.sd,
            agg.auc.mean,
            agg.auc.sd,
            agg.sensitivity.mean,
            agg.specificity.mean
        ));
    }
    out
}

/// Trains one two-step model end to end (partition, PCA, tuning,
/// exclusion) and bundles everything scoring needs.
pub fn train_model(
    cfg: &ExperimentConfig,
    glps_only: bool,
) -> Result<crate::persist::SavedModel, ExperimentError> {
    cfg.validate()?;
    let d = load_or_generate(&cfg.data)?;
    let rep_seed = replicate_seed(cfg.seed, 0);
    let partition = make_paper_partition(&d, cfg.k, rep_seed)?;
    let pool = &partition.training_pool;
    let mut audit = AuditLog::default();

    let (x, pca_models, selected_features): (Vec<Vec<f64>>, Vec<PcaModel>, Vec<usize>) =
        if glps_only {
            let x: Vec<Vec<f64>> = d.rows.iter().map(|r| glps_only_row(r)).collect();
            (x, Vec::new(), glps_only_indices())
        } else {
            let mut models = Vec::with_capacity(3);
            for block in StrainBlock::ALL {
                let mut m = fit_pca_on(&d, block, pool)
                    .map_err(|e| ExperimentError::Config(e.to_string()))?;
                m.retained = select_pcs(&m, cfg.pc_policy);
                models.push(m);
            }
            let x: Vec<Vec<f64>> = d
                .rows
                .iter()
                .map(|r| reduce_row(r, &models[0], &models[1], &models[2]))
                .collect();
            let width = x[0].len();
            (x, models, (0..width).collect())
        };
    audit.record(pool);

    let pool_x: Vec<Vec<f64>> = pool.iter().map(|&i| x[i].clone()).collect();
    let pool_y: Vec<u8> = pool.iter().map(|&i| d.labels[i]).collect();
    let mut roster: TunedRoster = Vec::new();
    for (l, &kind) in cfg.roster.iter().enumerate() {
        let spec = LearnerSpec::with_defaults(kind, rep_seed.wrapping_add(l as u64));
        let hyper = learners::tune(&spec, &pool_x, &pool_y, cfg.tune_folds)
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        roster.push((spec, hyper));
    }

    let model: TwoStepModel = fit_two_step(
        &x,
        &d.labels,
        &partition,
        &roster,
        rep_seed,
        &StackOptions::default(),
        &mut audit,
    )
    .map_err(|e| ExperimentError::Config(e.to_string()))?;

    if !audit.disjoint_from(&partition.test) {
        return Err(ExperimentError::LeakageDetected(1));
    }

    Ok(crate::persist::SavedModel {
        schema: d.schema.clone(),
        selected_features,
        pca_models,
        model,
        config_echo: serde_json::to_value(cfg).map_err(|e| ExperimentError::Config(e.to_string()))?,
    })
}

/// Scores one raw 71-feature row with a saved model. Returns the label,
/// the final score, and the K first-step scores.
pub fn score_row(
    saved: &crate::persist::SavedModel,
    row: &[f64],
) -> Result<(u8, f64, Vec<f64>), ExperimentError> {
    let input: Vec<f64> = if saved.pca_models.len() == 3 {
        reduce_row(
            row,
            &saved.pca_models[0],
            &saved.pca_models[1],
            &saved.pca_models[2],
        )
    } else {
        saved.selected_features.iter().map(|&i| row[i]).collect()
    };
    let firsts: Vec<f64> = saved
        .model
        .first_steps
        .iter()
        .map(|fs| fs.predict_score(&input))
        .collect::<Result<_, _>>()
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let (label, score) = saved
        .model
        .predict(&input)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    Ok((label, score, firsts))
}
