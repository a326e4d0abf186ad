//! Acceptance suite: every release-gating property of the toolkit in one
//! integration target. Each criterion is a separate test; the replicated
//! default experiment is shared by the tests that read it.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strainstack::dataset::{
    make_paper_partition, Dataset, FeatureSchema, CLINICAL_START, GLPS_START, GS_START,
    NUM_FEATURES,
};
use strainstack::ensemble::{
    fit_first_step, fit_two_step, majority_vote, weighted_vote, AuditLog, MetaKind, StackOptions,
};
use strainstack::experiment::{
    run_experiment, train_model, ExperimentConfig, ExperimentOutput,
};
use strainstack::ensemble::TunedRoster;
use strainstack::learners::{self, LearnerSpec};
use strainstack::metrics::roc_and_auc;
use strainstack::persist::{load_model, save_model};
use strainstack::stats::pca::symmetric_eigen;
use strainstack::stats::welch_t_test;
use strainstack::synthgen::{default_calibration, generate_cohort};

// ---------------------------------------------------------------------------
// local oracles (independent reimplementations used only for cross-checks)
// ---------------------------------------------------------------------------

/// Two-sided t-distribution p-value by Simpson quadrature under the
/// substitution u = tan(theta); independent of the incomplete-beta path
/// used by the library.
fn t_p_quadrature(t: f64, df: f64) -> f64 {
    let g = |u: f64| (1.0 + u * u / df).powf(-(df + 1.0) / 2.0);
    let integrate = |a: f64, b: f64| {
        let n = 40_000usize;
        let h = (b - a) / n as f64;
        let f = |th: f64| {
            let c: f64 = th.cos();
            g(th.tan()) / (c * c)
        };
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + h * i as f64;
            s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
        }
        s * h / 3.0
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let eps = 1e-9;
    let total = integrate(-half_pi + eps, half_pi - eps);
    let tail = integrate(t.abs().atan(), half_pi - eps);
    (2.0 * tail / total).min(1.0)
}

/// Brute-force symmetric eigensolver: classical Jacobi rotations swept to
/// convergence, eigenpairs sorted by descending eigenvalue.
fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..200 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
                let (s, c) = theta.sin_cos();
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|r| order.iter().map(|&c| v[r][c]).collect())
        .collect();
    (values, vectors)
}

/// O(n^2) concordance AUC: ties between a positive and a negative score
/// count one half.
fn concordance_auc(scores: &[f64], truth: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if truth[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if truth[j] != 0 {
                continue;
            }
            den += 1.0;
            if si > sj {
                num += 1.0;
            } else if si == sj {
                num += 0.5;
            }
        }
    }
    num / den
}

// ---------------------------------------------------------------------------
// shared fixtures
// ---------------------------------------------------------------------------

fn default_run() -> &'static ExperimentOutput {
    static RUN: OnceLock<ExperimentOutput> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = ExperimentConfig::default_synthetic();
        run_experiment(&cfg).expect("default replicated experiment must succeed")
    })
}

fn synthetic_dataset(seed: u64) -> Dataset {
    let mut gen = default_calibration();
    gen.seed = seed;
    generate_cohort(&gen).expect("default calibration must generate")
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

// ---------------------------------------------------------------------------
// 1. voting oracle equivalence
// ---------------------------------------------------------------------------

#[test]
fn voting_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for l in 1..=5usize {
        let weight_sets: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..l).map(|_| rng.gen_range(-1.0..2.0)).collect())
            .collect();
        for pattern in 0..(1u32 << l) {
            let labels: Vec<u8> = (0..l).map(|i| ((pattern >> i) & 1) as u8).collect();
            let expected_majority =
                (labels.iter().map(|&c| c as f64).sum::<f64>() / l as f64 >= 0.5) as u8;
            assert_eq!(majority_vote(&labels).unwrap(), expected_majority);
            for w in &weight_sets {
                let expected = (labels
                    .iter()
                    .zip(w)
                    .map(|(&c, &wi)| wi * c as f64)
                    .sum::<f64>()
                    >= 0.5) as u8;
                assert_eq!(weighted_vote(&labels, w).unwrap(), expected);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 2. statistics oracles
// ---------------------------------------------------------------------------

#[test]
fn welch_p_values_match_quadrature_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..50 {
        let n1 = rng.gen_range(3..12);
        let n2 = rng.gen_range(3..12);
        let case: Vec<f64> = (0..n1).map(|_| rng.gen::<f64>() * 5.0).collect();
        let control: Vec<f64> = (0..n2).map(|_| rng.gen::<f64>() * 5.0 + 0.5).collect();
        let r = welch_t_test(&case, &control).unwrap();
        let oracle = t_p_quadrature(r.statistic, r.degrees_of_freedom);
        assert!(
            (r.p_value - oracle).abs() < 1e-6,
            "p {} vs oracle {}",
            r.p_value,
            oracle
        );
    }
}

#[test]
fn pca_eigendecomposition_matches_jacobi_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..20 {
        // random 5x5 correlation matrix from 30 random observations
        let data: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..5).map(|_| rng.gen::<f64>() * 3.0).collect())
            .collect();
        let mut corr = vec![vec![0.0; 5]; 5];
        let means: Vec<f64> = (0..5).map(|j| mean(data.iter().map(|r| r[j]))).collect();
        let sds: Vec<f64> = (0..5)
            .map(|j| {
                (data.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / 29.0).sqrt()
            })
            .collect();
        for a in 0..5 {
            for b in 0..5 {
                corr[a][b] = data
                    .iter()
                    .map(|r| (r[a] - means[a]) * (r[b] - means[b]))
                    .sum::<f64>()
                    / 29.0
                    / (sds[a] * sds[b]);
            }
        }
        let (vals, vecs) = symmetric_eigen(&corr);
        let (ovals, ovecs) = jacobi_eigen(&corr);
        for c in 0..5 {
            assert!(
                (vals[c] - ovals[c]).abs() < 1e-8,
                "eigenvalue {c}: {} vs {}",
                vals[c],
                ovals[c]
            );
            // compare eigenvectors up to sign
            let dot: f64 = (0..5).map(|r| vecs[r][c] * ovecs[r][c]).sum();
            let sign = if dot < 0.0 { -1.0 } else { 1.0 };
            for r in 0..5 {
                assert!(
                    (vecs[r][c] - sign * ovecs[r][c]).abs() < 1e-8,
                    "loading [{r}][{c}]"
                );
            }
        }
    }
}

#[test]
fn auc_matches_concordance_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for round in 0..50 {
        let n = rng.gen_range(5..=50);
        let mut scores: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        if round % 2 == 0 {
            // coarse grid forces score ties
            scores = scores.iter().map(|s| (s * 8.0).round() / 8.0).collect();
        }
        let mut truth: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
        truth[0] = 1;
        truth[1] = 0; // both classes present
        let roc = roc_and_auc(&scores, &truth).unwrap();
        let oracle = concordance_auc(&scores, &truth);
        assert!(
            (roc.auc - oracle).abs() < 1e-12,
            "auc {} vs oracle {}",
            roc.auc,
            oracle
        );
    }
}

// ---------------------------------------------------------------------------
// 3. structural reductions
// ---------------------------------------------------------------------------

#[test]
fn uniform_weights_reduce_to_majority() {
    for l in 1..=5usize {
        let w = vec![1.0 / l as f64; l];
        for pattern in 0..(1u32 << l) {
            let labels: Vec<u8> = (0..l).map(|i| ((pattern >> i) & 1) as u8).collect();
            assert_eq!(
                weighted_vote(&labels, &w).unwrap(),
                majority_vote(&labels).unwrap()
            );
        }
    }
}

#[test]
fn two_step_with_k1_reduces_to_its_first_step() {
    let d = synthetic_dataset(902);
    let partition = make_paper_partition(&d, 1, 77).unwrap();
    let probe = synthetic_dataset(903);

    // plain feature columns; no reduction needed for a structural identity
    let x: Vec<Vec<f64>> = d.rows.clone();
    let roster: TunedRoster = [
        learners::LearnerKind::PenalizedLogistic,
        learners::LearnerKind::Lda,
        learners::LearnerKind::GaussianNaiveBayes,
    ]
    .iter()
    .map(|&kind| {
        let spec = LearnerSpec::with_defaults(kind, 5);
        let hyper = learners::tune(&spec, &x, &d.labels, 2).unwrap();
        (spec, hyper)
    })
    .collect();

    // a K=1 two-step with a linear, label-input second combiner must act
    // as a pass-through around its single first-step bundle
    let opts = StackOptions {
        second_meta_kind: MetaKind::LinearLeastSquares,
        second_label_inputs: true,
        ..StackOptions::default()
    };
    let mut audit = AuditLog::default();
    let two_step = fit_two_step(&x, &d.labels, &partition, &roster, 99, &opts, &mut audit).unwrap();
    assert_eq!(two_step.k(), 1);

    // the traditional stack is the same bundle fit over the same subsets
    let (train_1, val_1) = &partition.first_step_splits[0];
    let mut audit2 = AuditLog::default();
    let single = fit_first_step(
        &x,
        &d.labels,
        train_1,
        val_1,
        &roster,
        0,
        99,
        &StackOptions::default(),
        &mut audit2,
    )
    .unwrap();
    let single_json = serde_json::to_string(&single.classifiers).unwrap();
    let bundle_json = serde_json::to_string(&two_step.first_steps[0].classifiers).unwrap();
    assert_eq!(single_json, bundle_json, "identical subsets and seeds must give identical bundles");

    for row in probe.rows.iter().take(100) {
        let (label, _) = two_step.predict(row).unwrap();
        assert_eq!(
            label,
            two_step.first_steps[0].predict_label(row).unwrap(),
            "K=1 with a linear second combiner must reproduce the single bundle's labels"
        );
    }
}

// ---------------------------------------------------------------------------
// 4.-7. the replicated default experiment
// ---------------------------------------------------------------------------

#[test]
fn leakage_audit_is_clean_over_default_run() {
    let out = default_run();
    assert_eq!(out.report.audit_violations, 0);
    assert!(out.report.failures.is_empty(), "{:?}", out.report.failures);
    assert_eq!(out.report.replicates_succeeded, 50);
}

#[test]
fn ensemble_ordering_holds_on_default_run() {
    let report = &default_run().report;
    let acc = |name: &str| report.ensembles[name].accuracy.mean;
    let auc = |name: &str| report.ensembles[name].auc.mean;
    let mean_ind_acc = mean(report.individuals_test.values().map(|m| m.accuracy.mean));
    let mean_ind_auc = mean(report.individuals_test.values().map(|m| m.auc.mean));

    // accuracy: two-step > traditional by >= 2 points, then strict ordering
    assert!(
        acc("two_step_14") - acc("trad_stack_14") >= 0.02,
        "two-step {:.4} vs traditional {:.4}",
        acc("two_step_14"),
        acc("trad_stack_14")
    );
    assert!(acc("trad_stack_14") > acc("weighted_vote_14"));
    assert!(acc("weighted_vote_14") > mean_ind_acc);

    // the same strict ordering for AUC
    assert!(auc("two_step_14") > auc("trad_stack_14"));
    assert!(auc("trad_stack_14") > auc("weighted_vote_14"));
    assert!(auc("weighted_vote_14") > mean_ind_auc);
}

#[test]
fn fourteen_model_variants_beat_three_model_variants() {
    let report = &default_run().report;
    let acc = |name: &str| report.ensembles[name].accuracy.mean;
    assert!(
        acc("two_step_14") - acc("two_step_3") >= 0.01,
        "two-step: {:.4} vs {:.4}",
        acc("two_step_14"),
        acc("two_step_3")
    );
    assert!(
        acc("trad_stack_14") - acc("trad_stack_3") >= 0.01,
        "traditional: {:.4} vs {:.4}",
        acc("trad_stack_14"),
        acc("trad_stack_3")
    );
}

#[test]
fn glps_only_ablation_trails_by_ten_points() {
    let report = &default_run().report;
    let acc = |name: &str| report.ensembles[name].accuracy.mean;
    assert!(
        acc("two_step_14") - acc("two_step_glps_only") >= 0.10,
        "full {:.4} vs glps-only {:.4}",
        acc("two_step_14"),
        acc("two_step_glps_only")
    );
}

// ---------------------------------------------------------------------------
// 8. generator calibration
// ---------------------------------------------------------------------------

#[test]
fn calibration_reproduces_significance_pattern_and_smoke_rates() {
    let mut pattern_hits = 0;
    let mut smoke_hits = 0;
    for seed in 0..100u64 {
        let d = synthetic_dataset(seed);
        let sig = |idx: usize| {
            let (case, control) = d.column_by_class(idx);
            welch_t_test(&case, &control).unwrap().p_value
        };
        // GLPS-Epi is the per-layer significance probe; the radial check uses
        // the apical section's across-layer mean, matching the section-level
        // headline statistic rather than each layer separately.
        let glps_significant = sig(GLPS_START + 2) <= 0.05;
        let ap_mean: Vec<f64> = d
            .rows
            .iter()
            .map(|r| (GS_START + 6..GS_START + 9).map(|i| r[i]).sum::<f64>() / 3.0)
            .collect();
        let (ap_case, ap_control): (Vec<f64>, Vec<f64>) = {
            let mut c = Vec::new();
            let mut k = Vec::new();
            for (v, &y) in ap_mean.iter().zip(&d.labels) {
                if y == 1 { c.push(*v) } else { k.push(*v) }
            }
            (c, k)
        };
        let radial_nonsignificant = welch_t_test(&ap_case, &ap_control).unwrap().p_value > 0.05;
        if glps_significant && radial_nonsignificant {
            pattern_hits += 1;
        }
        let (case_smoke, control_smoke) = d.column_by_class(CLINICAL_START + 5);
        let case_rate = mean(case_smoke);
        let control_rate = mean(control_smoke);
        if (case_rate - 0.525).abs() <= 0.05 && (control_rate - 0.28).abs() <= 0.05 {
            smoke_hits += 1;
        }
    }
    assert!(pattern_hits >= 90, "significance pattern in {pattern_hits}/100 seeds");
    assert!(smoke_hits >= 90, "smoke rates in range in {smoke_hits}/100 seeds");
}

// ---------------------------------------------------------------------------
// 9. determinism and persistence
// ---------------------------------------------------------------------------

#[test]
fn identical_config_and_seed_give_byte_identical_reports() {
    let mut cfg = ExperimentConfig::default_synthetic();
    cfg.replicates = 2;
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    let ja = serde_json::to_vec_pretty(&a.report).unwrap();
    let jb = serde_json::to_vec_pretty(&b.report).unwrap();
    assert_eq!(ja, jb, "same config and seed must give byte-identical reports");
}

#[test]
fn saved_model_round_trip_preserves_predictions() {
    let cfg = ExperimentConfig::default_synthetic();
    let saved = train_model(&cfg, false).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&saved, &path).unwrap();
    let loaded = load_model(&path).unwrap();

    let probe = synthetic_dataset(904);
    for row in probe.rows.iter().take(100) {
        let a = strainstack::experiment::score_row(&saved, row).unwrap();
        let b = strainstack::experiment::score_row(&loaded, row).unwrap();
        assert_eq!(a, b);
    }
}

// ---------------------------------------------------------------------------
// 10. partition exactness
// ---------------------------------------------------------------------------

#[test]
fn partition_sizes_and_stratification_hold_for_100_seeds() {
    let schema = FeatureSchema::standard();
    let n = 424;
    let positives = 217;
    let d = Dataset {
        schema,
        rows: (0..n)
            .map(|i| (0..NUM_FEATURES).map(|j| ((i * 31 + j) % 17) as f64).collect())
            .collect(),
        labels: (0..n).map(|i| (i < positives) as u8).collect(),
        subject_ids: (0..n).map(|i| format!("S{i:04}")).collect(),
    };
    let share = positives as f64 / n as f64;
    let check_stratified = |part: &[usize]| {
        let pos = part.iter().filter(|&&i| d.labels[i] == 1).count() as f64;
        assert!(
            (pos - part.len() as f64 * share).abs() <= 1.0,
            "{} positives in a part of {}",
            pos,
            part.len()
        );
    };
    for seed in 0..100u64 {
        let p = make_paper_partition(&d, 10, seed).unwrap();
        assert_eq!(p.test.len(), 64);
        assert_eq!(p.validation0.len(), 72);
        assert_eq!(p.training_pool.len(), 288);
        assert_eq!(p.first_step_splits.len(), 10);
        check_stratified(&p.test);
        check_stratified(&p.validation0);
        check_stratified(&p.training_pool);
        for (train_k, val_k) in &p.first_step_splits {
            assert_eq!(train_k.len(), 230);
            assert_eq!(val_k.len(), 58);
            check_stratified(train_k);
            check_stratified(val_k);
        }
    }
}
