//! Feature screening, correlation analysis and PCA reduction.

pub mod pca;
pub mod special;

pub use pca::{
    build_model_input, elbow_index, fit_pca, fit_pca_on, fix_signs, model_input_names, select_pcs,
    symmetric_eigen, PcPolicy, PcaModel,
};

use crate::dataset::{Dataset, NUM_NUMERIC};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("sample too small: need at least 2 values, found {0}")]
    SampleTooSmall(usize),
    #[error("zero variance in sample{}", .0.as_ref().map(|f| format!(" for feature `{f}`")).unwrap_or_default())]
    ZeroVariance(Option<String>),
    #[error("need at least {needed} rows, found {found}")]
    NotEnoughRows { needed: usize, found: usize },
    #[error("segment `{0}` has zero variance")]
    RankDeficient(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("both classes must be present")]
    MissingClass,
}

/// Two-sample test output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub mean_case: f64,
    pub mean_control: f64,
}

fn mean_var(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance two-sample t-test with Welch-Satterthwaite
/// degrees of freedom and a two-sided p-value.
pub fn welch_t_test(case: &[f64], control: &[f64]) -> Result<TestResult, StatsError> {
    if case.len() < 2 {
        return Err(StatsError::SampleTooSmall(case.len()));
    }
    if control.len() < 2 {
        return Err(StatsError::SampleTooSmall(control.len()));
    }
    let (m1, v1) = mean_var(case);
    let (m2, v2) = mean_var(control);
    if v1 <= 0.0 || v2 <= 0.0 {
        return Err(StatsError::ZeroVariance(None));
    }
    let n1 = case.len() as f64;
    let n2 = control.len() as f64;
    let se2 = v1 / n1 + v2 / n2;
    let statistic = (m1 - m2) / se2.sqrt();
    let df = se2 * se2
        / ((v1 / n1) * (v1 / n1) / (n1 - 1.0) + (v2 / n2) * (v2 / n2) / (n2 - 1.0));
    let p_value = special::t_two_sided_p(statistic, df);
    Ok(TestResult {
        statistic,
        degrees_of_freedom: df,
        p_value,
        mean_case: m1,
        mean_control: m2,
    })
}

/// Pooled-variance (Student) two-sample t-test, kept for comparison.
pub fn pooled_t_test(case: &[f64], control: &[f64]) -> Result<TestResult, StatsError> {
    if case.len() < 2 {
        return Err(StatsError::SampleTooSmall(case.len()));
    }
    if control.len() < 2 {
        return Err(StatsError::SampleTooSmall(control.len()));
    }
    let (m1, v1) = mean_var(case);
    let (m2, v2) = mean_var(control);
    if v1 <= 0.0 || v2 <= 0.0 {
        return Err(StatsError::ZeroVariance(None));
    }
    let n1 = case.len() as f64;
    let n2 = control.len() as f64;
    let df = n1 + n2 - 2.0;
    let sp2 = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / df;
    let statistic = (m1 - m2) / (sp2 * (1.0 / n1 + 1.0 / n2)).sqrt();
    let p_value = special::t_two_sided_p(statistic, df);
    Ok(TestResult {
        statistic,
        degrees_of_freedom: df,
        p_value,
        mean_case: m1,
        mean_control: m2,
    })
}

/// One screening row: feature, its test, and whether p <= alpha.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScreeningEntry {
    pub feature: String,
    pub result: TestResult,
    pub significant: bool,
}

/// Per-numeric-feature Welch tests against the binary label, in schema
/// order. Boundary is inclusive: p == alpha counts as significant.
pub fn screen_features(d: &Dataset, alpha: f64) -> Result<Vec<ScreeningEntry>, StatsError> {
    if d.positive_count() == 0 || d.positive_count() == d.n() {
        return Err(StatsError::MissingClass);
    }
    let mut out = Vec::with_capacity(NUM_NUMERIC);
    for j in 0..NUM_NUMERIC {
        let (case, control) = d.column_by_class(j);
        let result = welch_t_test(&case, &control).map_err(|e| match e {
            StatsError::ZeroVariance(_) => {
                StatsError::ZeroVariance(Some(d.schema.numeric[j].clone()))
            }
            other => other,
        })?;
        let significant = result.p_value <= alpha;
        out.push(ScreeningEntry {
            feature: d.schema.numeric[j].clone(),
            result,
            significant,
        });
    }
    Ok(out)
}

/// Pearson correlation matrix of the named numeric features.
pub fn correlation_matrix(d: &Dataset, features: &[String]) -> Result<Vec<Vec<f64>>, StatsError> {
    if d.n() < 2 {
        return Err(StatsError::NotEnoughRows {
            needed: 2,
            found: d.n(),
        });
    }
    let names = d.schema.all_names();
    let idx: Vec<usize> = features
        .iter()
        .map(|f| {
            names
                .iter()
                .position(|n| n == f)
                .ok_or_else(|| StatsError::SchemaMismatch(format!("unknown feature `{f}`")))
        })
        .collect::<Result<_, _>>()?;

    let n = d.n() as f64;
    let cols: Vec<Vec<f64>> = idx.iter().map(|&i| d.column(i)).collect();
    let stats: Vec<(f64, f64)> = cols
        .iter()
        .enumerate()
        .map(|(c, col)| {
            let (mean, var) = mean_var(col);
            if var <= 0.0 {
                Err(StatsError::ZeroVariance(Some(features[c].clone())))
            } else {
                Ok((mean, var.sqrt()))
            }
        })
        .collect::<Result<_, _>>()?;

    let p = idx.len();
    let mut out = vec![vec![0.0; p]; p];
    for a in 0..p {
        out[a][a] = 1.0;
        for b in (a + 1)..p {
            let mut acc = 0.0;
            for r in 0..d.n() {
                acc += (cols[a][r] - stats[a].0) * (cols[b][r] - stats[b].0);
            }
            let r = (acc / (n - 1.0)) / (stats[a].1 * stats[b].1);
            let r = r.clamp(-1.0, 1.0);
            out[a][b] = r;
            out[b][a] = r;
        }
    }
    Ok(out)
}
