//! Correlation-matrix PCA on the 17-segment strain blocks.

use crate::dataset::{Dataset, StrainBlock, SEGMENTS};
use crate::stats::StatsError;
use serde::{Deserialize, Serialize};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvectors-as-columns), descending eigenvalue
/// order. Vectors are orthonormal to machine precision.
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

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
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let eigenvectors: Vec<Vec<f64>> = (0..n)
        .map(|row| order.iter().map(|&col| v[row][col]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcPolicy {
    /// The fixed 3/3/2 retention for PSS/SSR/TP.
    PaperFixed,
    /// First curvature peak of the eigenvalue sequence (max second
    /// difference), minimum 1.
    Elbow,
}

/// A fitted per-block PCA reduction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub block: StrainBlock,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    /// Columns are principal components in descending eigenvalue order.
    pub loadings: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub retained: usize,
}

impl PcaModel {
    /// Standardized PC scores of one 17-segment row, `retained` leading
    /// components.
    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.project_k(row, self.retained)
    }

    /// Scores for the first `k` components.
    pub fn project_k(&self, row: &[f64], k: usize) -> Vec<f64> {
        let n = self.center.len();
        assert_eq!(row.len(), n, "row length must match block dimension");
        let std_row: Vec<f64> = (0..n)
            .map(|i| (row[i] - self.center[i]) / self.scale[i])
            .collect();
        (0..k)
            .map(|c| (0..n).map(|i| self.loadings[i][c] * std_row[i]).sum())
            .collect()
    }
}

/// Fits PCA on the correlation matrix of one strain block: each segment is
/// centered and unit-scaled, then the correlation matrix is
/// eigendecomposed. Column signs are fixed so the largest-magnitude loading
/// of each PC is positive.
pub fn fit_pca(d: &Dataset, block: StrainBlock) -> Result<PcaModel, StatsError> {
    fit_pca_on(d, block, &(0..d.n()).collect::<Vec<_>>())
}

/// Same as [`fit_pca`] but restricted to the given subject indices.
pub fn fit_pca_on(d: &Dataset, block: StrainBlock, rows: &[usize]) -> Result<PcaModel, StatsError> {
    let n = rows.len();
    if n <= SEGMENTS {
        return Err(StatsError::NotEnoughRows {
            needed: SEGMENTS + 1,
            found: n,
        });
    }
    let start = block.start();
    let mut center = vec![0.0; SEGMENTS];
    let mut scale = vec![0.0; SEGMENTS];
    for j in 0..SEGMENTS {
        let mean = rows.iter().map(|&r| d.rows[r][start + j]).sum::<f64>() / n as f64;
        let var = rows
            .iter()
            .map(|&r| {
                let x = d.rows[r][start + j] - mean;
                x * x
            })
            .sum::<f64>()
            / (n as f64 - 1.0);
        if var <= 0.0 {
            return Err(StatsError::RankDeficient(
                d.schema.numeric[start + j].clone(),
            ));
        }
        center[j] = mean;
        scale[j] = var.sqrt();
    }

    let mut corr = vec![vec![0.0; SEGMENTS]; SEGMENTS];
    for i in 0..SEGMENTS {
        for j in i..SEGMENTS {
            let mut acc = 0.0;
            for &r in rows {
                let xi = (d.rows[r][start + i] - center[i]) / scale[i];
                let xj = (d.rows[r][start + j] - center[j]) / scale[j];
                acc += xi * xj;
            }
            let c = acc / (n as f64 - 1.0);
            corr[i][j] = c;
            corr[j][i] = c;
        }
    }

    let (eigenvalues, mut loadings) = symmetric_eigen(&corr);
    fix_signs(&mut loadings);

    let mut model = PcaModel {
        block,
        center,
        scale,
        loadings,
        eigenvalues,
        retained: SEGMENTS,
    };
    model.retained = select_pcs(&model, PcPolicy::PaperFixed);
    Ok(model)
}

/// Flips column signs so the largest-|loading| entry of each column is
/// positive. Makes reports deterministic.
pub fn fix_signs(loadings: &mut [Vec<f64>]) {
    let n = loadings.len();
    if n == 0 {
        return;
    }
    let cols = loadings[0].len();
    for c in 0..cols {
        let mut best = 0usize;
        for r in 1..n {
            if loadings[r][c].abs() > loadings[best][c].abs() {
                best = r;
            }
        }
        if loadings[best][c] < 0.0 {
            for row in loadings.iter_mut() {
                row[c] = -row[c];
            }
        }
    }
}

/// Retained-PC count under the given policy.
pub fn select_pcs(model: &PcaModel, policy: PcPolicy) -> usize {
    match policy {
        PcPolicy::PaperFixed => match model.block {
            StrainBlock::Pss | StrainBlock::Ssr => 3,
            StrainBlock::Tp => 2,
        },
        PcPolicy::Elbow => elbow_index(&model.eigenvalues),
    }
}

/// First curvature peak: the 0-based index maximizing the second difference
/// e[i-1] - 2 e[i] + e[i+1], taken as the retained count, minimum 1.
pub fn elbow_index(eigenvalues: &[f64]) -> usize {
    let n = eigenvalues.len();
    if n < 3 {
        return 1;
    }
    let mut best_i = 1usize;
    let mut best = f64::NEG_INFINITY;
    for i in 1..(n - 1) {
        let d2 = eigenvalues[i - 1] - 2.0 * eigenvalues[i] + eigenvalues[i + 1];
        if d2 > best {
            best = d2;
            best_i = i;
        }
    }
    best_i.max(1)
}

/// Replaces the three 17-segment blocks by their retained PC scores and
/// keeps the remaining columns: PSS scores, SSR scores, TP scores,
/// GS-radial (9), GLPS (3), PSD (1), clinical (7), in that order.
pub fn build_model_input(
    d: &Dataset,
    pss: &PcaModel,
    ssr: &PcaModel,
    tp: &PcaModel,
) -> Result<Vec<Vec<f64>>, StatsError> {
    for (m, b) in [(pss, StrainBlock::Pss), (ssr, StrainBlock::Ssr), (tp, StrainBlock::Tp)] {
        if m.block != b {
            return Err(StatsError::SchemaMismatch(format!(
                "expected a {} model, got {}",
                b.name(),
                m.block.name()
            )));
        }
    }
    let mut out = Vec::with_capacity(d.n());
    for row in &d.rows {
        let mut v = Vec::with_capacity(
            pss.retained + ssr.retained + tp.retained + 9 + 3 + 1 + 7,
        );
        v.extend(pss.project(&row[StrainBlock::Pss.start()..StrainBlock::Pss.start() + SEGMENTS]));
        v.extend(ssr.project(&row[StrainBlock::Ssr.start()..StrainBlock::Ssr.start() + SEGMENTS]));
        v.extend(tp.project(&row[StrainBlock::Tp.start()..StrainBlock::Tp.start() + SEGMENTS]));
        v.extend_from_slice(&row[crate::dataset::GS_START..]);
        out.push(v);
    }
    Ok(out)
}

/// Column names of the reduced feature table, matching
/// [`build_model_input`] ordering.
pub fn model_input_names(pss: &PcaModel, ssr: &PcaModel, tp: &PcaModel, d: &Dataset) -> Vec<String> {
    let mut names = Vec::new();
    for (m, prefix) in [(pss, "pss_pc"), (ssr, "ssr_pc"), (tp, "tp_pc")] {
        for i in 1..=m.retained {
            names.push(format!("{prefix}{i}"));
        }
    }
    names.extend(
        d.schema.all_names()[crate::dataset::GS_START..]
            .iter()
            .cloned(),
    );
    names
}
