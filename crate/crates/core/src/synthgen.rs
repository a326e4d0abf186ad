//! Seeded synthetic cohort generator.
//!
//! Strain features are drawn from class-conditional multivariate Gaussians
//! with block-structured correlation (per-segment blocks correlate within
//! and across wall levels, with the apex/apical pairing strongest).
//! Clinical binaries are per-class Bernoulli draws and age is a rounded
//! per-class Gaussian. The default calibration targets the published
//! cohort's marginals: longitudinal strain features separate the classes,
//! radial ones do not, and the clinical rate gaps match the reported
//! case/control percentages.

use crate::dataset::{
    Dataset, FeatureSchema, SegmentLevel, StrainBlock, CLINICAL_START, GLPS_START, GS_START,
    NUM_FEATURES, NUM_NUMERIC, PSD_INDEX, SEGMENTS,
};
use crate::stats::pca::symmetric_eigen;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("correlation target for block {0} is not repairable to positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// Correlation targets for one 17-segment block.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BlockCorrelations {
    /// Segments at the same wall level.
    pub within_level: f64,
    /// The apex segment against apical-level segments.
    pub apex_apical: f64,
    /// Segments at adjacent wall levels.
    pub adjacent: f64,
    /// Segments at non-adjacent wall levels.
    pub distant: f64,
}

/// Per-class Bernoulli rates, `[case, control]`.
pub type Rates = [f64; 2];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClinicalRates {
    pub gender: Rates,
    pub hypertension: Rates,
    pub diabetes: Rates,
    pub hyperlipemia: Rates,
    pub smoke: Rates,
    pub family_history: Rates,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AgeMoments {
    pub case_mean: f64,
    pub case_sd: f64,
    pub control_mean: f64,
    pub control_sd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n: usize,
    pub positive_count: usize,
    pub pss_correlations: BlockCorrelations,
    pub ssr_correlations: BlockCorrelations,
    pub tp_correlations: BlockCorrelations,
    /// Standardized between-class mean shifts, one per numeric feature in
    /// schema order.
    pub effect_sizes: Vec<f64>,
    /// Global multiplier applied to the strain effect sizes.
    pub signal: f64,
    /// Multiplier on the strain-segment noise scale inside a case's
    /// affected territory. Values above 1 make the lesion region more
    /// variable, so the case class is wider there and the boundary is no
    /// longer a single hyperplane; segments outside the territory and the
    /// global features keep control-level noise.
    #[serde(default = "default_dispersion")]
    pub case_dispersion: f64,
    /// Fraction of subjects whose features are drawn from the opposite
    /// class's distribution, i.e. effective label noise. Keeps the cohort
    /// from being linearly separable and makes single fits unstable.
    #[serde(default)]
    pub label_noise: f64,
    /// Extra standardized strain/strain-rate shift concentrated on one
    /// coronary territory per case. Each case is assigned one of the three
    /// perfusion territories at random and only that territory's segments
    /// receive the extra deficit, so the per-segment marginal effect is
    /// diluted while the within-subject pattern stays strong.
    #[serde(default)]
    pub territory_effect: f64,
    /// Spread of the per-case severity multiplier applied to every
    /// case-side mean shift. Each case draws severity ~ max(0, 1 + sd*z),
    /// so mild near-boundary cases and florid ones coexist while the
    /// average effect size is preserved.
    #[serde(default)]
    pub severity_sd: f64,
    /// Fraction of subjects with degraded acquisitions: every numeric
    /// feature's noise term is inflated by `artifact_scale`, independent of
    /// the class label. Mimics poor acoustic windows in retrospective data.
    #[serde(default)]
    pub artifact_rate: f64,
    /// Noise multiplier for artifact subjects; ignored when
    /// `artifact_rate` is zero.
    #[serde(default = "default_dispersion")]
    pub artifact_scale: f64,
    pub clinical_rates: ClinicalRates,
    pub age_moments: AgeMoments,
    pub seed: u64,
}

fn default_dispersion() -> f64 {
    1.0
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.n < 2 || self.positive_count == 0 || self.positive_count >= self.n {
            return Err(GenError::InvalidConfig(format!(
                "need 0 < positive_count < n, got {}/{}",
                self.positive_count, self.n
            )));
        }
        if self.effect_sizes.len() != NUM_NUMERIC {
            return Err(GenError::InvalidConfig(format!(
                "effect_sizes must have {} entries, got {}",
                NUM_NUMERIC,
                self.effect_sizes.len()
            )));
        }
        if self.effect_sizes.iter().any(|e| !e.is_finite()) || !self.signal.is_finite() {
            return Err(GenError::InvalidConfig("non-finite effect size".into()));
        }
        if !(0.0..=1.0).contains(&self.artifact_rate)
            || !self.artifact_scale.is_finite()
            || self.artifact_scale <= 0.0
        {
            return Err(GenError::InvalidConfig(format!(
                "artifact_rate must be in [0,1] and artifact_scale positive, got {}/{}",
                self.artifact_rate, self.artifact_scale
            )));
        }
        if !self.severity_sd.is_finite() || self.severity_sd < 0.0 {
            return Err(GenError::InvalidConfig(format!(
                "severity_sd must be nonnegative and finite, got {}",
                self.severity_sd
            )));
        }
        if !self.territory_effect.is_finite() || self.territory_effect < 0.0 {
            return Err(GenError::InvalidConfig(format!(
                "territory_effect must be nonnegative and finite, got {}",
                self.territory_effect
            )));
        }
        if !(0.0..0.5).contains(&self.label_noise) {
            return Err(GenError::InvalidConfig(format!(
                "label_noise must be in [0, 0.5), got {}",
                self.label_noise
            )));
        }
        if !self.case_dispersion.is_finite() || self.case_dispersion <= 0.0 {
            return Err(GenError::InvalidConfig(format!(
                "case_dispersion must be positive and finite, got {}",
                self.case_dispersion
            )));
        }
        for rates in [
            self.clinical_rates.gender,
            self.clinical_rates.hypertension,
            self.clinical_rates.diabetes,
            self.clinical_rates.hyperlipemia,
            self.clinical_rates.smoke,
            self.clinical_rates.family_history,
        ] {
            if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(GenError::InvalidConfig("rate outside [0,1]".into()));
            }
        }
        for c in [
            &self.pss_correlations,
            &self.ssr_correlations,
            &self.tp_correlations,
        ] {
            for v in [c.within_level, c.apex_apical, c.adjacent, c.distant] {
                if !(-0.99..=0.99).contains(&v) {
                    return Err(GenError::InvalidConfig(format!(
                        "correlation target {v} outside (-0.99, 0.99)"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Marginal location/spread per numeric feature so generated values sit in
/// physiologically plausible ranges (longitudinal strain is negative,
/// time-to-peak is in milliseconds, and so on).
fn feature_scale(index: usize) -> (f64, f64) {
    match index {
        i if i < GS_START => match StrainBlock::ALL
            .iter()
            .find(|b| i >= b.start() && i < b.start() + SEGMENTS)
            .unwrap()
        {
            StrainBlock::Pss => (-18.0, 4.0),
            StrainBlock::Ssr => (-1.1, 0.3),
            StrainBlock::Tp => (380.0, 45.0),
        },
        i if i < GLPS_START => (35.0, 10.0), // radial strain, positive
        i if i < PSD_INDEX => (-19.0, 3.5),  // global longitudinal strain
        _ => (42.0, 13.0),                   // peak strain dispersion
    }
}

fn level_of(segment_ix: usize) -> SegmentLevel {
    // segment_level takes 1-based AHA segment numbers
    crate::dataset::segment_level(segment_ix + 1)
}

fn target_correlation(c: &BlockCorrelations, i: usize, j: usize) -> f64 {
    let (li, lj) = (level_of(i), level_of(j));
    if li == lj {
        return c.within_level;
    }
    use SegmentLevel::*;
    let pair = if (li as u8) < (lj as u8) { (li, lj) } else { (lj, li) };
    match pair {
        (Apical, Apex) => c.apex_apical,
        (Basal, MidCavity) | (MidCavity, Apical) => c.adjacent,
        _ => c.distant,
    }
}

/// Builds the 17x17 block correlation matrix and repairs it to positive
/// definite by clipping eigenvalues at 1e-6. Errors if the repair would
/// move the matrix too far from the target.
fn block_covariance(
    c: &BlockCorrelations,
    name: &'static str,
) -> Result<Vec<Vec<f64>>, GenError> {
    let mut m = vec![vec![0.0; SEGMENTS]; SEGMENTS];
    for i in 0..SEGMENTS {
        for j in 0..SEGMENTS {
            m[i][j] = if i == j {
                1.0
            } else {
                target_correlation(c, i, j)
            };
        }
    }
    let (eigenvalues, _) = symmetric_eigen(&m);
    if eigenvalues.iter().any(|&e| e < -0.5) {
        return Err(GenError::NotPositiveDefinite(name));
    }
    if eigenvalues.iter().all(|&e| e > 1e-6) {
        return Ok(m);
    }
    // clip and reassemble
    let (eigenvalues, vectors) = symmetric_eigen(&m);
    let clipped: Vec<f64> = eigenvalues.iter().map(|&e| e.max(1e-6)).collect();
    let mut repaired = vec![vec![0.0; SEGMENTS]; SEGMENTS];
    for (r, row) in repaired.iter_mut().enumerate() {
        for (cix, cell) in row.iter_mut().enumerate() {
            *cell = (0..SEGMENTS)
                .map(|k| vectors[r][k] * clipped[k] * vectors[cix][k])
                .sum();
        }
    }
    Ok(repaired)
}

/// Matrix square root via eigendecomposition, for sampling N(0, Sigma).
fn sqrt_factor(cov: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = cov.len();
    let (eigenvalues, vectors) = symmetric_eigen(cov);
    let roots: Vec<f64> = eigenvalues.iter().map(|&e| e.max(0.0).sqrt()).collect();
    let mut factor = vec![vec![0.0; n]; n];
    for (r, row) in factor.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = vectors[r][c] * roots[c];
        }
    }
    factor
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Generates a cohort. Deterministic under `cfg.seed`.
/// AHA 17-segment perfusion territories (0-based segment indices): left
/// anterior descending, right coronary, and left circumflex.
const TERRITORIES: [&[usize]; 3] = [
    &[0, 1, 6, 7, 12, 13, 16],
    &[2, 3, 8, 9, 14],
    &[4, 5, 10, 11, 15],
];

/// Assigns the six binary risk factors with exact per-group prevalence
/// counts rather than independent coin flips, so observed rates track the
/// configured targets at cohort size instead of drifting by sampling noise.
/// When label noise is active the configured rates are treated as the
/// target *observed* rates per recorded label, and the latent per-group
/// rates are adjusted so the noisy mixture still reproduces them.
fn assign_binary_risk_factors(
    cfg: &GeneratorConfig,
    rows: &mut [Vec<f64>],
    feature_class: &[bool],
    rng: &mut ChaCha8Rng,
) {
    let binaries = [
        cfg.clinical_rates.gender,
        cfg.clinical_rates.hypertension,
        cfg.clinical_rates.diabetes,
        cfg.clinical_rates.hyperlipemia,
        cfg.clinical_rates.smoke,
        cfg.clinical_rates.family_history,
    ];
    let e = cfg.label_noise;
    for (offset, [t_case, t_ctrl]) in binaries.iter().copied().enumerate() {
        // Solve (1-e)*p_case + e*p_ctrl = t_case (and symmetrically) so
        // the rate observed per recorded label matches the target.
        let p_case = (((1.0 - e) * t_case - e * t_ctrl) / (1.0 - 2.0 * e)).clamp(0.0, 1.0);
        let p_ctrl = (((1.0 - e) * t_ctrl - e * t_case) / (1.0 - 2.0 * e)).clamp(0.0, 1.0);
        for (group_is_case, rate) in [(true, p_case), (false, p_ctrl)] {
            let mut members: Vec<usize> = (0..rows.len())
                .filter(|&i| feature_class[i] == group_is_case)
                .collect();
            let positives = (rate * members.len() as f64).round() as usize;
            let (chosen, _) = members.partial_shuffle(rng, positives);
            for &i in chosen.iter() {
                rows[i][CLINICAL_START + 1 + offset] = 1.0;
            }
        }
    }
}

pub fn generate_cohort(cfg: &GeneratorConfig) -> Result<Dataset, GenError> {
    cfg.validate()?;
    let schema = FeatureSchema::standard();

    let factors: Vec<Vec<Vec<f64>>> = [
        (&cfg.pss_correlations, "pss"),
        (&cfg.ssr_correlations, "ssr"),
        (&cfg.tp_correlations, "tp"),
    ]
    .iter()
    .map(|(c, name)| block_covariance(c, name).map(|m| sqrt_factor(&m)))
    .collect::<Result<_, _>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.n);
    let mut labels = Vec::with_capacity(cfg.n);
    let mut feature_class = Vec::with_capacity(cfg.n);
    let mut subject_ids = Vec::with_capacity(cfg.n);

    for subject in 0..cfg.n {
        let is_case = subject < cfg.positive_count;
        // With probability `label_noise`, draw every feature from the
        // opposite class's distribution while keeping the recorded label.
        let flipped = cfg.label_noise > 0.0 && rng.gen::<f64>() < cfg.label_noise;
        let feature_case = is_case != flipped;
        let class_sign = if feature_case { 0.5 } else { -0.5 };
        let lesion_active = cfg.territory_effect > 0.0 || cfg.case_dispersion != 1.0;
        let territory: Option<&[usize]> = if feature_case && lesion_active {
            Some(TERRITORIES[rng.gen_range(0..TERRITORIES.len())])
        } else {
            None
        };
        let severity = if feature_case && cfg.severity_sd > 0.0 {
            (1.0 + cfg.severity_sd * standard_normal(&mut rng)).max(0.0)
        } else {
            1.0
        };
        let artifact = if cfg.artifact_rate > 0.0 && rng.gen::<f64>() < cfg.artifact_rate {
            cfg.artifact_scale
        } else {
            1.0
        };
        let mut row = vec![0.0; NUM_FEATURES];

        // correlated strain blocks
        for (block_ix, block) in StrainBlock::ALL.iter().enumerate() {
            let z: Vec<f64> = (0..SEGMENTS).map(|_| standard_normal(&mut rng)).collect();
            let factor = &factors[block_ix];
            for seg in 0..SEGMENTS {
                let corr: f64 = (0..SEGMENTS).map(|k| factor[seg][k] * z[k]).sum();
                let idx = block.start() + seg;
                let (base, sd) = feature_scale(idx);
                let in_lesion = territory.is_some_and(|t| t.contains(&seg));
                let noise_scale = if in_lesion { cfg.case_dispersion } else { 1.0 };
                let mut shift = class_sign * cfg.signal * cfg.effect_sizes[idx];
                if in_lesion {
                    shift += cfg.territory_effect;
                }
                shift *= severity;
                row[idx] = base + sd * (artifact * noise_scale * corr + shift);
            }
        }
        // global features: each endo/mid/epi triplet reflects one
        // measurement read at three wall layers, so the layers share most
        // of their noise; psd stands alone.
        const LAYER_CORR: f64 = 0.85;
        let mut idx = GS_START;
        while idx < NUM_NUMERIC {
            let triplet = idx + 3 <= NUM_NUMERIC - 1; // psd is the last, untied feature
            let width = if triplet { 3 } else { 1 };
            let shared = standard_normal(&mut rng);
            for layer in 0..width {
                let fidx = idx + layer;
                let (base, sd) = feature_scale(fidx);
                let noise = if triplet {
                    LAYER_CORR.sqrt() * shared
                        + (1.0 - LAYER_CORR).sqrt() * standard_normal(&mut rng)
                } else {
                    shared
                };
                let shift = severity * class_sign * cfg.signal * cfg.effect_sizes[fidx];
                row[fidx] = base + sd * (artifact * noise + shift);
            }
            idx += width;
        }

        // clinical
        let age = cfg.age_moments.control_mean
            + (cfg.age_moments.case_mean - cfg.age_moments.control_mean)
                * (feature_case as u8 as f64)
            + standard_normal(&mut rng)
                * if feature_case {
                    cfg.age_moments.case_sd
                } else {
                    cfg.age_moments.control_sd
                };
        row[CLINICAL_START] = age.round().clamp(18.0, 100.0);

        rows.push(row);
        labels.push(is_case as u8);
        feature_class.push(feature_case);
        subject_ids.push(format!("subj_{:04}", subject + 1));
    }

    assign_binary_risk_factors(cfg, &mut rows, &feature_class, &mut rng);

    Ok(Dataset {
        schema,
        rows,
        labels,
        subject_ids,
    })
}

/// The calibration checked into the repo. Longitudinal features carry
/// moderate standardized shifts; radial (gs_*) features carry none; the
/// clinical rate gaps follow the published case/control percentages.
pub fn default_calibration() -> GeneratorConfig {
    let mut effect_sizes = vec![0.0; NUM_NUMERIC];
    for seg in 0..SEGMENTS {
        effect_sizes[StrainBlock::Pss.start() + seg] = 0.38;
        effect_sizes[StrainBlock::Ssr.start() + seg] = 0.30;
        effect_sizes[StrainBlock::Tp.start() + seg] = 0.10;
    }
    // gs_* radial features deliberately left at 0.0
    effect_sizes[GLPS_START] = 0.24; // endo
    effect_sizes[GLPS_START + 1] = 0.30; // mid
    effect_sizes[GLPS_START + 2] = 0.40; // epi
    effect_sizes[PSD_INDEX] = 0.20;

    GeneratorConfig {
        n: 424,
        positive_count: 217,
        pss_correlations: BlockCorrelations {
            within_level: 0.60,
            apex_apical: 0.75,
            adjacent: 0.45,
            distant: 0.30,
        },
        ssr_correlations: BlockCorrelations {
            within_level: 0.55,
            apex_apical: 0.70,
            adjacent: 0.40,
            distant: 0.25,
        },
        tp_correlations: BlockCorrelations {
            within_level: 0.40,
            apex_apical: 0.55,
            adjacent: 0.30,
            distant: 0.15,
        },
        effect_sizes,
        signal: 2.2,
        case_dispersion: 1.6,
        label_noise: 0.13,
        territory_effect: 0.6,
        severity_sd: 0.4,
        artifact_rate: 0.02,
        artifact_scale: 3.0,
        clinical_rates: ClinicalRates {
            gender: [0.70, 0.66],
            hypertension: [0.62, 0.52],
            diabetes: [0.30, 0.4174],
            hyperlipemia: [0.46, 0.40],
            smoke: [0.525, 0.28],
            family_history: [0.12, 0.09],
        },
        age_moments: AgeMoments {
            case_mean: 64.39,
            case_sd: 9.79,
            control_mean: 64.11,
            control_sd: 9.52,
        },
        seed: 20240424,
    }
}
