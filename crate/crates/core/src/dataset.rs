//! Cohort schema, CSV loading and stratified partitioning.
//!
//! The feature table has 71 predictor columns: 64 numeric strain descriptors
//! (PSS/SSR/TP over the AHA 17-segment model, 9 radial global strains,
//! 3 GLPS layers, PSD) followed by 7 clinical descriptors. The final CSV
//! column is the binary CHD label.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;
use thiserror::Error;

pub const NUM_NUMERIC: usize = 64;
pub const NUM_CLINICAL: usize = 7;
pub const NUM_FEATURES: usize = NUM_NUMERIC + NUM_CLINICAL;
pub const SEGMENTS: usize = 17;

/// Column offsets of the numeric blocks inside a feature row.
pub const PSS_START: usize = 0;
pub const SSR_START: usize = 17;
pub const TP_START: usize = 34;
pub const GS_START: usize = 51;
pub const GLPS_START: usize = 60;
pub const PSD_INDEX: usize = 63;
pub const CLINICAL_START: usize = 64;

/// Strain blocks that undergo PCA reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrainBlock {
    Pss,
    Ssr,
    Tp,
}

impl StrainBlock {
    pub fn start(self) -> usize {
        match self {
            StrainBlock::Pss => PSS_START,
            StrainBlock::Ssr => SSR_START,
            StrainBlock::Tp => TP_START,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StrainBlock::Pss => "PSS",
            StrainBlock::Ssr => "SSR",
            StrainBlock::Tp => "TP",
        }
    }

    pub const ALL: [StrainBlock; 3] = [StrainBlock::Pss, StrainBlock::Ssr, StrainBlock::Tp];
}

/// AHA 17-segment levels. Segments are 1-based: basal 1-6, mid-cavity 7-12,
/// apical 13-16, apex 17.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentLevel {
    Basal,
    MidCavity,
    Apical,
    Apex,
}

pub fn segment_level(segment: usize) -> SegmentLevel {
    match segment {
        1..=6 => SegmentLevel::Basal,
        7..=12 => SegmentLevel::MidCavity,
        13..=16 => SegmentLevel::Apical,
        17 => SegmentLevel::Apex,
        _ => panic!("segment index out of range: {segment}"),
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-numeric cell at row {row}, column `{column}`: `{value}`")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("unknown category value at row {row}, column `{column}`: `{value}`")]
    UnknownCategoryValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("duplicate subject id `{0}`")]
    DuplicateSubjectId(String),
    #[error("invalid label at row {row}: `{value}` (expected 0 or 1)")]
    InvalidLabel { row: usize, value: String },
    #[error("incomplete row {row}: expected {expected} fields, found {found}")]
    IncompleteRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("class {0} would be emptied by the split")]
    DegenerateClass(u8),
    #[error("cohort too small: subset `{0}` would be empty")]
    CohortTooSmall(String),
    #[error("each class needs at least 2 members, class {0} has {1}")]
    ClassTooSmall(u8, usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// The 71-column predictor schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub numeric: Vec<String>,
    pub clinical: Vec<String>,
}

impl FeatureSchema {
    /// The fixed schema: PSS/SSR/TP per segment, radial GS per level and
    /// layer, GLPS per layer, PSD, then the clinical columns.
    pub fn standard() -> Self {
        let mut numeric = Vec::with_capacity(NUM_NUMERIC);
        for prefix in ["pss", "ssr", "tp"] {
            for s in 1..=SEGMENTS {
                numeric.push(format!("{prefix}_s{s:02}"));
            }
        }
        for level in ["mv", "pm", "ap"] {
            for layer in ["endo", "mid", "epi"] {
                numeric.push(format!("gs_{level}_{layer}"));
            }
        }
        for layer in ["endo", "mid", "epi"] {
            numeric.push(format!("glps_{layer}"));
        }
        numeric.push("psd".to_string());
        debug_assert_eq!(numeric.len(), NUM_NUMERIC);

        let clinical = [
            "age",
            "gender",
            "hypertension",
            "diabetes",
            "hyperlipemia",
            "smoke",
            "family_history",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();

        FeatureSchema { numeric, clinical }
    }

    /// All 71 predictor names in column order.
    pub fn all_names(&self) -> Vec<String> {
        self.numeric.iter().chain(self.clinical.iter()).cloned().collect()
    }

    pub fn feature_count(&self) -> usize {
        self.numeric.len() + self.clinical.len()
    }

    /// Indices of the GLPS layers within a feature row.
    pub fn glps_indices(&self) -> Vec<usize> {
        (GLPS_START..GLPS_START + 3).collect()
    }
}

/// A loaded, validated cohort.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub subject_ids: Vec<String>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[idx]).collect()
    }

    /// Column split by class: (case values, control values).
    pub fn column_by_class(&self, idx: usize) -> (Vec<f64>, Vec<f64>) {
        let mut case = Vec::new();
        let mut control = Vec::new();
        for (row, &label) in self.rows.iter().zip(&self.labels) {
            if label == 1 {
                case.push(row[idx]);
            } else {
                control.push(row[idx]);
            }
        }
        (case, control)
    }
}

fn parse_binary(value: &str, row: usize, column: &str) -> Result<f64, DatasetError> {
    match value.trim() {
        "0" | "N" | "F" | "n" | "f" => Ok(0.0),
        "1" | "Y" | "M" | "y" | "m" => Ok(1.0),
        other => Err(DatasetError::UnknownCategoryValue {
            row,
            column: column.to_string(),
            value: other.to_string(),
        }),
    }
}

/// Loads and validates a cohort CSV. Columns: `subject_id`, the 71 schema
/// columns in order, then `chd_label`. Binary clinical columns accept
/// {0,1}, {N,Y} or {F,M}; age must parse as a non-negative integer.
pub fn load_cohort(path: &Path, schema: &FeatureSchema) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();

    let mut expected = vec!["subject_id".to_string()];
    expected.extend(schema.all_names());
    expected.push("chd_label".to_string());
    for name in &expected {
        if !header.iter().any(|h| h == name) {
            return Err(DatasetError::MissingColumn(name.clone()));
        }
    }
    // Column positions, in schema order (header may be permuted).
    let pos: Vec<usize> = expected
        .iter()
        .map(|name| header.iter().position(|h| h == name).unwrap())
        .collect();

    let n_numeric = schema.numeric.len();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut subject_ids = Vec::new();
    let mut seen = HashSet::new();

    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = i + 1;
        if record.len() < expected.len() {
            return Err(DatasetError::IncompleteRow {
                row: row_no,
                expected: expected.len(),
                found: record.len(),
            });
        }
        let id = record[pos[0]].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(DatasetError::DuplicateSubjectId(id));
        }

        let mut values = Vec::with_capacity(schema.feature_count());
        for (j, name) in schema.all_names().iter().enumerate() {
            let raw = record[pos[1 + j]].trim();
            if raw.is_empty() {
                return Err(DatasetError::IncompleteRow {
                    row: row_no,
                    expected: expected.len(),
                    found: j,
                });
            }
            let value = if j < n_numeric || name == "age" {
                let v: f64 = raw.parse().map_err(|_| DatasetError::NonNumericCell {
                    row: row_no,
                    column: name.clone(),
                    value: raw.to_string(),
                })?;
                if name == "age" {
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(DatasetError::NonNumericCell {
                            row: row_no,
                            column: name.clone(),
                            value: raw.to_string(),
                        });
                    }
                }
                v
            } else {
                parse_binary(raw, row_no, name)?
            };
            values.push(value);
        }

        let label_raw = record[*pos.last().unwrap()].trim();
        let label = match label_raw {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(DatasetError::InvalidLabel {
                    row: row_no,
                    value: other.to_string(),
                })
            }
        };

        subject_ids.push(id);
        rows.push(values);
        labels.push(label);
    }

    Ok(Dataset {
        schema: schema.clone(),
        rows,
        labels,
        subject_ids,
    })
}

/// Writes a cohort in the format `load_cohort` reads.
pub fn write_cohort(d: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["subject_id".to_string()];
    header.extend(d.schema.all_names());
    header.push("chd_label".to_string());
    writer.write_record(&header)?;
    for i in 0..d.n() {
        let mut record = vec![d.subject_ids[i].clone()];
        for &v in &d.rows[i] {
            record.push(format_cell(v));
        }
        record.push(d.labels[i].to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

fn format_cell(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        // shortest representation that round-trips
        format!("{v}")
    }
}

/// The Fig.-1-style partition: held-out test set, second-step validation
/// set, training pool, and K (train_k, val_k) resamples of the pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub test: Vec<usize>,
    pub validation0: Vec<usize>,
    pub training_pool: Vec<usize>,
    pub first_step_splits: Vec<(Vec<usize>, Vec<usize>)>,
}

impl Partition {
    pub fn k(&self) -> usize {
        self.first_step_splits.len()
    }

    /// A short stable fingerprint of the index layout.
    pub fn fingerprint(&self) -> String {
        let mut h = crate::persist::Fnv64::new();
        for set in [&self.test, &self.validation0, &self.training_pool] {
            for &i in set {
                h.write_u64(i as u64);
            }
            h.write_u64(u64::MAX);
        }
        for (t, v) in &self.first_step_splits {
            for &i in t {
                h.write_u64(i as u64);
            }
            h.write_u64(u64::MAX);
            for &i in v {
                h.write_u64(i as u64);
            }
            h.write_u64(u64::MAX);
        }
        format!("{:016x}", h.finish())
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Stratified split over the given indices. The held part gets
/// round-half-up(fraction * n) members, positives allocated first by
/// round-half-up on the positive count, remainder to negatives.
/// Deterministic under `seed`.
pub fn stratified_split_indices(
    indices: &[usize],
    labels: &[u8],
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    assert!(
        holdout_fraction > 0.0 && holdout_fraction < 1.0,
        "holdout fraction must be in (0,1)"
    );
    let mut pos: Vec<usize> = indices.iter().copied().filter(|&i| labels[i] == 1).collect();
    let mut neg: Vec<usize> = indices.iter().copied().filter(|&i| labels[i] == 0).collect();
    if pos.len() < 2 {
        return Err(DatasetError::ClassTooSmall(1, pos.len()));
    }
    if neg.len() < 2 {
        return Err(DatasetError::ClassTooSmall(0, neg.len()));
    }

    let n = indices.len();
    let total_held = round_half_up(holdout_fraction * n as f64);
    let pos_held = round_half_up(holdout_fraction * pos.len() as f64);
    let neg_held = total_held.saturating_sub(pos_held).min(neg.len());

    if pos_held == 0 || neg_held == 0 {
        return Err(DatasetError::DegenerateClass(if pos_held == 0 { 1 } else { 0 }));
    }
    if pos_held >= pos.len() || neg_held >= neg.len() {
        return Err(DatasetError::DegenerateClass(if pos_held >= pos.len() { 1 } else { 0 }));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut held: Vec<usize> = pos[..pos_held]
        .iter()
        .chain(neg[..neg_held].iter())
        .copied()
        .collect();
    let mut rest: Vec<usize> = pos[pos_held..]
        .iter()
        .chain(neg[neg_held..].iter())
        .copied()
        .collect();
    held.sort_unstable();
    rest.sort_unstable();
    Ok((held, rest))
}

/// Stratified split of a whole dataset.
pub fn stratified_split(
    d: &Dataset,
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    let indices: Vec<usize> = (0..d.n()).collect();
    stratified_split_indices(&indices, &d.labels, holdout_fraction, seed)
}

/// Builds the full partition: 15% test, 20% of the remainder as the
/// second-step validation set, and K independent 80/20 resamples of the
/// training pool. At n=424 this yields the 64/72/288 layout with
/// (230, 58) first-step splits.
pub fn make_paper_partition(d: &Dataset, k: usize, seed: u64) -> Result<Partition, DatasetError> {
    assert!(k >= 1, "K must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<usize> = (0..d.n()).collect();

    let (test, rest) = stratified_split_indices(&all, &d.labels, 0.15, rng.gen())
        .map_err(|e| small_cohort(e, "test"))?;
    let (validation0, training_pool) = stratified_split_indices(&rest, &d.labels, 0.20, rng.gen())
        .map_err(|e| small_cohort(e, "validation0"))?;

    let mut first_step_splits = Vec::with_capacity(k);
    for _ in 0..k {
        let (val_k, train_k) =
            stratified_split_indices(&training_pool, &d.labels, 0.20, rng.gen())
                .map_err(|e| small_cohort(e, "first-step split"))?;
        first_step_splits.push((train_k, val_k));
    }

    Ok(Partition {
        test,
        validation0,
        training_pool,
        first_step_splits,
    })
}

fn small_cohort(e: DatasetError, subset: &str) -> DatasetError {
    match e {
        DatasetError::ClassTooSmall(..) | DatasetError::DegenerateClass(..) => {
            DatasetError::CohortTooSmall(subset.to_string())
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset(n: usize, n_pos: usize) -> Dataset {
        let schema = FeatureSchema::standard();
        let rows = (0..n)
            .map(|i| {
                (0..NUM_FEATURES)
                    .map(|j| {
                        if j == CLINICAL_START {
                            (40 + (i % 50)) as f64 // integer age
                        } else if j > CLINICAL_START {
                            ((i + j) % 2) as f64 // binary clinical
                        } else {
                            (i * 71 + j) as f64 * 0.01
                        }
                    })
                    .collect()
            })
            .collect();
        let labels = (0..n).map(|i| if i < n_pos { 1 } else { 0 }).collect();
        let subject_ids = (0..n).map(|i| format!("S{i:04}")).collect();
        Dataset {
            schema,
            rows,
            labels,
            subject_ids,
        }
    }

    #[test]
    fn schema_counts() {
        let s = FeatureSchema::standard();
        assert_eq!(s.numeric.len(), 64);
        assert_eq!(s.clinical.len(), 7);
        assert_eq!(s.feature_count(), 71);
        assert_eq!(s.numeric[PSD_INDEX], "psd");
        assert_eq!(s.numeric[GLPS_START], "glps_endo");
        assert_eq!(s.numeric[16], "pss_s17");
    }

    #[test]
    fn segment_levels_follow_aha_ordering() {
        assert_eq!(segment_level(1), SegmentLevel::Basal);
        assert_eq!(segment_level(6), SegmentLevel::Basal);
        assert_eq!(segment_level(7), SegmentLevel::MidCavity);
        assert_eq!(segment_level(12), SegmentLevel::MidCavity);
        assert_eq!(segment_level(13), SegmentLevel::Apical);
        assert_eq!(segment_level(16), SegmentLevel::Apical);
        assert_eq!(segment_level(17), SegmentLevel::Apex);
    }

    #[test]
    fn paper_sizes_at_424() {
        let d = toy_dataset(424, 217);
        let p = make_paper_partition(&d, 10, 7).unwrap();
        assert_eq!(p.test.len(), 64);
        assert_eq!(p.validation0.len(), 72);
        assert_eq!(p.training_pool.len(), 288);
        assert_eq!(p.first_step_splits.len(), 10);
        for (train_k, val_k) in &p.first_step_splits {
            assert_eq!(train_k.len(), 230);
            assert_eq!(val_k.len(), 58);
        }
    }

    #[test]
    fn split_sizes_scale_at_200() {
        let d = toy_dataset(200, 100);
        let p = make_paper_partition(&d, 5, 3).unwrap();
        assert_eq!(p.test.len(), 30);
        assert_eq!(p.validation0.len(), 34);
        assert_eq!(p.training_pool.len(), 136);
        for (train_k, val_k) in &p.first_step_splits {
            assert_eq!(train_k.len(), 109);
            assert_eq!(val_k.len(), 27);
        }
    }

    #[test]
    fn partition_disjoint_and_covering() {
        let d = toy_dataset(424, 217);
        for seed in 0..50 {
            let p = make_paper_partition(&d, 3, seed).unwrap();
            let mut all: Vec<usize> = p
                .test
                .iter()
                .chain(&p.validation0)
                .chain(&p.training_pool)
                .copied()
                .collect();
            all.sort_unstable();
            assert_eq!(all, (0..424).collect::<Vec<_>>());
            for (train_k, val_k) in &p.first_step_splits {
                let mut pool: Vec<usize> = train_k.iter().chain(val_k).copied().collect();
                pool.sort_unstable();
                let mut expected = p.training_pool.clone();
                expected.sort_unstable();
                assert_eq!(pool, expected);
            }
        }
    }

    #[test]
    fn stratification_within_one_subject() {
        let d = toy_dataset(424, 217);
        let cohort_rate = 217.0 / 424.0;
        for seed in 0..50 {
            let p = make_paper_partition(&d, 3, seed).unwrap();
            let mut subsets: Vec<&[usize]> =
                vec![&p.test, &p.validation0, &p.training_pool];
            for (t, v) in &p.first_step_splits {
                subsets.push(t);
                subsets.push(v);
            }
            for subset in subsets {
                let pos = subset.iter().filter(|&&i| d.labels[i] == 1).count();
                let rate = pos as f64 / subset.len() as f64;
                assert!(
                    (rate - cohort_rate).abs() <= 1.0 / subset.len() as f64 + 1e-12,
                    "subset size {} pos {} rate {rate}",
                    subset.len(),
                    pos
                );
            }
        }
    }

    #[test]
    fn split_four_balanced() {
        let d = toy_dataset(4, 2);
        let (held, rest) = stratified_split(&d, 0.5, 1).unwrap();
        assert_eq!(held.len(), 2);
        assert_eq!(rest.len(), 2);
        let pos_held = held.iter().filter(|&&i| d.labels[i] == 1).count();
        assert_eq!(pos_held, 1);
    }

    #[test]
    fn split_determinism() {
        let d = toy_dataset(100, 40);
        let a = stratified_split(&d, 0.2, 42).unwrap();
        let b = stratified_split(&d, 0.2, 42).unwrap();
        assert_eq!(a, b);
        let c = stratified_split(&d, 0.2, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn seed_sweep_positive_rate_bound() {
        // 1000-seed sweep: held positive count never deviates from the
        // stratified target by more than one subject.
        let d = toy_dataset(100, 30);
        for seed in 0..1000 {
            let (held, _) = stratified_split(&d, 0.2, seed).unwrap();
            assert_eq!(held.len(), 20);
            let pos = held.iter().filter(|&&i| d.labels[i] == 1).count();
            assert!((pos as f64 - 6.0).abs() <= 1.0);
        }
    }

    #[test]
    fn degenerate_class_rejected() {
        let d = toy_dataset(10, 2);
        // fraction so large the positive class would be emptied from `rest`
        let err = stratified_split(&d, 0.9, 1).unwrap_err();
        assert!(matches!(err, DatasetError::DegenerateClass(_)));
    }

    #[test]
    fn csv_round_trip() {
        let d = toy_dataset(20, 8);
        let dir = std::env::temp_dir().join("strainstack_ds_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cohort.csv");
        write_cohort(&d, &path).unwrap();
        let loaded = load_cohort(&path, &d.schema).unwrap();
        assert_eq!(loaded.labels, d.labels);
        assert_eq!(loaded.subject_ids, d.subject_ids);
        assert_eq!(loaded.rows, d.rows);
    }

    #[test]
    fn missing_column_named() {
        let dir = std::env::temp_dir().join("strainstack_ds_test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        let d = toy_dataset(5, 2);
        write_cohort(&d, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let text = text.replace("smoke", "smoked");
        std::fs::write(&path, text).unwrap();
        let err = load_cohort(&path, &d.schema).unwrap_err();
        match err {
            DatasetError::MissingColumn(c) => assert_eq!(c, "smoke"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn duplicate_subject_rejected() {
        let mut d = toy_dataset(5, 2);
        d.subject_ids[3] = d.subject_ids[1].clone();
        let dir = std::env::temp_dir().join("strainstack_ds_test3");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("dup.csv");
        write_cohort(&d, &path).unwrap();
        let err = load_cohort(&path, &d.schema).unwrap_err();
        assert!(matches!(err, DatasetError::DuplicateSubjectId(_)));
    }

    #[test]
    fn yn_literals_accepted() {
        let d = toy_dataset(5, 2);
        let dir = std::env::temp_dir().join("strainstack_ds_test4");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("yn.csv");
        write_cohort(&d, &path).unwrap();
        let mut lines: Vec<String> = std::fs::read_to_string(&path)
            .unwrap()
            .lines()
            .map(|s| s.to_string())
            .collect();
        // rewrite the smoke cell of the first data row to "Y"
        let header: Vec<&str> = lines[0].split(',').collect();
        let smoke_col = header.iter().position(|&h| h == "smoke").unwrap();
        let mut cells: Vec<String> = lines[1].split(',').map(|s| s.to_string()).collect();
        cells[smoke_col] = "Y".to_string();
        lines[1] = cells.join(",");
        std::fs::write(&path, lines.join("\n")).unwrap();
        let loaded = load_cohort(&path, &d.schema).unwrap();
        assert_eq!(loaded.rows[0][CLINICAL_START + 5], 1.0);
    }
}
