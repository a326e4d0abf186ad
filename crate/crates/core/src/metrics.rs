//! Classification metrics: confusion matrix, accuracy/sensitivity/
//! specificity, ROC curve and AUC.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} predictions vs {1} truths")]
    LengthMismatch(usize, usize),
    #[error("rate undefined: class {0} absent")]
    UndefinedRate(u8),
    #[error("both classes must be present")]
    DegenerateClass,
    #[error("non-finite score at position {0}")]
    NonFiniteScore(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn n(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(pred: &[u8], truth: &[u8]) -> Result<ConfusionMatrix, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), truth.len()));
    }
    let mut cm = ConfusionMatrix {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (1, 1) => cm.tp += 1,
            (1, 0) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fn_ += 1,
            _ => panic!("labels must be 0 or 1"),
        }
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    (cm.tp + cm.tn) as f64 / cm.n() as f64
}

pub fn sensitivity(cm: &ConfusionMatrix) -> Result<f64, MetricsError> {
    let pos = cm.tp + cm.fn_;
    if pos == 0 {
        return Err(MetricsError::UndefinedRate(1));
    }
    Ok(cm.tp as f64 / pos as f64)
}

pub fn specificity(cm: &ConfusionMatrix) -> Result<f64, MetricsError> {
    let neg = cm.tn + cm.fp;
    if neg == 0 {
        return Err(MetricsError::UndefinedRate(0));
    }
    Ok(cm.tn as f64 / neg as f64)
}

/// ROC curve from a threshold sweep over unique scores, plus trapezoidal
/// AUC. Equal scores are grouped into one threshold step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocCurve {
    /// (false positive rate, true positive rate), starting at (0,0) and
    /// ending at (1,1), both coordinates non-decreasing.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

pub fn roc_and_auc(scores: &[f64], truth: &[u8]) -> Result<RocCurve, MetricsError> {
    if scores.len() != truth.len() {
        return Err(MetricsError::LengthMismatch(scores.len(), truth.len()));
    }
    let n_pos = truth.iter().filter(|&&t| t == 1).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::DegenerateClass);
    }

    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore(i));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut auc = 0.0;
    let mut i = 0usize;
    while i < order.len() {
        // group equal scores into one step
        let s = scores[order[i]];
        let (mut dtp, mut dfp) = (0usize, 0usize);
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] == 1 {
                dtp += 1;
            } else {
                dfp += 1;
            }
            i += 1;
        }
        let (prev_fpr, prev_tpr) = *points.last().unwrap();
        tp += dtp;
        fp += dfp;
        let fpr = fp as f64 / n_neg as f64;
        let tpr = tp as f64 / n_pos as f64;
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        points.push((fpr, tpr));
    }
    Ok(RocCurve { points, auc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(n^2) pairwise-concordance AUC: fraction of (pos, neg) pairs with
    /// score_pos > score_neg, ties counted one half.
    fn auc_concordance(scores: &[f64], truth: &[u8]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &ti) in truth.iter().enumerate() {
            if ti != 1 {
                continue;
            }
            for (j, &tj) in truth.iter().enumerate() {
                if tj != 0 {
                    continue;
                }
                den += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
        num / den
    }

    #[test]
    fn perfect_and_inverted() {
        let truth = vec![1, 0, 1, 0];
        let cm = confusion(&truth, &truth).unwrap();
        assert_eq!(accuracy(&cm), 1.0);
        assert_eq!(sensitivity(&cm).unwrap(), 1.0);
        assert_eq!(specificity(&cm).unwrap(), 1.0);
        let flipped: Vec<u8> = truth.iter().map(|&t| 1 - t).collect();
        let cm = confusion(&flipped, &truth).unwrap();
        assert_eq!(accuracy(&cm), 0.0);
    }

    #[test]
    fn paper_scale_confusion_arithmetic() {
        // a 64-subject operating point: tp=29 fn=3 tn=27 fp=5
        let mut pred = Vec::new();
        let mut truth = Vec::new();
        for _ in 0..29 {
            pred.push(1);
            truth.push(1);
        }
        for _ in 0..3 {
            pred.push(0);
            truth.push(1);
        }
        for _ in 0..27 {
            pred.push(0);
            truth.push(0);
        }
        for _ in 0..5 {
            pred.push(1);
            truth.push(0);
        }
        let cm = confusion(&pred, &truth).unwrap();
        assert_eq!(cm.n(), 64);
        assert!((accuracy(&cm) - 56.0 / 64.0).abs() < 1e-15);
        assert!((sensitivity(&cm).unwrap() - 29.0 / 32.0).abs() < 1e-15);
        assert!((specificity(&cm).unwrap() - 27.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn auc_perfect_ranking() {
        let truth = vec![1, 0, 1, 0, 1];
        let scores: Vec<f64> = truth.iter().map(|&t| t as f64).collect();
        let roc = roc_and_auc(&scores, &truth).unwrap();
        assert_eq!(roc.auc, 1.0);
    }

    #[test]
    fn auc_constant_scores() {
        let truth = vec![1, 0, 1, 0];
        let scores = vec![0.4; 4];
        let roc = roc_and_auc(&scores, &truth).unwrap();
        assert!((roc.auc - 0.5).abs() < 1e-15);
        assert_eq!(roc.points, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn auc_matches_concordance_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let n = rng.gen_range(5..=50);
            let truth: Vec<u8> = (0..n).map(|i| if i < 2 { i as u8 } else { rng.gen_range(0..2) as u8 }).collect();
            // quantize some scores to force ties
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.gen::<f64>() * 8.0).round() / 8.0)
                .collect();
            let roc = roc_and_auc(&scores, &truth).unwrap();
            let oracle = auc_concordance(&scores, &truth);
            assert!(
                (roc.auc - oracle).abs() < 1e-12,
                "auc {} vs oracle {}",
                roc.auc,
                oracle
            );
        }
    }

    #[test]
    fn roc_endpoints_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let n = 40;
        let truth: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let roc = roc_and_auc(&scores, &truth).unwrap();
        assert_eq!(*roc.points.first().unwrap(), (0.0, 0.0));
        assert_eq!(*roc.points.last().unwrap(), (1.0, 1.0));
        for w in roc.points.windows(2) {
            assert!(w[1].0 >= w[0].0);
            assert!(w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(matches!(
            confusion(&[1, 0], &[1]),
            Err(MetricsError::LengthMismatch(2, 1))
        ));
        assert!(matches!(
            roc_and_auc(&[0.1], &[1, 0]),
            Err(MetricsError::LengthMismatch(1, 2))
        ));
    }

    proptest! {
        #[test]
        fn auc_invariant_under_monotone_transform(
            raw in proptest::collection::vec((0.0f64..1.0, 0u8..2), 4..40)
        ) {
            let scores: Vec<f64> = raw.iter().map(|&(s, _)| s).collect();
            let mut truth: Vec<u8> = raw.iter().map(|&(_, t)| t).collect();
            truth[0] = 0;
            truth[1] = 1;
            let base = roc_and_auc(&scores, &truth).unwrap().auc;
            // strictly monotone transform: exp(3x) + x
            let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + s).collect();
            let t = roc_and_auc(&transformed, &truth).unwrap().auc;
            prop_assert!((base - t).abs() < 1e-12);
            // score flip maps auc -> 1 - auc
            let flipped: Vec<f64> = scores.iter().map(|s| 1.0 - s).collect();
            let f = roc_and_auc(&flipped, &truth).unwrap().auc;
            prop_assert!((base + f - 1.0).abs() < 1e-12);
        }

        #[test]
        fn confusion_counts_sum(pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..60)) {
            let pred: Vec<u8> = pairs.iter().map(|&(p, _)| p).collect();
            let truth: Vec<u8> = pairs.iter().map(|&(_, t)| t).collect();
            let cm = confusion(&pred, &truth).unwrap();
            prop_assert_eq!(cm.n(), pairs.len());
        }
    }
}
