//! Binary classification metrics: confusion counts, the derived rate
//! metrics, and the empirical ROC curve with trapezoidal AUC.
//!
//! The positive class is label 1 throughout. Metrics whose denominator is
//! zero are reported as 0 and the affected names are listed rather than
//! failing the run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positive: usize,
    pub true_negative: usize,
    pub false_positive: usize,
    pub false_negative: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positive + self.true_negative + self.false_positive + self.false_negative
    }
}

fn check_binary(what: &str, values: &[u8]) -> Result<()> {
    for &v in values {
        if v > 1 {
            return Err(Error::InvalidLabel {
                value: v.to_string(),
                message: format!("{what} must be 0 or 1"),
            });
        }
    }
    Ok(())
}

pub fn confusion(labels: &[u8], predictions: &[u8]) -> Result<ConfusionCounts> {
    if labels.len() != predictions.len() {
        return Err(Error::DimMismatch {
            op: "confusion counts",
            left_rows: 1,
            left_cols: labels.len(),
            right_rows: 1,
            right_cols: predictions.len(),
        });
    }
    check_binary("labels", labels)?;
    check_binary("predictions", predictions)?;
    let mut counts = ConfusionCounts::default();
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y, p) {
            (1, 1) => counts.true_positive += 1,
            (0, 0) => counts.true_negative += 1,
            (0, 1) => counts.false_positive += 1,
            _ => counts.false_negative += 1,
        }
    }
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSuite {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Metrics that were forced to 0 because their denominator was empty.
    pub zero_denominator: Vec<String>,
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn metric_suite(counts: &ConfusionCounts) -> Result<MetricSuite> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::EmptyInput {
            what: "confusion counts".into(),
        });
    }
    let mut zero_denominator = Vec::new();
    let accuracy = (counts.true_positive + counts.true_negative) as f64 / total as f64;
    let predicted_positive = counts.true_positive + counts.false_positive;
    let precision = if predicted_positive == 0 {
        zero_denominator.push("precision".to_string());
        0.0
    } else {
        counts.true_positive as f64 / predicted_positive as f64
    };
    let actual_positive = counts.true_positive + counts.false_negative;
    let recall = if actual_positive == 0 {
        zero_denominator.push("recall".to_string());
        0.0
    } else {
        counts.true_positive as f64 / actual_positive as f64
    };
    if precision + recall == 0.0 {
        zero_denominator.push("f1".to_string());
    }
    Ok(MetricSuite {
        accuracy,
        precision,
        recall,
        f1: f1_score(precision, recall),
        zero_denominator,
    })
}

/// Empirical ROC curve and its trapezoidal area.
///
/// Scores are swept descending over their distinct values; rows with equal
/// scores enter as one step, which draws the tie as a single diagonal
/// segment. The returned points start at (0, 0), end at (1, 1), and both
/// coordinates are non-decreasing.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<(Vec<(f64, f64)>, f64)> {
    if labels.len() != scores.len() {
        return Err(Error::DimMismatch {
            op: "roc scores",
            left_rows: 1,
            left_cols: labels.len(),
            right_rows: 1,
            right_cols: scores.len(),
        });
    }
    check_binary("labels", labels)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite {
            op: "roc scores".into(),
        });
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass {
            context: "roc curve".into(),
        });
    }

    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = vec![(0.0, 0.0)];
    let mut auc = 0.0;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        // advance over the whole tie group at this score
        let score = scores[order[i]];
        while i < order.len() && scores[order[i]] == score {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let point = (fp as f64 / negatives as f64, tp as f64 / positives as f64);
        let last = *points.last().unwrap();
        auc += (point.0 - last.0) * (point.1 + last.1) / 2.0;
        points.push(point);
    }
    Ok((points, auc))
}
