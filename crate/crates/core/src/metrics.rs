//! Confusion-matrix measures and ROC AUC.
//!
//! AUC is the tuning objective everywhere else in this crate, so the
//! trapezoidal computation below is written in integer arithmetic (a single
//! trailing division) and agrees bit-for-bit with pair counting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts plus the five derived measures and the ROC curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f1: f64,
    pub auc: f64,
    /// (false positive rate, true positive rate) points, (0,0) .. (1,1).
    pub roc: Vec<(f64, f64)>,
    /// Ratios that hit 0/0 and were defined as 0.
    pub flags: Vec<String>,
}

/// Threshold scores at `threshold` (predict 1 iff score >= threshold) and
/// count the confusion quadrants. Returns (tp, fp, tn, fn).
pub fn confusion(labels: &[u8], scores: &[f64], threshold: f64) -> Result<(u64, u64, u64, u64)> {
    if labels.len() != scores.len() {
        return Err(Error::Shape(format!(
            "labels length {} != scores length {}",
            labels.len(),
            scores.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fne) = (0u64, 0u64, 0u64, 0u64);
    for (&y, &s) in labels.iter().zip(scores) {
        let pred = s >= threshold;
        match (y, pred) {
            (1, true) => tp += 1,
            (1, false) => fne += 1,
            (0, true) => fp += 1,
            (0, false) => tn += 1,
            _ => return Err(Error::Domain(format!("label {y} is not binary"))),
        }
    }
    Ok((tp, fp, tn, fne))
}

struct Scalars {
    accuracy: f64,
    sensitivity: f64,
    specificity: f64,
    precision: f64,
    f1: f64,
    flags: Vec<String>,
}

fn scalar_metrics(tp: u64, fp: u64, tn: u64, fne: u64) -> Result<Scalars> {
    let total = tp + fp + tn + fne;
    if total == 0 {
        return Err(Error::Domain("no rows to derive metrics from".into()));
    }
    let mut flags = Vec::new();
    let mut ratio = |num: u64, den: u64, name: &str| -> f64 {
        if den == 0 {
            flags.push(format!("{name} is 0/0, defined as 0"));
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = (tp + tn) as f64 / total as f64;
    let sensitivity = ratio(tp, tp + fne, "sensitivity");
    let specificity = ratio(tn, tn + fp, "specificity");
    let precision = ratio(tp, tp + fp, "precision");
    let f1 = if precision + sensitivity == 0.0 {
        flags.push("f1 is 0/0, defined as 0".into());
        0.0
    } else {
        2.0 * precision * sensitivity / (precision + sensitivity)
    };
    Ok(Scalars {
        accuracy,
        sensitivity,
        specificity,
        precision,
        f1,
        flags,
    })
}

/// Accuracy, sensitivity, specificity, precision and F1 from confusion
/// counts. Any 0/0 ratio is defined as 0 and flagged. AUC and the ROC curve
/// are left empty; use [`evaluate`] for the full report.
pub fn derive_metrics(tp: u64, fp: u64, tn: u64, fne: u64) -> Result<MetricsReport> {
    let s = scalar_metrics(tp, fp, tn, fne)?;
    Ok(MetricsReport {
        true_pos: tp,
        false_pos: fp,
        true_neg: tn,
        false_neg: fne,
        accuracy: s.accuracy,
        sensitivity: s.sensitivity,
        specificity: s.specificity,
        precision: s.precision,
        f1: s.f1,
        auc: 0.0,
        roc: Vec::new(),
        flags: s.flags,
    })
}

/// Trapezoidal area under the ROC curve, with tie grouping.
///
/// Scores are sorted descending; each distinct score value contributes one
/// ROC point. The area is accumulated in integer units of 2 * pos * neg so
/// the result is exact (it equals P(score+ > score-) + P(tie)/2).
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<(f64, Vec<(f64, f64)>)> {
    if labels.len() != scores.len() {
        return Err(Error::Shape(format!(
            "labels length {} != scores length {}",
            labels.len(),
            scores.len()
        )));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Domain(
            "roc_auc requires both classes present".into(),
        ));
    }

    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal));

    let mut roc = vec![(0.0, 0.0)];
    // Twice the area, scaled by pos*neg: sum over segments of dfp*(tp_prev+tp_cur).
    let mut area2: u64 = 0;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut dtp, mut dfp) = (0u64, 0u64);
        // Consume the whole tie group before emitting a point.
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                dtp += 1;
            } else {
                dfp += 1;
            }
            j += 1;
        }
        area2 += dfp * (2 * tp + dtp);
        tp += dtp;
        fp += dfp;
        roc.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        i = j;
    }
    let auc = area2 as f64 / (2 * pos * neg) as f64;
    Ok((auc, roc))
}

/// Full report: confusion at `threshold`, the five scalar measures, and AUC.
pub fn evaluate(labels: &[u8], scores: &[f64], threshold: f64) -> Result<MetricsReport> {
    let (tp, fp, tn, fne) = confusion(labels, scores, threshold)?;
    let mut report = derive_metrics(tp, fp, tn, fne)?;
    let (auc, roc) = roc_auc(labels, scores)?;
    report.auc = auc;
    report.roc = roc;
    Ok(report)
}
