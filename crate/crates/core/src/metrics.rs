//! Evaluation metrics for reconstructed occupancy maps.

use crate::error::{Error, Result};

/// At most this many distinct score values are tried as break-even
/// thresholds; larger sets are subsampled evenly with both extremes kept.
const MAX_THRESHOLDS: usize = 256;

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Fraction of samples whose predicted cell (argmax, ties to the lowest
/// index) matches the labeled cell.
pub fn prob_map_accuracy(predictions: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<f64> {
    if predictions.len() != labels.len() || predictions.is_empty() {
        return Err(Error::Shape(format!(
            "{} predictions against {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut hits = 0usize;
    for (p, m) in predictions.iter().zip(labels) {
        if p.len() != m.len() {
            return Err(Error::Shape("prediction and label lengths differ".into()));
        }
        if argmax(p) == argmax(m) {
            hits += 1;
        }
    }
    Ok(hits as f64 / predictions.len() as f64)
}

/// Precision-recall break-even point over per-cell scores.
///
/// Every distinct score value is a candidate threshold (subsampled to
/// [`MAX_THRESHOLDS`]); a cell counts as detected when its score is at least
/// the threshold. The returned value is the mean of precision and recall at
/// the candidate where they are closest, preferring the higher recall on
/// ties. Labels must contain at least one positive cell.
pub fn pr_break_even(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::Shape(format!(
            "{} scores against {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&m| m > 1) {
        return Err(Error::Config(format!("labels must be 0 or 1, found {bad}")));
    }
    let n_positive = labels.iter().filter(|&&m| m == 1).count();
    if n_positive == 0 {
        return Err(Error::Config("break-even point is undefined without positive labels".into()));
    }
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| a.partial_cmp(b).expect("scores must be comparable"));
    thresholds.dedup();
    if thresholds.len() > MAX_THRESHOLDS {
        let last = thresholds.len() - 1;
        let picked: Vec<f64> = (0..MAX_THRESHOLDS)
            .map(|i| thresholds[i * last / (MAX_THRESHOLDS - 1)])
            .collect();
        thresholds = picked;
    }
    let mut best: Option<(f64, f64)> = None; // (|p - r|, break-even value)
    let mut best_recall = -1.0f64;
    for &t in &thresholds {
        let mut tp = 0usize;
        let mut fp = 0usize;
        for (&s, &m) in scores.iter().zip(labels) {
            if s >= t {
                if m == 1 {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        if tp + fp == 0 {
            continue;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / n_positive as f64;
        let gap = (precision - recall).abs();
        let better = match best {
            None => true,
            Some((g, _)) => gap < g - 1e-15 || (gap <= g + 1e-15 && recall > best_recall),
        };
        if better {
            best = Some((gap, 0.5 * (precision + recall)));
            best_recall = recall;
        }
    }
    // The lowest threshold always predicts at least every positive cell, so
    // a candidate exists whenever labels do.
    Ok(best.expect("at least one threshold has predictions").1)
}

/// Mean binary cross entropy of predicted probabilities, with the same
/// clamping as the training loss.
pub fn bce_test_loss(predictions: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<f64> {
    if predictions.len() != labels.len() || predictions.is_empty() {
        return Err(Error::Shape(format!(
            "{} predictions against {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut total = 0.0;
    for (q, m) in predictions.iter().zip(labels) {
        if q.len() != m.len() {
            return Err(Error::Shape("prediction and label lengths differ".into()));
        }
        let n = q.len() as f64;
        total -= q
            .iter()
            .zip(m)
            .map(|(&qi, &mi)| {
                let qc = qi.clamp(crate::nn::PROB_CLAMP, 1.0 - crate::nn::PROB_CLAMP);
                mi * qc.ln() + (1.0 - mi) * (1.0 - qc).ln()
            })
            .sum::<f64>()
            / n;
    }
    Ok(total / predictions.len() as f64)
}

/// Thresholded binary map: strictly above the threshold becomes 1.
pub fn discretize(values: &[f64], threshold: f64) -> Vec<u8> {
    values.iter().map(|&v| if v > threshold { 1 } else { 0 }).collect()
}
