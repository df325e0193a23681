//! Output heads and their losses.

use serde::{Deserialize, Serialize};

/// Probabilities below this (or above one minus this) are clamped before
/// taking logarithms.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    /// Softmax over the outputs with categorical cross entropy; labels form
    /// a distribution over cells.
    SoftmaxCce,
    /// Independent sigmoids with binary cross entropy averaged over outputs;
    /// labels are per-cell values in [0, 1].
    SigmoidBce,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let peak = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - peak).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / total).collect()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn clamp(q: f64) -> f64 {
    q.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Head probabilities from raw logits.
pub fn head_output(head: HeadKind, logits: &[f64]) -> Vec<f64> {
    match head {
        HeadKind::SoftmaxCce => softmax(logits),
        HeadKind::SigmoidBce => logits.iter().map(|&z| sigmoid(z)).collect(),
    }
}

/// Loss and its gradient with respect to the logits.
///
/// Both heads fold the output nonlinearity into the loss derivative: the
/// softmax head yields `q - m`, the sigmoid head `(q - m) / n_outputs`.
pub fn loss_and_logit_grad(head: HeadKind, logits: &[f64], label: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(logits.len(), label.len(), "label length");
    let q = head_output(head, logits);
    match head {
        HeadKind::SoftmaxCce => {
            let loss = -label
                .iter()
                .zip(&q)
                .map(|(&m, &qi)| if m > 0.0 { m * clamp(qi).ln() } else { 0.0 })
                .sum::<f64>();
            let grad = q.iter().zip(label).map(|(&qi, &m)| qi - m).collect();
            (loss, grad)
        }
        HeadKind::SigmoidBce => {
            let n = logits.len() as f64;
            let loss = -label
                .iter()
                .zip(&q)
                .map(|(&m, &qi)| {
                    let qc = clamp(qi);
                    m * qc.ln() + (1.0 - m) * (1.0 - qc).ln()
                })
                .sum::<f64>()
                / n;
            let grad = q.iter().zip(label).map(|(&qi, &m)| (qi - m) / n).collect();
            (loss, grad)
        }
    }
}
