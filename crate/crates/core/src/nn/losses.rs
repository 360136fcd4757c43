//! Scalar losses with analytic gradients.
//!
//! Conventions fixed here once: MSE is the *mean* squared error over
//! components; binary cross-entropy is the *sum* `−Σ[t·ln p + (1−t)·ln(1−p)]`
//! with probabilities clipped to `[1e-12, 1−1e-12]` before the logs.

pub const PROB_CLIP: f64 = 1e-12;

fn assert_same_len(pred: &[f64], target: &[f64]) {
    assert_eq!(
        pred.len(),
        target.len(),
        "loss inputs must have one target per prediction"
    );
    assert!(!pred.is_empty(), "loss inputs must be non-empty");
}

/// Mean squared error `(1/n)·Σ(p−t)²`.
pub fn mse(pred: &[f64], target: &[f64]) -> f64 {
    assert_same_len(pred, target);
    let n = pred.len() as f64;
    pred.iter()
        .zip(target)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum::<f64>()
        / n
}

/// Gradient of `mse` with respect to `pred`: `(2/n)·(p−t)`.
pub fn mse_grad(pred: &[f64], target: &[f64]) -> Vec<f64> {
    assert_same_len(pred, target);
    let n = pred.len() as f64;
    pred.iter()
        .zip(target)
        .map(|(&p, &t)| 2.0 * (p - t) / n)
        .collect()
}

fn clip(p: f64) -> f64 {
    p.clamp(PROB_CLIP, 1.0 - PROB_CLIP)
}

/// Binary cross-entropy `−Σ[t·ln p + (1−t)·ln(1−p)]` over all components.
pub fn binary_cross_entropy(pred: &[f64], target: &[f64]) -> f64 {
    assert_same_len(pred, target);
    pred.iter()
        .zip(target)
        .map(|(&p, &t)| {
            let p = clip(p);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum()
}

/// Cross-entropy in excess of its floor: `binary_cross_entropy(pred, target)
/// − binary_cross_entropy(target, target)`.
///
/// Plain cross-entropy against soft targets is bounded below by the targets'
/// own entropy, so it cannot reach 0 even at perfect reconstruction. The
/// excess (the KL divergence summed over components) is 0 exactly when
/// `pred == target`, which makes it the right quantity to *report* for
/// reconstruction quality. It differs from the trained objective only by a
/// constant, so gradients and minimizers are identical.
pub fn cross_entropy_excess(pred: &[f64], target: &[f64]) -> f64 {
    binary_cross_entropy(pred, target) - binary_cross_entropy(target, target)
}

/// Gradient of `binary_cross_entropy` with respect to `pred`:
/// `−t/p + (1−t)/(1−p)` at the clipped probability.
pub fn binary_cross_entropy_grad(pred: &[f64], target: &[f64]) -> Vec<f64> {
    assert_same_len(pred, target);
    pred.iter()
        .zip(target)
        .map(|(&p, &t)| {
            let p = clip(p);
            -t / p + (1.0 - t) / (1.0 - p)
        })
        .collect()
}

/// Loss selector shared by the trainers and the gradient checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    BinaryCrossEntropy,
}

impl LossKind {
    pub fn value(self, pred: &[f64], target: &[f64]) -> f64 {
        match self {
            LossKind::Mse => mse(pred, target),
            LossKind::BinaryCrossEntropy => binary_cross_entropy(pred, target),
        }
    }

    pub fn grad(self, pred: &[f64], target: &[f64]) -> Vec<f64> {
        match self {
            LossKind::Mse => mse_grad(pred, target),
            LossKind::BinaryCrossEntropy => binary_cross_entropy_grad(pred, target),
        }
    }
}
