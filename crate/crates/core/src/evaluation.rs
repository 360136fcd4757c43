//! Confusion-matrix construction and classification metrics for binary
//! direction forecasts.
//!
//! One deliberate departure from common usage, kept throughout this
//! codebase: `f_score` is the *product* of precision and recall, not their
//! harmonic mean. Both composite experiments and reports use this product
//! form; see the README for the rationale.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::DirectionLabel;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("predicted ({predicted}) and actual ({actual}) label counts differ")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("cannot evaluate an empty prediction set")]
    EmptyInput,
}

/// Four-way tally with +1 (up) as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }

    /// (TP + TN) / total; an empty matrix scores 0 with a warning.
    pub fn accuracy(&self) -> f64 {
        ratio(
            (self.true_positives + self.true_negatives) as f64,
            self.total() as f64,
            "accuracy",
        )
    }

    /// TP / (TP + FP); no positive predictions scores 0 with a warning.
    pub fn precision(&self) -> f64 {
        ratio(
            self.true_positives as f64,
            (self.true_positives + self.false_positives) as f64,
            "precision",
        )
    }

    /// TP / (TP + FN); no positive actuals scores 0 with a warning.
    pub fn recall(&self) -> f64 {
        ratio(
            self.true_positives as f64,
            (self.true_positives + self.false_negatives) as f64,
            "recall",
        )
    }

    /// Product of precision and recall — deliberately not the harmonic
    /// mean; the reported composite stays comparable across this project's
    /// tables only under the product form.
    pub fn f_score(&self) -> f64 {
        self.precision() * self.recall()
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(self, rhs: ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            true_positives: self.true_positives + rhs.true_positives,
            false_positives: self.false_positives + rhs.false_positives,
            false_negatives: self.false_negatives + rhs.false_negatives,
            true_negatives: self.true_negatives + rhs.true_negatives,
        }
    }
}

impl std::ops::AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, rhs: ConfusionMatrix) {
        *self = *self + rhs;
    }
}

fn ratio(numerator: f64, denominator: f64, metric: &str) -> f64 {
    if denominator == 0.0 {
        log::warn!("{metric}: undefined (0/0); reporting 0 by convention");
        return 0.0;
    }
    numerator / denominator
}

/// Tally predictions against actual outcomes.
pub fn confusion(
    predicted: &[DirectionLabel],
    actual: &[DirectionLabel],
) -> Result<ConfusionMatrix, EvaluationError> {
    if predicted.len() != actual.len() {
        return Err(EvaluationError::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(EvaluationError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        use DirectionLabel::{Down, Up};
        match (p, a) {
            (Up, Up) => cm.true_positives += 1,
            (Up, Down) => cm.false_positives += 1,
            (Down, Up) => cm.false_negatives += 1,
            (Down, Down) => cm.true_negatives += 1,
        }
    }
    Ok(cm)
}
