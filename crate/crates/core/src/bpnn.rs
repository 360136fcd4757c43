//! Three-layer backpropagation direction classifier (28 → 50 → 1 by
//! default): sigmoid throughout, binary cross-entropy objective, SGD with
//! momentum, and an early-stopping snapshot chosen on a time-ordered
//! validation tail.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::market_data::DirectionLabel;
use crate::nn::losses::LossKind;
use crate::nn::{sgd_momentum_step, Activation, Network, NnError, ParamBlocks};

#[derive(Debug, Error)]
pub enum BpnnError {
    #[error("training matrix is empty")]
    EmptyTrainingSet,
    #[error("invalid config: {msg}")]
    BadConfig { msg: String },
    #[error("feature width {got} does not match model input width {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Hyper-parameters, all overridable via the `[bpnn]` config section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpnnConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Fraction of training rows (the most recent ones) held out for the
    /// early-stopping accuracy measurement.
    pub validation_fraction: f64,
    /// Sigmoid outputs at or above this value predict up.
    pub threshold: f64,
}

impl Default for BpnnConfig {
    fn default() -> Self {
        BpnnConfig {
            hidden: 50,
            learning_rate: 0.05,
            momentum: 0.9,
            epochs: 500,
            batch_size: 32,
            validation_fraction: 0.15,
            threshold: 0.5,
        }
    }
}

impl BpnnConfig {
    pub fn validate(&self) -> Result<(), BpnnError> {
        let bad = |msg: String| Err(BpnnError::BadConfig { msg });
        if self.hidden == 0 {
            return bad("hidden must be positive".to_string());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0,1), got {}", self.momentum));
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".to_string());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".to_string());
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!(
                "validation_fraction must lie in [0,1), got {}",
                self.validation_fraction
            ));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad(format!("threshold must lie in [0,1], got {}", self.threshold));
        }
        Ok(())
    }
}

/// Facts recorded during training, for reports and invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpnnTrainReport {
    pub n_train: usize,
    pub n_validation: usize,
    /// Validation accuracy of the snapshot that was kept.
    pub best_validation_accuracy: Option<f64>,
    /// Validation accuracy of the final-epoch parameters.
    pub final_validation_accuracy: Option<f64>,
    /// Epoch whose parameters were kept (0 = the initial weights).
    pub best_epoch: usize,
    /// True when all training labels share one class.
    pub degenerate_labels: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpnnModel {
    pub net: Network,
    pub threshold: f64,
    pub report: BpnnTrainReport,
}

/// ±1 labels mapped to cross-entropy targets {0, 1}.
fn targets_from_labels(labels: &[DirectionLabel]) -> Vec<f64> {
    labels
        .iter()
        .map(|l| match l {
            DirectionLabel::Up => 1.0,
            DirectionLabel::Down => 0.0,
        })
        .collect()
}

fn accuracy(net: &Network, threshold: f64, rows: &[&[f64]], targets: &[f64]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let mut hits = 0usize;
    for (row, &t) in rows.iter().zip(targets) {
        let out = net.predict(row).expect("shape checked at entry")[0];
        let predicted_up = out >= threshold;
        if predicted_up == (t == 1.0) {
            hits += 1;
        }
    }
    hits as f64 / rows.len() as f64
}

/// Train on `features` (time-ordered); the last `validation_fraction` of
/// rows form the validation set used only to pick the best snapshot.
pub fn train(
    features: &FeatureMatrix,
    config: &BpnnConfig,
    seed: u64,
) -> Result<BpnnModel, BpnnError> {
    config.validate()?;
    if features.is_empty() {
        return Err(BpnnError::EmptyTrainingSet);
    }

    let n = features.n_rows();
    let n_val = ((n as f64) * config.validation_fraction).round() as usize;
    let n_val = n_val.min(n - 1);
    let n_fit = n - n_val;

    let rows: Vec<&[f64]> = (0..n).map(|i| features.row(i)).collect();
    let targets = targets_from_labels(features.labels());
    let (fit_rows, val_rows) = rows.split_at(n_fit);
    let (fit_targets, val_targets) = targets.split_at(n_fit);

    let degenerate = fit_targets.windows(2).all(|w| w[0] == w[1]);
    if degenerate {
        log::warn!("bpnn: training window has a single direction class; the model will be constant");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::init_uniform(
        &[features.n_cols(), config.hidden, 1],
        &[Activation::Sigmoid, Activation::Sigmoid],
        &mut rng,
    )?;
    let mut velocity = ParamBlocks::zeros_like(&net);

    let eval = |net: &Network| -> Option<f64> {
        if val_rows.is_empty() {
            None
        } else {
            Some(accuracy(net, config.threshold, val_rows, val_targets))
        }
    };

    // The untouched initial weights participate in the snapshot contest, so
    // training can never end worse than it started (on validation data).
    let mut best_net = net.clone();
    let mut best_epoch = 0usize;
    let mut best_val = eval(&net);

    let mut order: Vec<usize> = (0..n_fit).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grads = ParamBlocks::zeros_like(&net);
            for &i in batch {
                let cache = net.forward(fit_rows[i])?;
                let loss_grad =
                    LossKind::BinaryCrossEntropy.grad(cache.output(), &targets[i..=i]);
                let g = net.backward(&cache, &loss_grad)?;
                grads.add(&g);
            }
            grads.scale(1.0 / batch.len() as f64);
            sgd_momentum_step(
                &mut net,
                &grads,
                &mut velocity,
                config.learning_rate,
                config.momentum,
            );
        }
        if let Some(acc) = eval(&net) {
            if best_val.map_or(true, |b| acc > b) {
                best_val = Some(acc);
                best_net = net.clone();
                best_epoch = epoch;
            }
        }
    }

    let final_val = eval(&net);
    let kept = if n_val > 0 { best_net } else { net };
    let report = BpnnTrainReport {
        n_train: n_fit,
        n_validation: n_val,
        best_validation_accuracy: best_val,
        final_validation_accuracy: final_val,
        best_epoch: if n_val > 0 { best_epoch } else { config.epochs },
        degenerate_labels: degenerate,
    };
    debug_assert!(kept.is_finite());
    Ok(BpnnModel {
        net: kept,
        threshold: config.threshold,
        report,
    })
}

/// Raw sigmoid outputs, one per row.
pub fn predict_scores(model: &BpnnModel, features: &FeatureMatrix) -> Result<Vec<f64>, BpnnError> {
    if features.n_cols() != model.net.in_dim() {
        return Err(BpnnError::WidthMismatch {
            expected: model.net.in_dim(),
            got: features.n_cols(),
        });
    }
    let mut out = Vec::with_capacity(features.n_rows());
    for i in 0..features.n_rows() {
        out.push(model.net.predict(features.row(i))?[0]);
    }
    Ok(out)
}

/// Thresholded direction predictions: score ≥ threshold ⇒ up.
pub fn predict(
    model: &BpnnModel,
    features: &FeatureMatrix,
) -> Result<Vec<DirectionLabel>, BpnnError> {
    Ok(predict_scores(model, features)?
        .into_iter()
        .map(|s| {
            if s >= model.threshold {
                DirectionLabel::Up
            } else {
                DirectionLabel::Down
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMatrix;
    use crate::test_support::date;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn matrix(rows: Vec<Vec<f64>>, labels: Vec<DirectionLabel>) -> FeatureMatrix {
        let n_cols = rows[0].len();
        let columns = (0..n_cols).map(|j| format!("f{j}")).collect();
        let data = rows.into_iter().flatten().collect();
        let dates = (0..labels.len())
            .map(|i| date("2020-01-01") + chrono::Days::new(i as u64))
            .collect();
        FeatureMatrix::from_parts(columns, data, labels, dates).unwrap()
    }

    /// Two well-separated Gaussian blobs in the unit square.
    fn blobs(n_per_class: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..(2 * n_per_class) {
            let up = i % 2 == 0;
            let center = if up { 0.8 } else { 0.2 };
            rows.push(vec![
                center + noise.sample(&mut rng),
                center + noise.sample(&mut rng),
            ]);
            labels.push(if up {
                DirectionLabel::Up
            } else {
                DirectionLabel::Down
            });
        }
        matrix(rows, labels)
    }

    /// Noisy XOR: the classic not-linearly-separable fixture.
    fn xor(n_per_corner: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let corners = [
            ([0.0, 0.0], DirectionLabel::Down),
            ([1.0, 1.0], DirectionLabel::Down),
            ([0.0, 1.0], DirectionLabel::Up),
            ([1.0, 0.0], DirectionLabel::Up),
        ];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..(4 * n_per_corner) {
            let (c, l) = corners[i % 4];
            rows.push(vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]);
            labels.push(l);
        }
        matrix(rows, labels)
    }

    fn fast_config() -> BpnnConfig {
        BpnnConfig {
            hidden: 16,
            learning_rate: 0.5,
            momentum: 0.9,
            epochs: 150,
            batch_size: 16,
            validation_fraction: 0.15,
            threshold: 0.5,
        }
    }

    #[test]
    fn separable_blobs_reach_perfect_training_accuracy() {
        let m = blobs(50, 1);
        // No validation split: train to the last epoch rather than keeping an
        // early snapshot, so training accuracy is the quantity under test.
        let config = BpnnConfig {
            validation_fraction: 0.0,
            ..fast_config()
        };
        let model = train(&m, &config, 10).unwrap();
        let preds = predict(&model, &m).unwrap();
        let hits = preds
            .iter()
            .zip(m.labels())
            .filter(|(p, l)| p == l)
            .count();
        assert_eq!(hits, m.n_rows());
    }

    #[test]
    fn all_up_labels_give_a_constant_up_predictor() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let labels = vec![DirectionLabel::Up; 60];
        let m = matrix(rows, labels);
        let model = train(&m, &fast_config(), 3).unwrap();
        assert!(model.report.degenerate_labels);
        let preds = predict(&model, &m).unwrap();
        assert!(preds.iter().all(|p| *p == DirectionLabel::Up));
    }

    #[test]
    fn xor_is_learned_well_above_chance() {
        let train_set = xor(60, 21);
        let test_set = xor(25, 99);
        let mut config = fast_config();
        config.hidden = 50;
        config.epochs = 300;
        let model = train(&train_set, &config, 7).unwrap();
        let preds = predict(&model, &test_set).unwrap();
        let hits = preds
            .iter()
            .zip(test_set.labels())
            .filter(|(p, l)| p == l)
            .count();
        let acc = hits as f64 / test_set.n_rows() as f64;
        assert!(acc > 0.9, "xor test accuracy {acc}");
    }

    #[test]
    fn boundary_score_maps_to_up() {
        let m = blobs(10, 2);
        let mut model = train(&m, &fast_config(), 1).unwrap();
        model.threshold = 0.0; // every sigmoid output is ≥ 0
        let preds = predict(&model, &m).unwrap();
        assert!(preds.iter().all(|p| *p == DirectionLabel::Up));
    }

    #[test]
    fn prediction_is_pure() {
        let m = blobs(20, 3);
        let model = train(&m, &fast_config(), 8).unwrap();
        assert_eq!(predict(&model, &m).unwrap(), predict(&model, &m).unwrap());
    }

    #[test]
    fn predictions_match_independent_forward_threshold() {
        let m = blobs(20, 4);
        let model = train(&m, &fast_config(), 9).unwrap();
        let preds = predict(&model, &m).unwrap();
        for i in 0..m.n_rows() {
            // Re-derive the forward pass with nothing but slice arithmetic.
            let x = m.row(i);
            let l1 = &model.net.layers[0];
            let mut h = Vec::new();
            for r in 0..l1.out_dim() {
                let mut z = l1.b[r];
                for c in 0..l1.in_dim() {
                    z += l1.w.get(r, c) * x[c];
                }
                h.push(1.0 / (1.0 + (-z).exp()));
            }
            let l2 = &model.net.layers[1];
            let mut z = l2.b[0];
            for (c, hv) in h.iter().enumerate() {
                z += l2.w.get(0, c) * hv;
            }
            let score = 1.0 / (1.0 + (-z).exp());
            let expected = if score >= model.threshold {
                DirectionLabel::Up
            } else {
                DirectionLabel::Down
            };
            assert_eq!(preds[i], expected, "row {i}");
        }
    }

    #[test]
    fn early_stopping_never_reports_worse_than_final_epoch() {
        let m = blobs(40, 6);
        let model = train(&m, &fast_config(), 11).unwrap();
        let best = model.report.best_validation_accuracy.unwrap();
        let fin = model.report.final_validation_accuracy.unwrap();
        assert!(best >= fin, "best {best} < final {fin}");
    }

    #[test]
    fn training_is_deterministic_under_a_seed() {
        let m = blobs(30, 12);
        let a = train(&m, &fast_config(), 77).unwrap();
        let b = train(&m, &fast_config(), 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn row_order_changes_results_under_the_same_seed() {
        let m = blobs(30, 13);
        // Reverse the rows (same multiset of samples, different positions).
        let rows: Vec<Vec<f64>> = (0..m.n_rows()).rev().map(|i| m.row(i).to_vec()).collect();
        let labels: Vec<DirectionLabel> = m.labels().iter().rev().copied().collect();
        let reversed = matrix(rows, labels);
        let a = train(&m, &fast_config(), 77).unwrap();
        let b = train(&reversed, &fast_config(), 77).unwrap();
        assert_ne!(a.net, b.net);
    }

    #[test]
    fn scores_stay_strictly_inside_unit_interval() {
        let m = blobs(40, 14);
        let model = train(&m, &fast_config(), 15).unwrap();
        for s in predict_scores(&model, &m).unwrap() {
            assert!(s > 0.0 && s < 1.0, "score {s}");
        }
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let m = blobs(10, 16);
        let model = train(&m, &fast_config(), 17).unwrap();
        let wider = matrix(vec![vec![0.1, 0.2, 0.3]], vec![DirectionLabel::Up]);
        assert!(matches!(
            predict(&model, &wider),
            Err(BpnnError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let m = blobs(10, 18);
        let empty = m.slice_rows(0..0);
        assert!(matches!(
            train(&empty, &fast_config(), 1),
            Err(BpnnError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let m = blobs(10, 19);
        for mutate in [
            |c: &mut BpnnConfig| c.hidden = 0,
            |c: &mut BpnnConfig| c.learning_rate = -1.0,
            |c: &mut BpnnConfig| c.momentum = 1.0,
            |c: &mut BpnnConfig| c.epochs = 0,
            |c: &mut BpnnConfig| c.batch_size = 0,
            |c: &mut BpnnConfig| c.validation_fraction = 1.0,
            |c: &mut BpnnConfig| c.threshold = 1.5,
        ] {
            let mut config = fast_config();
            mutate(&mut config);
            assert!(matches!(
                train(&m, &config, 1),
                Err(BpnnError::BadConfig { .. })
            ));
        }
    }
}
