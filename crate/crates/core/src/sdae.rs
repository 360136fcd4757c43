//! Stacked denoising autoencoder classifier.
//!
//! Pipeline: greedy layer-wise unsupervised pretraining of tied-weight
//! denoising autoencoders (masking-to-zero corruption, reconstruction
//! cross-entropy), then a sigmoid head stacked on the deepest code and a
//! full supervised fine-tune with early stopping, exactly mirroring the
//! bpnn training discipline.
//!
//! Tied weights are structural: an autoencoder stores one weight matrix; the
//! decoder is its transpose plus a separate visible bias, so the tie cannot
//! drift no matter how updates are applied.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::market_data::DirectionLabel;
use crate::nn::losses::{cross_entropy_excess, LossKind};
use crate::nn::{sgd_momentum_step, Activation, DenseLayer, Matrix, Network, NnError, ParamBlocks, TrainConfig};

#[derive(Debug, Error)]
pub enum SdaeError {
    #[error("training matrix is empty")]
    EmptyTrainingSet,
    #[error("invalid config: {msg}")]
    BadConfig { msg: String },
    #[error("dimension mismatch: {msg}")]
    DimensionMismatch { msg: String },
    #[error("feature width {got} does not match model input width {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Deterministic seed derivation so each training phase gets an independent
/// stream from one base seed (SplitMix64 finalizer).
pub(crate) fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hyper-parameters, all overridable via the `[sdae]` config section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdaeConfig {
    /// Encoder widths after the input layer, e.g. `[64, 32, 16]`.
    pub hidden_sizes: Vec<usize>,
    /// Masking probability for denoising pretraining.
    pub corruption: f64,
    pub pretrain_epochs: usize,
    /// May be 0, which keeps the pretrained stack and freshly initialized
    /// head untouched.
    pub finetune_epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub threshold: f64,
}

impl Default for SdaeConfig {
    fn default() -> Self {
        SdaeConfig {
            hidden_sizes: vec![64, 32, 16],
            corruption: 0.3,
            pretrain_epochs: 200,
            finetune_epochs: 300,
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 32,
            validation_fraction: 0.15,
            threshold: 0.5,
        }
    }
}

impl SdaeConfig {
    pub fn validate(&self) -> Result<(), SdaeError> {
        let bad = |msg: String| Err(SdaeError::BadConfig { msg });
        if self.hidden_sizes.is_empty() {
            return bad("hidden_sizes must name at least one layer".to_string());
        }
        if self.hidden_sizes.iter().any(|&h| h == 0) {
            return bad("hidden_sizes entries must be positive".to_string());
        }
        if !(0.0..=1.0).contains(&self.corruption) {
            return bad(format!("corruption must lie in [0,1], got {}", self.corruption));
        }
        if self.pretrain_epochs == 0 {
            return bad("pretrain_epochs must be positive".to_string());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0,1), got {}", self.momentum));
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

/// One tied-weight denoising autoencoder. The decoder is `σ(Wᵀh + c)` where
/// `W` is the encoder weight matrix and `c` this struct's visible bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoisingAutoencoder {
    pub encoder: DenseLayer,
    pub decoder_bias: Vec<f64>,
    pub corruption: f64,
}

impl DenoisingAutoencoder {
    pub fn new<R: Rng>(visible: usize, hidden: usize, corruption: f64, rng: &mut R) -> Self {
        DenoisingAutoencoder {
            encoder: DenseLayer::init_uniform(visible, hidden, Activation::Sigmoid, rng),
            decoder_bias: vec![0.0; visible],
            corruption,
        }
    }

    pub fn visible_dim(&self) -> usize {
        self.encoder.in_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.encoder.out_dim()
    }

    /// Materialized decoder layer (transpose of the encoder weights); the
    /// tie holds by construction.
    pub fn decoder(&self) -> DenseLayer {
        let w = &self.encoder.w;
        let mut t = Matrix::zeros(w.cols(), w.rows());
        for r in 0..w.rows() {
            for c in 0..w.cols() {
                t.set(c, r, w.get(r, c));
            }
        }
        DenseLayer {
            w: t,
            b: self.decoder_bias.clone(),
            activation: Activation::Sigmoid,
        }
    }

    /// Hidden code of a clean input.
    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        let mut pre = self.encoder.w.matvec(x);
        for (z, b) in pre.iter_mut().zip(&self.encoder.b) {
            *z += b;
        }
        pre.into_iter().map(|z| Activation::Sigmoid.apply(z)).collect()
    }

    /// Reconstruction `σ(Wᵀ·encode(x) + c)`.
    pub fn reconstruct(&self, x: &[f64]) -> Vec<f64> {
        let h = self.encode(x);
        self.decode(&h)
    }

    fn decode(&self, h: &[f64]) -> Vec<f64> {
        let mut pre = self.encoder.w.matvec_transpose(h);
        for (z, c) in pre.iter_mut().zip(&self.decoder_bias) {
            *z += c;
        }
        pre.into_iter().map(|z| Activation::Sigmoid.apply(z)).collect()
    }
}

/// Masking corruption: each coordinate is zeroed independently with
/// probability `p`. The generator is always advanced once per coordinate so
/// downstream draws do not depend on `p`.
pub fn corrupt<R: Rng>(x: &[f64], p: f64, rng: &mut R) -> Vec<f64> {
    assert!((0.0..=1.0).contains(&p), "corruption probability {p}");
    x.iter()
        .map(|&v| if rng.random::<f64>() < p { 0.0 } else { v })
        .collect()
}

/// Per-sample reconstruction error used for traces: cross-entropy of the
/// reconstruction of a (fixed-mask) corrupted input against the clean input,
/// minus the cross-entropy floor (the value at perfect reconstruction), so a
/// perfect decoder scores 0. Same minimizer and gradients as the trained
/// cross-entropy objective.
fn masked_reconstruction_loss(
    da: &DenoisingAutoencoder,
    inputs: &[Vec<f64>],
    masks: &[Vec<bool>],
) -> f64 {
    let mut total = 0.0;
    for (x, mask) in inputs.iter().zip(masks) {
        let corrupted: Vec<f64> = x
            .iter()
            .zip(mask)
            .map(|(&v, &keep)| if keep { v } else { 0.0 })
            .collect();
        let z = da.reconstruct(&corrupted);
        total += cross_entropy_excess(&z, x);
    }
    total / inputs.len() as f64
}

/// Train one autoencoder in place.
///
/// Returns the loss trace: entry 0 is the pre-training reconstruction loss,
/// entry e the loss after epoch e, all measured with one fixed set of
/// corruption masks so the trace is comparable across epochs.
pub fn pretrain_layer(
    da: &mut DenoisingAutoencoder,
    inputs: &[Vec<f64>],
    config: &TrainConfig,
) -> Result<Vec<f64>, SdaeError> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(SdaeError::EmptyTrainingSet);
    }
    let visible = da.visible_dim();
    if let Some(bad) = inputs.iter().find(|r| r.len() != visible) {
        return Err(SdaeError::DimensionMismatch {
            msg: format!(
                "input row has {} components, autoencoder expects {visible}",
                bad.len()
            ),
        });
    }

    let n = inputs.len();
    let hidden = da.hidden_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // Fixed evaluation masks, drawn before any training.
    let mut mask_rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 0xE7A1));
    let masks: Vec<Vec<bool>> = (0..n)
        .map(|_| {
            (0..visible)
                .map(|_| mask_rng.random::<f64>() >= da.corruption)
                .collect()
        })
        .collect();

    let mut trace = Vec::with_capacity(config.epochs + 1);
    trace.push(masked_reconstruction_loss(da, inputs, &masks));

    // Momentum state: one velocity block for W, b (hidden) and c (visible).
    let mut vel_w = Matrix::zeros(hidden, visible);
    let mut vel_b = vec![0.0; hidden];
    let mut vel_c = vec![0.0; visible];

    let mut order: Vec<usize> = (0..n).collect();
    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut gw = Matrix::zeros(hidden, visible);
            let mut gb = vec![0.0; hidden];
            let mut gc = vec![0.0; visible];
            for &i in batch {
                let x = &inputs[i];
                let corrupted = corrupt(x, da.corruption, &mut rng);
                let h = da.encode(&corrupted);
                let z = da.decode(&h);
                // δ_z = z − x: BCE through the output sigmoid.
                let delta_z: Vec<f64> = z.iter().zip(x).map(|(&zi, &xi)| zi - xi).collect();
                // δ_h = (W δ_z) ⊙ h(1−h).
                let upstream = da.encoder.w.matvec(&delta_z);
                let delta_h: Vec<f64> = upstream
                    .iter()
                    .zip(&h)
                    .map(|(&u, &hv)| u * hv * (1.0 - hv))
                    .collect();
                // Tied weight gradient: encoder term + decoder term.
                gw.add_outer(&delta_h, &corrupted);
                gw.add_outer(&h, &delta_z);
                for (g, d) in gb.iter_mut().zip(&delta_h) {
                    *g += d;
                }
                for (g, d) in gc.iter_mut().zip(&delta_z) {
                    *g += d;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            gw.scale(scale);
            for g in &mut gb {
                *g *= scale;
            }
            for g in &mut gc {
                *g *= scale;
            }
            // v ← momentum·v − lr·g; θ ← θ + v, coordinate-wise.
            for r in 0..hidden {
                for c in 0..visible {
                    let v = config.momentum * vel_w.get(r, c) - config.learning_rate * gw.get(r, c);
                    vel_w.set(r, c, v);
                    da.encoder.w.set(r, c, da.encoder.w.get(r, c) + v);
                }
            }
            for i in 0..hidden {
                vel_b[i] = config.momentum * vel_b[i] - config.learning_rate * gb[i];
                da.encoder.b[i] += vel_b[i];
            }
            for i in 0..visible {
                vel_c[i] = config.momentum * vel_c[i] - config.learning_rate * gc[i];
                da.decoder_bias[i] += vel_c[i];
            }
        }
        trace.push(masked_reconstruction_loss(da, inputs, &masks));
    }
    Ok(trace)
}

/// Clean inputs pushed through the encoder only.
pub fn encode_dataset(da: &DenoisingAutoencoder, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    inputs.iter().map(|x| da.encode(x)).collect()
}

/// Greedy layer-wise pretraining: layer k trains on the encoded output of
/// layers 0..k. Labels never enter. Returns the trained autoencoders and
/// one loss trace per layer.
pub fn pretrain_stack(
    layer_sizes: &[usize],
    inputs: &[Vec<f64>],
    corruption: f64,
    base: &TrainConfig,
) -> Result<(Vec<DenoisingAutoencoder>, Vec<Vec<f64>>), SdaeError> {
    if layer_sizes.len() < 2 {
        return Err(SdaeError::BadConfig {
            msg: "layer_sizes must chain at least input → one hidden".to_string(),
        });
    }
    if inputs.first().map(|r| r.len()) != Some(layer_sizes[0]) {
        return Err(SdaeError::DimensionMismatch {
            msg: format!(
                "inputs have width {:?}, layer_sizes starts at {}",
                inputs.first().map(|r| r.len()),
                layer_sizes[0]
            ),
        });
    }
    let mut stack = Vec::with_capacity(layer_sizes.len() - 1);
    let mut traces = Vec::with_capacity(layer_sizes.len() - 1);
    let mut current = inputs.to_vec();
    for (k, pair) in layer_sizes.windows(2).enumerate() {
        let layer_seed = mix_seed(base.seed, k as u64);
        let mut init_rng = ChaCha8Rng::seed_from_u64(layer_seed);
        let mut da = DenoisingAutoencoder::new(pair[0], pair[1], corruption, &mut init_rng);
        let layer_config = TrainConfig {
            seed: layer_seed,
            ..base.clone()
        };
        let trace = pretrain_layer(&mut da, &current, &layer_config)?;
        current = encode_dataset(&da, &current);
        stack.push(da);
        traces.push(trace);
    }
    Ok((stack, traces))
}

/// Facts recorded during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdaeTrainReport {
    pub n_train: usize,
    pub n_validation: usize,
    pub best_validation_accuracy: Option<f64>,
    pub final_validation_accuracy: Option<f64>,
    pub best_epoch: usize,
    pub degenerate_labels: bool,
    /// One reconstruction-loss trace per pretrained layer; entry 0 of each
    /// is the pre-training loss.
    pub pretrain_traces: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdaeModel {
    /// Input width followed by every hidden width.
    pub layer_sizes: Vec<usize>,
    /// Encoder stack plus the supervised head, as one network.
    pub net: Network,
    pub threshold: f64,
    pub report: SdaeTrainReport,
}

fn accuracy(net: &Network, threshold: f64, rows: &[&[f64]], targets: &[f64]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let mut hits = 0usize;
    for (row, &t) in rows.iter().zip(targets) {
        let out = net.predict(row).expect("shape checked at entry")[0];
        if (out >= threshold) == (t == 1.0) {
            hits += 1;
        }
    }
    hits as f64 / rows.len() as f64
}

/// Steps 4–5: stack a fresh sigmoid head on the deepest code and fine-tune
/// everything with early stopping on the validation tail.
pub fn finetune(
    stack: Vec<DenoisingAutoencoder>,
    features: &FeatureMatrix,
    config: &SdaeConfig,
    seed: u64,
) -> Result<SdaeModel, SdaeError> {
    config.validate()?;
    if features.is_empty() {
        return Err(SdaeError::EmptyTrainingSet);
    }
    let deepest = stack
        .last()
        .map(|da| da.hidden_dim())
        .ok_or_else(|| SdaeError::BadConfig {
            msg: "finetune needs a non-empty stack".to_string(),
        })?;

    let mut layer_sizes = vec![stack[0].visible_dim()];
    layer_sizes.extend(stack.iter().map(|da| da.hidden_dim()));

    let head_seed = mix_seed(seed, 0xF1EE);
    let mut rng = ChaCha8Rng::seed_from_u64(head_seed);
    let head = DenseLayer::init_uniform(deepest, 1, Activation::Sigmoid, &mut rng);
    let mut net = Network {
        layers: stack
            .into_iter()
            .map(|da| da.encoder)
            .chain(std::iter::once(head))
            .collect(),
    };

    let n = features.n_rows();
    let n_val = (((n as f64) * config.validation_fraction).round() as usize).min(n - 1);
    let n_fit = n - n_val;
    let rows: Vec<&[f64]> = (0..n).map(|i| features.row(i)).collect();
    let targets: Vec<f64> = features
        .labels()
        .iter()
        .map(|l| if *l == DirectionLabel::Up { 1.0 } else { 0.0 })
        .collect();
    let (fit_rows, val_rows) = rows.split_at(n_fit);
    let (fit_targets, val_targets) = targets.split_at(n_fit);

    let degenerate = fit_targets.windows(2).all(|w| w[0] == w[1]);
    if degenerate {
        log::warn!("sdae: training window has a single direction class; the model will be constant");
    }

    let eval = |net: &Network| -> Option<f64> {
        if val_rows.is_empty() {
            None
        } else {
            Some(accuracy(net, config.threshold, val_rows, val_targets))
        }
    };

    let mut best_net = net.clone();
    let mut best_epoch = 0usize;
    let mut best_val = eval(&net);
    let mut velocity = ParamBlocks::zeros_like(&net);
    let mut order: Vec<usize> = (0..n_fit).collect();

    for epoch in 1..=config.finetune_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grads = ParamBlocks::zeros_like(&net);
            for &i in batch {
                let cache = net.forward(fit_rows[i])?;
                let loss_grad =
                    LossKind::BinaryCrossEntropy.grad(cache.output(), &fit_targets[i..=i]);
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
    debug_assert!(kept.is_finite());
    Ok(SdaeModel {
        layer_sizes,
        net: kept,
        threshold: config.threshold,
        report: SdaeTrainReport {
            n_train: n_fit,
            n_validation: n_val,
            best_validation_accuracy: best_val,
            final_validation_accuracy: final_val,
            best_epoch: if n_val > 0 { best_epoch } else { config.finetune_epochs },
            degenerate_labels: degenerate,
            pretrain_traces: Vec::new(),
        },
    })
}

/// Full recipe: pretrain on the non-validation rows (unsupervised), then
/// fine-tune with the supervised head.
pub fn train(
    features: &FeatureMatrix,
    config: &SdaeConfig,
    seed: u64,
) -> Result<SdaeModel, SdaeError> {
    config.validate()?;
    if features.is_empty() {
        return Err(SdaeError::EmptyTrainingSet);
    }
    let n = features.n_rows();
    let n_val = (((n as f64) * config.validation_fraction).round() as usize).min(n - 1);
    let n_fit = n - n_val;
    let pretrain_inputs: Vec<Vec<f64>> = (0..n_fit).map(|i| features.row(i).to_vec()).collect();

    let mut layer_sizes = vec![features.n_cols()];
    layer_sizes.extend(&config.hidden_sizes);
    let pretrain_config = TrainConfig {
        learning_rate: config.learning_rate,
        momentum: config.momentum,
        epochs: config.pretrain_epochs,
        batch_size: config.batch_size,
        seed: mix_seed(seed, 0x9E7A),
    };
    let (stack, traces) = pretrain_stack(
        &layer_sizes,
        &pretrain_inputs,
        config.corruption,
        &pretrain_config,
    )?;
    let mut model = finetune(stack, features, config, seed)?;
    model.report.pretrain_traces = traces;
    Ok(model)
}

/// Raw sigmoid outputs, one per row.
pub fn predict_scores(model: &SdaeModel, features: &FeatureMatrix) -> Result<Vec<f64>, SdaeError> {
    if features.n_cols() != model.net.in_dim() {
        return Err(SdaeError::WidthMismatch {
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
    model: &SdaeModel,
    features: &FeatureMatrix,
) -> Result<Vec<DirectionLabel>, SdaeError> {
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
