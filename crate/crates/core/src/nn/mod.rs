//! Minimal dense-network substrate shared by the classifiers: row-major
//! matrices, sigmoid/identity layers, exact backpropagation, SGD with
//! momentum, and a finite-difference gradient checker.
//!
//! Everything is `f64`, seeded, and single-threaded per network so training
//! trajectories are bit-reproducible.

pub mod gradcheck;
pub mod losses;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {msg}")]
    ShapeMismatch { msg: String },
    #[error("invalid training config: {msg}")]
    BadConfig { msg: String },
    #[error("cache does not match network: {msg}")]
    StaleCache { msg: String },
}

fn shape_err<T>(msg: impl Into<String>) -> Result<T, NnError> {
    Err(NnError::ShapeMismatch { msg: msg.into() })
}

/// Row-major dense matrix of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix, NnError> {
        if data.len() != rows * cols {
            return shape_err(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return shape_err("non-finite matrix entry");
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// `self * x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            out.push(acc);
        }
        out
    }

    /// `self^T * d` for a column vector `d`.
    pub fn matvec_transpose(&self, d: &[f64]) -> Vec<f64> {
        debug_assert_eq!(d.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let dr = d[r];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * dr;
            }
        }
        out
    }

    /// `self += d ⊗ x` (rank-one accumulation used for weight gradients).
    pub fn add_outer(&mut self, d: &[f64], x: &[f64]) {
        debug_assert_eq!(d.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for r in 0..self.rows {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            let dr = d[r];
            for (w, xi) in row.iter_mut().zip(x) {
                *w += dr * xi;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for v in &mut self.data {
            *v *= k;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation *output* `y`.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

/// One fully connected layer: `y = act(W x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub w: Matrix,
    pub b: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    /// Fan-scaled uniform initialization: weights from
    /// ±√(6/(fan_in + fan_out)), biases zero.
    pub fn init_uniform<R: Rng>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> DenseLayer {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let mut w = Matrix::zeros(out_dim, in_dim);
        for r in 0..out_dim {
            for c in 0..in_dim {
                w.set(r, c, rng.random_range(-bound..bound));
            }
        }
        DenseLayer {
            w,
            b: vec![0.0; out_dim],
            activation,
        }
    }

    fn forward_one(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut pre = self.w.matvec(x);
        for (z, bias) in pre.iter_mut().zip(&self.b) {
            *z += bias;
        }
        let post = pre.iter().map(|&z| self.activation.apply(z)).collect();
        (pre, post)
    }
}

/// A stack of dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<DenseLayer>,
}

/// Activations recorded by `forward` for one input, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    /// (pre-activation, post-activation) per layer.
    per_layer: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.per_layer.last().expect("non-empty network").1
    }
}

/// Same shape as a network's parameters; used for both gradients and
/// momentum velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBlocks {
    pub blocks: Vec<(Matrix, Vec<f64>)>,
}

impl ParamBlocks {
    pub fn zeros_like(net: &Network) -> ParamBlocks {
        ParamBlocks {
            blocks: net
                .layers
                .iter()
                .map(|l| (Matrix::zeros(l.out_dim(), l.in_dim()), vec![0.0; l.out_dim()]))
                .collect(),
        }
    }

    pub fn scale(&mut self, k: f64) {
        for (w, b) in &mut self.blocks {
            w.scale(k);
            for v in b {
                *v *= k;
            }
        }
    }

    pub fn add(&mut self, other: &ParamBlocks) {
        for ((w, b), (ow, ob)) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, y) in w.data.iter_mut().zip(&ow.data) {
                *x += y;
            }
            for (x, y) in b.iter_mut().zip(ob) {
                *x += y;
            }
        }
    }
}

impl Network {
    /// Build a network from layer sizes, e.g. `[28, 50, 1]`, one activation
    /// per weight layer.
    pub fn init_uniform<R: Rng>(
        dims: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Network, NnError> {
        if dims.len() < 2 {
            return shape_err("need at least an input and an output dimension");
        }
        if activations.len() != dims.len() - 1 {
            return shape_err(format!(
                "{} activations for {} layers",
                activations.len(),
                dims.len() - 1
            ));
        }
        if dims.iter().any(|&d| d == 0) {
            return shape_err("zero-sized layer");
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(pair, &act)| DenseLayer::init_uniform(pair[0], pair[1], act, rng))
            .collect();
        Ok(Network { layers })
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map(|l| l.in_dim()).unwrap_or(0)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map(|l| l.out_dim()).unwrap_or(0)
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.is_finite() && l.b.iter().all(|v| v.is_finite()))
    }

    /// Forward pass caching every layer's pre- and post-activation.
    pub fn forward(&self, x: &[f64]) -> Result<ForwardCache, NnError> {
        if x.len() != self.in_dim() {
            return shape_err(format!(
                "input has {} components, network expects {}",
                x.len(),
                self.in_dim()
            ));
        }
        let mut per_layer = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for layer in &self.layers {
            let (pre, post) = layer.forward_one(&current);
            current = post.clone();
            per_layer.push((pre, post));
        }
        Ok(ForwardCache {
            input: x.to_vec(),
            per_layer,
        })
    }

    /// Output only (no cache kept).
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(self.forward(x)?.output().to_vec())
    }

    /// Exact gradients of a scalar loss given `dL/d(output)`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        loss_grad: &[f64],
    ) -> Result<ParamBlocks, NnError> {
        if cache.per_layer.len() != self.layers.len() {
            return Err(NnError::StaleCache {
                msg: format!(
                    "cache has {} layers, network has {}",
                    cache.per_layer.len(),
                    self.layers.len()
                ),
            });
        }
        if cache.input.len() != self.in_dim() {
            return Err(NnError::StaleCache {
                msg: "cached input dimension differs from network input".to_string(),
            });
        }
        for (i, (layer, (_, post))) in self.layers.iter().zip(&cache.per_layer).enumerate() {
            if post.len() != layer.out_dim() {
                return Err(NnError::StaleCache {
                    msg: format!("cached layer {i} output dimension differs"),
                });
            }
        }
        if loss_grad.len() != self.out_dim() {
            return shape_err(format!(
                "loss gradient has {} components, output has {}",
                loss_grad.len(),
                self.out_dim()
            ));
        }

        let mut grads = ParamBlocks::zeros_like(self);
        // delta = dL/d(pre-activation) of the current layer.
        let mut delta: Vec<f64> = loss_grad
            .iter()
            .zip(&cache.per_layer.last().unwrap().1)
            .map(|(&g, &y)| g * self.layers.last().unwrap().activation.derivative_from_output(y))
            .collect();

        for l in (0..self.layers.len()).rev() {
            let layer_input: &[f64] = if l == 0 {
                &cache.input
            } else {
                &cache.per_layer[l - 1].1
            };
            grads.blocks[l].0.add_outer(&delta, layer_input);
            for (g, d) in grads.blocks[l].1.iter_mut().zip(&delta) {
                *g += d;
            }
            if l > 0 {
                let upstream = self.layers[l].w.matvec_transpose(&delta);
                let prev_post = &cache.per_layer[l - 1].1;
                let act = self.layers[l - 1].activation;
                delta = upstream
                    .iter()
                    .zip(prev_post)
                    .map(|(&u, &y)| u * act.derivative_from_output(y))
                    .collect();
            }
        }
        Ok(grads)
    }
}

/// Hyper-parameters for gradient-descent training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(NnError::BadConfig {
                msg: format!("learning_rate must be positive, got {}", self.learning_rate),
            });
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(NnError::BadConfig {
                msg: format!("momentum must lie in [0,1), got {}", self.momentum),
            });
        }
        if self.epochs == 0 {
            return Err(NnError::BadConfig {
                msg: "epochs must be positive".to_string(),
            });
        }
        if self.batch_size == 0 {
            return Err(NnError::BadConfig {
                msg: "batch_size must be positive".to_string(),
            });
        }
        Ok(())
    }
}

/// One momentum step over every parameter:
/// `v ← momentum·v − lr·g` then `θ ← θ + v`.
pub fn sgd_momentum_step(
    net: &mut Network,
    grads: &ParamBlocks,
    velocity: &mut ParamBlocks,
    learning_rate: f64,
    momentum: f64,
) {
    for (l, layer) in net.layers.iter_mut().enumerate() {
        let (gw, gb) = &grads.blocks[l];
        let (vw, vb) = &mut velocity.blocks[l];
        for i in 0..vw.data.len() {
            vw.data[i] = momentum * vw.data[i] - learning_rate * gw.data[i];
            layer.w.data[i] += vw.data[i];
        }
        for i in 0..vb.len() {
            vb[i] = momentum * vb[i] - learning_rate * gb[i];
            layer.b[i] += vb[i];
        }
    }
}
