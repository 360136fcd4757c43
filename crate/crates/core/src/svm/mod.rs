//! Gaussian-kernel soft-margin SVM trained in the dual by a two-variable
//! working-set method, with median-distance σ² grid and time-ordered
//! cross-validated (σ², C) selection.
//!
//! The kernel is `K(x,u) = exp(−‖x−u‖²/σ²)` — note the plain σ² in the
//! denominator, no factor 2. The feature map is never materialized; the
//! model exists purely through its support-vector expansion
//! `f(x) = Σ αᵢyᵢK(xᵢ,x) + b`.

mod select;
mod smo;

pub use select::{model_select, SelectionOutcome, SvmSearchGrid};
pub use smo::SmoSolution;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::market_data::DirectionLabel;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("invalid parameter: {msg}")]
    BadParam { msg: String },
    #[error("training data contains a single class; a separating decision needs both")]
    SingleClass,
    #[error("all feature rows are identical (median distance 0); fall back to sigma2 = 1")]
    ZeroMedianDistance,
    #[error("working-set method did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("feature width {got} does not match model width {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("empty input: {msg}")]
    EmptyInput { msg: String },
}

/// Solver and grid-search knobs (`[svm]` config section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Soft-margin candidates for the grid search.
    pub c_candidates: Vec<f64>,
    /// σ² candidates as multiples of the median distance m_x.
    pub sigma2_multipliers: Vec<f64>,
    /// Contiguous time-ordered cross-validation folds.
    pub folds: usize,
    /// Working-set stopping tolerance (also the KKT tolerance).
    pub tol: f64,
    /// Iteration cap = this factor × number of training rows.
    pub iter_cap_factor: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c_candidates: vec![0.1, 1.0, 10.0, 100.0],
            // Written as literals (not 0.2·k) so a config file stating the
            // same decimals reproduces the default bit for bit.
            sigma2_multipliers: vec![0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0],
            folds: 5,
            tol: 1e-3,
            iter_cap_factor: 100,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        let bad = |msg: String| Err(SvmError::BadParam { msg });
        if self.c_candidates.is_empty() || self.sigma2_multipliers.is_empty() {
            return bad("grid candidates must be non-empty".to_string());
        }
        if self.c_candidates.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
            return bad("every C candidate must be positive".to_string());
        }
        if self
            .sigma2_multipliers
            .iter()
            .any(|&m| !(m.is_finite() && m > 0.0))
        {
            return bad("every sigma2 multiplier must be positive".to_string());
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.iter_cap_factor == 0 {
            return bad("iter_cap_factor must be positive".to_string());
        }
        Ok(())
    }
}

/// Trained classifier: the support-vector expansion of the dual solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// Training rows with α > 0.
    pub support_vectors: Vec<Vec<f64>>,
    /// Dual coefficients, 0 < αᵢ ≤ C.
    pub alphas: Vec<f64>,
    /// Labels yᵢ ∈ {−1, +1} of the support vectors.
    pub labels: Vec<f64>,
    pub bias: f64,
    pub sigma2: f64,
    pub c: f64,
}

impl SvmModel {
    pub fn width(&self) -> usize {
        self.support_vectors.first().map(|v| v.len()).unwrap_or(0)
    }

    /// `f(x) = Σ αᵢyᵢK(xᵢ,x) + b`.
    pub fn decision_function(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.width() {
            return Err(SvmError::WidthMismatch {
                expected: self.width(),
                got: x.len(),
            });
        }
        let mut f = self.bias;
        for ((sv, &alpha), &y) in self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .zip(&self.labels)
        {
            f += alpha * y * kernel_unchecked(sv, x, self.sigma2);
        }
        Ok(f)
    }
}

pub(crate) fn squared_distance(x: &[f64], u: &[f64]) -> f64 {
    x.iter()
        .zip(u)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
}

pub(crate) fn kernel_unchecked(x: &[f64], u: &[f64], sigma2: f64) -> f64 {
    (-squared_distance(x, u) / sigma2).exp()
}

/// Gaussian kernel `exp(−‖x−u‖²/σ²)`.
pub fn gaussian_kernel(x: &[f64], u: &[f64], sigma2: f64) -> Result<f64, SvmError> {
    if x.len() != u.len() {
        return Err(SvmError::WidthMismatch {
            expected: x.len(),
            got: u.len(),
        });
    }
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(SvmError::BadParam {
            msg: format!("sigma2 must be positive, got {sigma2}"),
        });
    }
    Ok(kernel_unchecked(x, u, sigma2))
}

/// Median over rows of the Euclidean distance to the column mean; ties on
/// an even count average the two central order statistics. Zero (all rows
/// identical) is an error so the caller can apply its σ² = 1 fallback.
pub fn median_sigma(features: &FeatureMatrix) -> Result<f64, SvmError> {
    if features.is_empty() {
        return Err(SvmError::EmptyInput {
            msg: "median distance needs at least one row".to_string(),
        });
    }
    let n = features.n_rows();
    let c = features.n_cols();
    let mut mean = vec![0.0; c];
    for row in features.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut distances: Vec<f64> = features
        .rows()
        .map(|row| squared_distance(row, &mean).sqrt())
        .collect();
    distances.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let m_x = if n % 2 == 1 {
        distances[n / 2]
    } else {
        (distances[n / 2 - 1] + distances[n / 2]) / 2.0
    };
    if m_x == 0.0 {
        return Err(SvmError::ZeroMedianDistance);
    }
    Ok(m_x)
}

/// Solve the soft-margin dual on raw rows with ±1 labels, returning the
/// full multiplier vector (zeros included) and the bias. This is the raw
/// optimizer output; [`smo_train`] wraps it into a usable model.
pub fn solve_dual(
    x: &[Vec<f64>],
    y: &[f64],
    c: f64,
    sigma2: f64,
    tol: f64,
    iter_cap_factor: usize,
) -> Result<SmoSolution, SvmError> {
    if x.is_empty() {
        return Err(SvmError::EmptyInput {
            msg: "no training rows".to_string(),
        });
    }
    if x.len() != y.len() {
        return Err(SvmError::BadParam {
            msg: format!("{} rows vs {} labels", x.len(), y.len()),
        });
    }
    if x.len() < 2 {
        return Err(SvmError::BadParam {
            msg: "need at least two training rows".to_string(),
        });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(SvmError::BadParam {
            msg: "labels must be exactly +1 or -1".to_string(),
        });
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(SvmError::BadParam {
            msg: format!("C must be positive, got {c}"),
        });
    }
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(SvmError::BadParam {
            msg: format!("sigma2 must be positive, got {sigma2}"),
        });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(SvmError::BadParam {
            msg: format!("tol must be positive, got {tol}"),
        });
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(SvmError::SingleClass);
    }
    let width = x[0].len();
    if let Some(bad) = x.iter().find(|r| r.len() != width) {
        return Err(SvmError::WidthMismatch {
            expected: width,
            got: bad.len(),
        });
    }

    let n = x.len();
    let kernel = kernel_matrix(x, sigma2);
    smo::solve(&kernel, n, y, c, tol, iter_cap_factor.saturating_mul(n))
}

/// Train one SVM on raw rows with ±1 labels.
pub fn smo_train(
    x: &[Vec<f64>],
    y: &[f64],
    c: f64,
    sigma2: f64,
    tol: f64,
    iter_cap_factor: usize,
) -> Result<SvmModel, SvmError> {
    let solution = solve_dual(x, y, c, sigma2, tol, iter_cap_factor)?;
    Ok(assemble_model(x, y, c, sigma2, &solution))
}

/// Train using a feature matrix's rows and direction labels.
pub fn train_on_features(
    features: &FeatureMatrix,
    c: f64,
    sigma2: f64,
    config: &SvmConfig,
) -> Result<SvmModel, SvmError> {
    let rows: Vec<Vec<f64>> = (0..features.n_rows())
        .map(|i| features.row(i).to_vec())
        .collect();
    smo_train(
        &rows,
        &features.labels_pm1(),
        c,
        sigma2,
        config.tol,
        config.iter_cap_factor,
    )
}

/// Dense n×n matrix of pairwise squared distances.
pub(crate) fn squared_distance_matrix(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = squared_distance(&x[i], &x[j]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

pub(crate) fn kernel_from_squared(sq: &[f64], sigma2: f64) -> Vec<f64> {
    sq.iter().map(|&d| (-d / sigma2).exp()).collect()
}

pub(crate) fn kernel_matrix(x: &[Vec<f64>], sigma2: f64) -> Vec<f64> {
    kernel_from_squared(&squared_distance_matrix(x), sigma2)
}

pub(crate) fn assemble_model(
    x: &[Vec<f64>],
    y: &[f64],
    c: f64,
    sigma2: f64,
    solution: &SmoSolution,
) -> SvmModel {
    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    let mut labels = Vec::new();
    for (i, &a) in solution.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(x[i].clone());
            alphas.push(a);
            labels.push(y[i]);
        }
    }
    SvmModel {
        support_vectors,
        alphas,
        labels,
        bias: solution.b,
        sigma2,
        c,
    }
}

/// Sign predictions; `f(x) = 0` maps to up.
pub fn predict(
    model: &SvmModel,
    features: &FeatureMatrix,
) -> Result<Vec<DirectionLabel>, SvmError> {
    if features.n_cols() != model.width() {
        return Err(SvmError::WidthMismatch {
            expected: model.width(),
            got: features.n_cols(),
        });
    }
    (0..features.n_rows())
        .map(|i| {
            model
                .decision_function(features.row(i))
                .map(DirectionLabel::from_decision)
        })
        .collect()
}
