//! (σ², C) selection by cross-validated accuracy over contiguous,
//! time-ordered folds. Splitting a time series randomly would let a model
//! peek at rows interleaved with its validation span, so fold k is simply
//! the k-th block of rows; training data keeps its original order.

use serde::{Deserialize, Serialize};

use super::{
    assemble_model, kernel_from_squared, median_sigma, smo, squared_distance_matrix, SvmConfig,
    SvmError,
};
use crate::features::FeatureMatrix;

/// Concrete candidate values after resolving the data-driven σ² scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmSearchGrid {
    pub sigma2_values: Vec<f64>,
    pub c_values: Vec<f64>,
    pub folds: usize,
}

impl SvmSearchGrid {
    /// Scale the configured multipliers by the median distance of the
    /// training rows. Identical rows make that distance zero, in which
    /// case the documented fallback σ² = 1 applies (flagged in the return).
    pub fn from_features(features: &FeatureMatrix, config: &SvmConfig) -> Result<(Self, bool), SvmError> {
        config.validate()?;
        let (scale, fallback) = match median_sigma(features) {
            Ok(m) => (m, false),
            Err(SvmError::ZeroMedianDistance) => {
                log::warn!("all feature rows identical; using sigma2 scale 1.0");
                (1.0, true)
            }
            Err(e) => return Err(e),
        };
        Ok((
            SvmSearchGrid {
                sigma2_values: config.sigma2_multipliers.iter().map(|m| m * scale).collect(),
                c_values: config.c_candidates.clone(),
                folds: config.folds,
            },
            fallback,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub sigma2: f64,
    pub c: f64,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub sigma2: f64,
    pub c: f64,
    pub mean_accuracy: f64,
    /// Folds whose held-out block was single-class or whose training split
    /// could not produce a model; their scores still count toward means.
    pub degenerate_folds: usize,
    /// Every evaluated cell, in grid order, for diagnostics.
    pub evaluated: Vec<GridCell>,
}

struct FoldSplit {
    train_rows: Vec<Vec<f64>>,
    train_y: Vec<f64>,
    test_rows: Vec<Vec<f64>>,
    test_y: Vec<f64>,
}

/// Exhaustive search over the grid; ties prefer the smaller C, then the
/// smaller σ² (stronger regularization and the smoother kernel win).
pub fn model_select(
    features: &FeatureMatrix,
    grid: &SvmSearchGrid,
    tol: f64,
    iter_cap_factor: usize,
) -> Result<SelectionOutcome, SvmError> {
    if grid.sigma2_values.is_empty() || grid.c_values.is_empty() {
        return Err(SvmError::BadParam {
            msg: "selection grid must be non-empty".to_string(),
        });
    }
    if grid.folds < 2 {
        return Err(SvmError::BadParam {
            msg: format!("folds must be at least 2, got {}", grid.folds),
        });
    }
    if features.n_rows() < grid.folds {
        return Err(SvmError::BadParam {
            msg: format!(
                "{} rows cannot fill {} folds",
                features.n_rows(),
                grid.folds
            ),
        });
    }

    let splits = build_splits(features, grid.folds);
    // The heavy geometry work is shared: one squared-distance matrix per
    // fold, one kernel per (fold, σ²), reused across every C.
    let distance_matrices: Vec<Vec<f64>> = splits
        .iter()
        .map(|s| squared_distance_matrix(&s.train_rows))
        .collect();

    let mut degenerate = vec![false; splits.len()];
    let mut evaluated = Vec::with_capacity(grid.sigma2_values.len() * grid.c_values.len());
    let mut best: Option<GridCell> = None;

    for &sigma2 in &grid.sigma2_values {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(SvmError::BadParam {
                msg: format!("grid sigma2 must be positive, got {sigma2}"),
            });
        }
        let kernels: Vec<Vec<f64>> = distance_matrices
            .iter()
            .map(|d| kernel_from_squared(d, sigma2))
            .collect();
        for &c in &grid.c_values {
            if !(c.is_finite() && c > 0.0) {
                return Err(SvmError::BadParam {
                    msg: format!("grid C must be positive, got {c}"),
                });
            }
            let mut total = 0.0;
            for (f, split) in splits.iter().enumerate() {
                let accuracy =
                    score_fold(split, &kernels[f], c, sigma2, tol, iter_cap_factor, &mut degenerate[f])?;
                total += accuracy;
            }
            let mean_accuracy = total / splits.len() as f64;
            let cell = GridCell {
                sigma2,
                c,
                mean_accuracy,
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    mean_accuracy > b.mean_accuracy
                        || (mean_accuracy == b.mean_accuracy
                            && (c < b.c || (c == b.c && sigma2 < b.sigma2)))
                }
            };
            if better {
                best = Some(cell.clone());
            }
            evaluated.push(cell);
        }
    }

    let best = best.expect("non-empty grid always yields a winner");
    let degenerate_folds = degenerate.iter().filter(|&&d| d).count();
    if degenerate_folds > 0 {
        log::warn!(
            "{degenerate_folds} of {} cross-validation folds were degenerate",
            splits.len()
        );
    }
    Ok(SelectionOutcome {
        sigma2: best.sigma2,
        c: best.c,
        mean_accuracy: best.mean_accuracy,
        degenerate_folds,
        evaluated,
    })
}

fn build_splits(features: &FeatureMatrix, folds: usize) -> Vec<FoldSplit> {
    let n = features.n_rows();
    let y = features.labels_pm1();
    (0..folds)
        .map(|f| {
            let start = f * n / folds;
            let end = (f + 1) * n / folds;
            let mut split = FoldSplit {
                train_rows: Vec::with_capacity(n - (end - start)),
                train_y: Vec::with_capacity(n - (end - start)),
                test_rows: Vec::with_capacity(end - start),
                test_y: Vec::with_capacity(end - start),
            };
            for i in 0..n {
                if i >= start && i < end {
                    split.test_rows.push(features.row(i).to_vec());
                    split.test_y.push(y[i]);
                } else {
                    split.train_rows.push(features.row(i).to_vec());
                    split.train_y.push(y[i]);
                }
            }
            split
        })
        .collect()
}

/// One fold's held-out accuracy; a training split with a single class
/// cannot produce a model and scores 0.
fn score_fold(
    split: &FoldSplit,
    kernel: &[f64],
    c: f64,
    sigma2: f64,
    tol: f64,
    iter_cap_factor: usize,
    degenerate: &mut bool,
) -> Result<f64, SvmError> {
    if split.test_y.iter().all(|&v| v == split.test_y[0]) {
        *degenerate = true;
    }
    if split.train_y.iter().all(|&v| v == split.train_y[0]) {
        *degenerate = true;
        return Ok(0.0);
    }
    let n = split.train_rows.len();
    let max_iter = iter_cap_factor.saturating_mul(n);
    let solution = match smo::solve(kernel, n, &split.train_y, c, tol, max_iter) {
        Ok(s) => s,
        // A cell that cannot converge within its iteration budget is not a
        // usable candidate; scoring the fold 0 keeps it from being selected
        // without aborting the rest of the grid.
        Err(SvmError::NonConvergence { iterations }) => {
            log::warn!(
                "grid cell C={c} sigma2={sigma2} hit the iteration cap ({iterations}); fold scored 0"
            );
            return Ok(0.0);
        }
        Err(e) => return Err(e),
    };
    let model = assemble_model(&split.train_rows, &split.train_y, c, sigma2, &solution);
    let mut hits = 0usize;
    for (row, &label) in split.test_rows.iter().zip(&split.test_y) {
        let f = model.decision_function(row)?;
        let predicted = if f >= 0.0 { 1.0 } else { -1.0 };
        if predicted == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / split.test_y.len() as f64)
}
