//! End-to-end walk-forward experiment: bars → indicators → feature rows →
//! per-window scaling and model training → pooled out-of-sample predictions
//! → classification metrics and a trading backtest, all driven by one
//! config file and one seed.
//!
//! The protocol trains on a fixed-length trailing window of labeled feature
//! rows, predicts the next block, then slides forward by the block length.
//! Everything fitted for a window — scaler extrema, the SVM's (σ², C)
//! search, network weights — sees only that window's training rows.

mod report;
mod synthetic;

pub use report::{
    BacktestOutcome, BacktestReport, MetricRow, ModelAverages, ModelDetail, ModelWindowReport,
    RunReport, WindowReport,
};
pub use synthetic::gen_synthetic;

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backtest::{self, StrategyConfig};
use crate::bpnn::{self, BpnnConfig, BpnnModel};
use crate::evaluation::confusion;
use crate::features::{self, FeatureError, FeatureMatrix, Scaler};
use crate::indicators::{self, IndicatorSettings};
use crate::market_data::{self, BarSeries, DirectionLabel, MarketDataError};
use crate::sdae::{self, mix_seed, SdaeConfig, SdaeModel};
use crate::svm::{self, SvmConfig, SvmModel, SvmSearchGrid};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {msg}")]
    Config { msg: String },
    #[error("window plan error: {msg}")]
    Window { msg: String },
    #[error(transparent)]
    MarketData(#[from] MarketDataError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("backtest error: {0}")]
    Backtest(#[from] crate::backtest::BacktestError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("report serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

fn config_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config { msg: msg.into() }
}

// ------------------------------------------------------------------ config

/// Where the bar series comes from: a CSV on disk, or the built-in
/// generator when no path is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    pub synthetic_days: usize,
    pub synthetic_seed: u64,
    pub synthetic_signal: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            path: None,
            synthetic_days: 3000,
            synthetic_seed: 7,
            synthetic_signal: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Bpnn,
    Svm,
    Sdae,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Bpnn => "bpnn",
            ModelKind::Svm => "svm",
            ModelKind::Sdae => "sdae",
        }
    }

    fn seed_salt(self) -> u64 {
        match self {
            ModelKind::Bpnn => 0xB9,
            ModelKind::Svm => 0x57,
            ModelKind::Sdae => 0x5D,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Labeled feature rows per training window.
    pub train_len: usize,
    /// Labeled feature rows per test block (and the slide step).
    pub test_len: usize,
    /// Base seed; every window/model combination derives its own stream.
    pub seed: u64,
    pub models: Vec<ModelKind>,
    /// The trading report covers SVM and the autoencoder stack by default;
    /// set this to also trade the baseline network's signals.
    pub include_bpnn_in_backtest: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            train_len: 1400,
            test_len: 100,
            seed: 42,
            models: vec![ModelKind::Bpnn, ModelKind::Svm, ModelKind::Sdae],
            include_bpnn_in_backtest: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub write_tables: bool,
    pub write_equity_curve: bool,
    pub write_svg: bool,
    /// Episodes kept in the drawdown table.
    pub top_drawdowns: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            write_tables: true,
            write_equity_curve: true,
            write_svg: true,
            top_drawdowns: 5,
        }
    }
}

/// The whole run, one section per concern; every field has a default so a
/// config file only states deviations.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub protocol: ProtocolConfig,
    pub indicators: IndicatorSettings,
    pub bpnn: BpnnConfig,
    pub svm: SvmConfig,
    pub sdae: SdaeConfig,
    pub strategy: StrategyConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.protocol.train_len == 0 || self.protocol.test_len == 0 {
            return Err(config_err("protocol.train_len and test_len must be positive"));
        }
        if self.protocol.models.is_empty() {
            return Err(config_err("protocol.models must enable at least one model"));
        }
        let mut seen = self.protocol.models.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.protocol.models.len() {
            return Err(config_err("protocol.models lists a model twice"));
        }
        if self.data.path.is_none() {
            if self.data.synthetic_days < 100 {
                return Err(config_err("data.synthetic_days must be at least 100"));
            }
            if !(0.0..=1.0).contains(&self.data.synthetic_signal) {
                return Err(config_err("data.synthetic_signal must lie in [0, 1]"));
            }
        }
        if self.output.top_drawdowns == 0 {
            return Err(config_err("output.top_drawdowns must be positive"));
        }
        self.bpnn
            .validate()
            .map_err(|e| config_err(format!("bpnn: {e}")))?;
        self.svm
            .validate()
            .map_err(|e| config_err(format!("svm: {e}")))?;
        self.sdae
            .validate()
            .map_err(|e| config_err(format!("sdae: {e}")))?;
        self.strategy
            .validate()
            .map_err(|e| config_err(format!("strategy: {e}")))?;
        Ok(())
    }
}

// ----------------------------------------------------------------- windows

/// Half-open row ranges for one walk-forward step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowIndices {
    pub train_start: usize,
    pub train_end: usize,
    pub test_start: usize,
    pub test_end: usize,
}

impl WindowIndices {
    pub fn train_range(&self) -> Range<usize> {
        self.train_start..self.train_end
    }

    pub fn test_range(&self) -> Range<usize> {
        self.test_start..self.test_end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub train_len: usize,
    pub test_len: usize,
    pub windows: Vec<WindowIndices>,
}

/// Tile rows `train_len..n` into consecutive test blocks of `test_len`
/// (last one possibly shorter), each trained on the `train_len` rows
/// immediately before it.
pub fn make_windows(
    n: usize,
    train_len: usize,
    test_len: usize,
) -> Result<WindowPlan, ExperimentError> {
    if train_len == 0 || test_len == 0 {
        return Err(ExperimentError::Window {
            msg: "train_len and test_len must be positive".to_string(),
        });
    }
    if n <= train_len {
        return Err(ExperimentError::Window {
            msg: format!("{n} labeled rows cannot fill a training window of {train_len} plus at least one test row"),
        });
    }
    let mut windows = Vec::new();
    let mut k = 0usize;
    loop {
        let test_start = train_len + k * test_len;
        if test_start >= n {
            break;
        }
        windows.push(WindowIndices {
            train_start: k * test_len,
            train_end: k * test_len + train_len,
            test_start,
            test_end: (test_start + test_len).min(n),
        });
        k += 1;
    }
    Ok(WindowPlan {
        train_len,
        test_len,
        windows,
    })
}

// ------------------------------------------------------------ window fits

/// Everything trained for one window. Produced exclusively from the
/// window's training rows; the leakage tests compare these byte-for-byte
/// after perturbing test rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowArtifacts {
    pub window: WindowIndices,
    pub scaler: Scaler,
    pub bpnn: Option<Result<BpnnModel, String>>,
    pub svm: Option<Result<SvmTrained, String>>,
    pub sdae: Option<Result<SdaeModel, String>>,
}

/// Grid-search outcome plus the model refit on the full training window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvmTrained {
    pub selection: svm::SelectionOutcome,
    pub sigma2_fallback: bool,
    pub model: SvmModel,
}

fn window_seed(base: u64, window_index: usize, model: ModelKind) -> u64 {
    mix_seed(mix_seed(base, window_index as u64), model.seed_salt())
}

/// Fit the scaler and every enabled model on one window's training rows.
pub fn fit_window(
    features: &FeatureMatrix,
    window: WindowIndices,
    window_index: usize,
    config: &RunConfig,
) -> Result<WindowArtifacts, ExperimentError> {
    let train = features.slice_rows(window.train_range());
    let scaler = Scaler::fit(&train)?;
    let scaled_train = scaler.transform(&train)?;
    let seed = |model| window_seed(config.protocol.seed, window_index, model);

    let mut artifacts = WindowArtifacts {
        window,
        scaler,
        bpnn: None,
        svm: None,
        sdae: None,
    };
    for model in &config.protocol.models {
        match model {
            ModelKind::Bpnn => {
                artifacts.bpnn = Some(
                    bpnn::train(&scaled_train, &config.bpnn, seed(ModelKind::Bpnn))
                        .map_err(|e| e.to_string()),
                );
            }
            ModelKind::Svm => {
                artifacts.svm = Some(train_svm(&scaled_train, &config.svm));
            }
            ModelKind::Sdae => {
                artifacts.sdae = Some(
                    sdae::train(&scaled_train, &config.sdae, seed(ModelKind::Sdae))
                        .map_err(|e| e.to_string()),
                );
            }
        }
    }
    Ok(artifacts)
}

fn train_svm(scaled_train: &FeatureMatrix, config: &SvmConfig) -> Result<SvmTrained, String> {
    let (grid, sigma2_fallback) =
        SvmSearchGrid::from_features(scaled_train, config).map_err(|e| e.to_string())?;
    let selection = svm::model_select(scaled_train, &grid, config.tol, config.iter_cap_factor)
        .map_err(|e| e.to_string())?;
    let model = svm::train_on_features(scaled_train, selection.c, selection.sigma2, config)
        .map_err(|e| e.to_string())?;
    Ok(SvmTrained {
        selection,
        sigma2_fallback,
        model,
    })
}

/// One window's out-of-sample result for one model.
struct ModelWindowOutcome {
    report: ModelWindowReport,
    predictions: Option<Vec<DirectionLabel>>,
}

fn evaluate_model<M, E: std::fmt::Display>(
    trained: &Result<M, String>,
    detail: impl Fn(&M) -> ModelDetail,
    predict: impl Fn(&M) -> Result<Vec<DirectionLabel>, E>,
    actual: &[DirectionLabel],
) -> ModelWindowOutcome {
    let (report, predictions) = match trained {
        Err(e) => (ModelWindowReport::failed(e.clone()), None),
        Ok(model) => match predict(model) {
            Err(e) => (ModelWindowReport::failed(e.to_string()), None),
            Ok(preds) => {
                let cm = confusion(&preds, actual).expect("aligned non-empty test rows");
                (
                    ModelWindowReport {
                        error: None,
                        confusion: Some(cm),
                        metrics: Some(MetricRow::from_confusion(cm)),
                        detail: Some(detail(model)),
                    },
                    Some(preds),
                )
            }
        },
    };
    ModelWindowOutcome {
        report,
        predictions,
    }
}

/// Apply one window's artifacts to its test rows.
pub fn evaluate_window(
    features: &FeatureMatrix,
    artifacts: &WindowArtifacts,
    window_index: usize,
) -> Result<(WindowReport, BTreeMap<String, Vec<DirectionLabel>>), ExperimentError> {
    let test = features.slice_rows(artifacts.window.test_range());
    let scaled_test = artifacts.scaler.transform(&test)?;
    let actual = test.labels();

    let mut models = BTreeMap::new();
    let mut predictions = BTreeMap::new();
    let mut insert = |name: &str, outcome: ModelWindowOutcome| {
        models.insert(name.to_string(), outcome.report);
        if let Some(p) = outcome.predictions {
            predictions.insert(name.to_string(), p);
        }
    };

    if let Some(trained) = &artifacts.bpnn {
        insert(
            ModelKind::Bpnn.name(),
            evaluate_model(
                trained,
                |m: &BpnnModel| ModelDetail::Bpnn {
                    best_epoch: m.report.best_epoch,
                    best_validation_accuracy: m.report.best_validation_accuracy,
                    degenerate_labels: m.report.degenerate_labels,
                },
                |m| bpnn::predict(m, &scaled_test),
                actual,
            ),
        );
    }
    if let Some(trained) = &artifacts.svm {
        insert(
            ModelKind::Svm.name(),
            evaluate_model(
                trained,
                |m: &SvmTrained| ModelDetail::Svm {
                    sigma2: m.selection.sigma2,
                    c: m.selection.c,
                    cv_accuracy: m.selection.mean_accuracy,
                    degenerate_folds: m.selection.degenerate_folds,
                    sigma2_fallback: m.sigma2_fallback,
                    support_vectors: m.model.support_vectors.len(),
                },
                |m| svm::predict(&m.model, &scaled_test),
                actual,
            ),
        );
    }
    if let Some(trained) = &artifacts.sdae {
        insert(
            ModelKind::Sdae.name(),
            evaluate_model(
                trained,
                |m: &SdaeModel| ModelDetail::Sdae {
                    best_epoch: m.report.best_epoch,
                    best_validation_accuracy: m.report.best_validation_accuracy,
                    pretrain_initial_losses: m
                        .report
                        .pretrain_traces
                        .iter()
                        .map(|t| *t.first().expect("trace has epochs+1 entries"))
                        .collect(),
                    pretrain_final_losses: m
                        .report
                        .pretrain_traces
                        .iter()
                        .map(|t| *t.last().expect("trace has epochs+1 entries"))
                        .collect(),
                },
                |m| sdae::predict(m, &scaled_test),
                actual,
            ),
        );
    }

    Ok((
        WindowReport {
            index: window_index,
            window: artifacts.window,
            models,
        },
        predictions,
    ))
}

// --------------------------------------------------------------------- run

fn load_data(config: &DataConfig) -> Result<BarSeries, ExperimentError> {
    match &config.path {
        Some(path) => Ok(market_data::load_series(path)?),
        None => gen_synthetic(
            config.synthetic_days,
            config.synthetic_seed,
            config.synthetic_signal,
        ),
    }
}

/// Execute the full protocol. Pure computation: file outputs are written
/// separately by [`write_outputs`].
pub fn run(config: &RunConfig) -> Result<RunReport, ExperimentError> {
    config.validate()?;
    let series = load_data(&config.data)?;
    let specs = indicators::catalog_with(&config.indicators);
    let features = features::assemble(&series, &specs)?;
    let plan = make_windows(
        features.n_rows(),
        config.protocol.train_len,
        config.protocol.test_len,
    )?;

    // Windows are independent; seeds are derived from (window, model), so
    // scheduling order cannot affect results.
    let computed: Vec<(WindowReport, BTreeMap<String, Vec<DirectionLabel>>)> = plan
        .windows
        .par_iter()
        .enumerate()
        .map(|(i, &w)| {
            let artifacts = fit_window(&features, w, i, config)?;
            evaluate_window(&features, &artifacts, i)
        })
        .collect::<Result<_, _>>()?;

    let (windows, window_predictions): (Vec<_>, Vec<_>) = computed.into_iter().unzip();
    let averages = compute_averages(&windows);
    let backtests = run_backtests(config, &series, &features, &plan, &window_predictions)?;

    Ok(RunReport {
        seed: config.protocol.seed,
        n_bars: series.len(),
        n_feature_rows: features.n_rows(),
        warm_up_rows: series.len() - features.n_rows() - 1,
        feature_columns: features.columns().to_vec(),
        plan,
        windows,
        averages,
        backtests,
        config: config.clone(),
    })
}

fn compute_averages(windows: &[WindowReport]) -> BTreeMap<String, ModelAverages> {
    let mut sums: BTreeMap<String, (usize, MetricRow)> = BTreeMap::new();
    for w in windows {
        for (name, m) in &w.models {
            if let Some(row) = &m.metrics {
                let entry = sums
                    .entry(name.clone())
                    .or_insert((0, MetricRow::default()));
                entry.0 += 1;
                entry.1.accuracy += row.accuracy;
                entry.1.precision += row.precision;
                entry.1.recall += row.recall;
                entry.1.f_score += row.f_score;
            } else {
                sums.entry(name.clone()).or_insert((0, MetricRow::default()));
            }
        }
    }
    sums.into_iter()
        .map(|(name, (n, total))| {
            let mean = if n > 0 {
                MetricRow {
                    accuracy: total.accuracy / n as f64,
                    precision: total.precision / n as f64,
                    recall: total.recall / n as f64,
                    f_score: total.f_score / n as f64,
                }
            } else {
                MetricRow::default()
            };
            (
                name,
                ModelAverages {
                    windows_used: n,
                    metrics: mean,
                },
            )
        })
        .collect()
}

fn run_backtests(
    config: &RunConfig,
    series: &BarSeries,
    features: &FeatureMatrix,
    plan: &WindowPlan,
    window_predictions: &[BTreeMap<String, Vec<DirectionLabel>>],
) -> Result<BTreeMap<String, BacktestOutcome>, ExperimentError> {
    let mut backtests = BTreeMap::new();
    let traded: Vec<ModelKind> = config
        .protocol
        .models
        .iter()
        .copied()
        .filter(|m| *m != ModelKind::Bpnn || config.protocol.include_bpnn_in_backtest)
        .collect();
    if traded.is_empty() || plan.windows.is_empty() {
        return Ok(backtests);
    }

    // Feature row i sits at bar offset + i; the pooled test span needs one
    // extra trailing close (the label day of the final row).
    let all_dates = series.dates();
    let first_feature_date = features.dates()[0];
    let offset = all_dates
        .binary_search(&first_feature_date)
        .map_err(|_| ExperimentError::Window {
            msg: "feature dates not found in the bar series".to_string(),
        })?;
    let test_start = plan.windows[0].test_start;
    let n_rows = features.n_rows();
    let closes = series.closes();
    let span_closes = &closes[offset + test_start..=offset + n_rows];
    let span_dates = &all_dates[offset + test_start..=offset + n_rows];

    for model in traded {
        let name = model.name();
        let mut pooled: Vec<DirectionLabel> = Vec::with_capacity(n_rows - test_start);
        let mut missing = Vec::new();
        for (i, preds) in window_predictions.iter().enumerate() {
            match preds.get(name) {
                Some(p) => pooled.extend_from_slice(p),
                None => missing.push(i),
            }
        }
        let outcome = if !missing.is_empty() {
            BacktestOutcome {
                error: Some(format!(
                    "no predictions for windows {missing:?}; equity curve would have gaps"
                )),
                report: None,
            }
        } else {
            let (curve, trades) =
                backtest::simulate(&pooled, span_dates, span_closes, &config.strategy)?;
            BacktestOutcome {
                error: None,
                report: Some(BacktestReport {
                    trades: trades.len(),
                    success_rate: backtest::transaction_success_rate(&trades),
                    cumulative_return_pct: curve.cumulative_return() * 100.0,
                    max_drawdown_pct: backtest::max_drawdown(&curve.values),
                    top_drawdowns: backtest::top_drawdowns(&curve, config.output.top_drawdowns),
                    equity: curve,
                }),
            }
        };
        backtests.insert(name.to_string(), outcome);
    }
    Ok(backtests)
}

/// Write `report.json`, the per-metric tables, and the equity-curve CSV and
/// SVG under `output.dir`. Returns the paths written.
pub fn write_outputs(
    report: &RunReport,
    output: &OutputConfig,
) -> Result<Vec<PathBuf>, ExperimentError> {
    report::write_outputs(report, output)
}
