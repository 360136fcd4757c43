//! Daily market-direction forecasting lab.
//!
//! The pipeline: load (or synthesize) daily OHLCV bars, derive a 28-column
//! technical-indicator feature matrix with next-day direction labels, train
//! three classifiers (backpropagation network, Gaussian-kernel SVM, stacked
//! denoising autoencoder) under a sliding-window walk-forward protocol, and
//! backtest the out-of-sample signals.
//!
//! Everything numeric is written from scratch on `f64` so training runs are
//! bit-reproducible under a fixed seed.

pub mod backtest;
pub mod bpnn;
pub mod evaluation;
pub mod experiment;
pub mod features;
pub mod indicators;
pub mod market_data;
pub mod nn;
pub mod sdae;
pub mod svm;

#[cfg(test)]
pub(crate) mod test_support;

pub use features::{FeatureMatrix, Scaler};
pub use market_data::{Bar, BarSeries, DirectionLabel};
