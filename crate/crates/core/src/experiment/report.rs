//! Report shapes and file outputs: one JSON document with everything, plus
//! per-metric CSV tables, the pooled out-of-sample equity curves as CSV,
//! and a simple SVG line plot of those curves.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backtest::{DrawdownRecord, EquityCurve};
use crate::evaluation::ConfusionMatrix;

use super::{ExperimentError, OutputConfig, RunConfig, WindowIndices, WindowPlan};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricRow {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

impl MetricRow {
    pub fn from_confusion(cm: ConfusionMatrix) -> Self {
        MetricRow {
            accuracy: cm.accuracy(),
            precision: cm.precision(),
            recall: cm.recall(),
            f_score: cm.f_score(),
        }
    }
}

/// Per-model diagnostics attached to each window entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelDetail {
    Bpnn {
        best_epoch: usize,
        best_validation_accuracy: Option<f64>,
        degenerate_labels: bool,
    },
    Svm {
        sigma2: f64,
        c: f64,
        cv_accuracy: f64,
        degenerate_folds: usize,
        sigma2_fallback: bool,
        support_vectors: usize,
    },
    Sdae {
        best_epoch: usize,
        best_validation_accuracy: Option<f64>,
        pretrain_initial_losses: Vec<f64>,
        pretrain_final_losses: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelWindowReport {
    /// Set when training or prediction failed; the run continues without
    /// this model in this window.
    pub error: Option<String>,
    pub confusion: Option<ConfusionMatrix>,
    pub metrics: Option<MetricRow>,
    pub detail: Option<ModelDetail>,
}

impl ModelWindowReport {
    pub(super) fn failed(error: String) -> Self {
        ModelWindowReport {
            error: Some(error),
            confusion: None,
            metrics: None,
            detail: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub index: usize,
    pub window: WindowIndices,
    pub models: BTreeMap<String, ModelWindowReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAverages {
    /// Windows that produced metrics (failures are excluded from means).
    pub windows_used: usize,
    pub metrics: MetricRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub trades: usize,
    /// Absent when no trades closed (undefined rather than zero).
    pub success_rate: Option<f64>,
    pub cumulative_return_pct: f64,
    pub max_drawdown_pct: f64,
    pub top_drawdowns: Vec<DrawdownRecord>,
    pub equity: EquityCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestOutcome {
    pub error: Option<String>,
    pub report: Option<BacktestReport>,
}

/// The complete result of one run; `report.json` is exactly this document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub n_bars: usize,
    pub n_feature_rows: usize,
    /// Bars consumed by indicator warm-up (plus one unlabeled final bar,
    /// `n_bars = warm_up_rows + n_feature_rows + 1`).
    pub warm_up_rows: usize,
    pub feature_columns: Vec<String>,
    pub plan: WindowPlan,
    pub windows: Vec<WindowReport>,
    pub averages: BTreeMap<String, ModelAverages>,
    pub backtests: BTreeMap<String, BacktestOutcome>,
    pub config: RunConfig,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String, ExperimentError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Model names in deterministic (sorted) order.
    pub fn model_names(&self) -> Vec<String> {
        self.averages.keys().cloned().collect()
    }

    /// One metric as a CSV table: a row per window (percent, 2 decimals,
    /// blank cell where the model failed) and a final average row.
    pub fn metric_table_csv(&self, metric: &str) -> String {
        let names = self.model_names();
        let pick = |row: &MetricRow| match metric {
            "accuracy" => row.accuracy,
            "precision" => row.precision,
            "recall" => row.recall,
            "f_score" => row.f_score,
            other => unreachable!("unknown metric table {other}"),
        };
        let mut out = String::from("window");
        for n in &names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for w in &self.windows {
            let _ = write!(out, "{}", w.index + 1);
            for n in &names {
                out.push(',');
                if let Some(m) = w.models.get(n).and_then(|m| m.metrics.as_ref()) {
                    let _ = write!(out, "{:.2}", pick(m) * 100.0);
                }
            }
            out.push('\n');
        }
        out.push_str("average");
        for n in &names {
            out.push(',');
            if let Some(a) = self.averages.get(n) {
                if a.windows_used > 0 {
                    let _ = write!(out, "{:.2}", pick(&a.metrics) * 100.0);
                }
            }
        }
        out.push('\n');
        out
    }

    pub fn trading_table_csv(&self) -> String {
        let mut out =
            String::from("model,trades,success_rate_pct,cumulative_return_pct,max_drawdown_pct,error\n");
        for (name, outcome) in &self.backtests {
            match (&outcome.report, &outcome.error) {
                (Some(r), _) => {
                    let success = r
                        .success_rate
                        .map(|s| format!("{:.2}", s * 100.0))
                        .unwrap_or_default();
                    let _ = writeln!(
                        out,
                        "{name},{},{success},{:.2},{:.2},",
                        r.trades, r.cumulative_return_pct, r.max_drawdown_pct
                    );
                }
                (None, err) => {
                    let msg = err.as_deref().unwrap_or("unknown failure");
                    let _ = writeln!(out, "{name},,,,,{}", csv_quote(msg));
                }
            }
        }
        out
    }

    pub fn drawdown_table_csv(&self) -> String {
        let mut out = String::from("model,rank,begin,bottom,end,depth_pct,length,fall,recovery\n");
        for (name, outcome) in &self.backtests {
            if let Some(r) = &outcome.report {
                for (rank, d) in r.top_drawdowns.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{name},{},{},{},{},{:.2},{},{},{}",
                        rank + 1,
                        d.begin,
                        d.bottom,
                        d.end,
                        d.depth,
                        d.length,
                        d.fall,
                        d.recovery
                    );
                }
            }
        }
        out
    }

    /// Pooled out-of-sample curves, one percent column per traded model.
    pub fn equity_curve_csv(&self) -> Option<String> {
        let curves: Vec<(&String, &EquityCurve)> = self
            .backtests
            .iter()
            .filter_map(|(n, o)| o.report.as_ref().map(|r| (n, &r.equity)))
            .collect();
        let first = curves.first()?.1;
        let mut out = String::from("date");
        for (n, _) in &curves {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, d) in first.dates.iter().enumerate() {
            let _ = write!(out, "{d}");
            for (_, c) in &curves {
                let _ = write!(out, ",{}", c.values[i]);
            }
            out.push('\n');
        }
        Some(out)
    }

    /// Minimal self-contained line plot of the equity curves.
    pub fn equity_curve_svg(&self) -> Option<String> {
        let curves: Vec<(&String, &EquityCurve)> = self
            .backtests
            .iter()
            .filter_map(|(n, o)| o.report.as_ref().map(|r| (n, &r.equity)))
            .collect();
        let first = curves.first()?.1;
        if first.values.len() < 2 {
            return None;
        }
        let (width, height, margin) = (960.0, 540.0, 60.0);
        let lo = curves
            .iter()
            .flat_map(|(_, c)| c.values.iter().copied())
            .fold(f64::INFINITY, f64::min)
            .min(0.0);
        let hi = curves
            .iter()
            .flat_map(|(_, c)| c.values.iter().copied())
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);
        let span = (hi - lo).max(1e-9);
        let x = |i: usize| {
            margin + (width - 2.0 * margin) * i as f64 / (first.values.len() - 1) as f64
        };
        let y = |v: f64| height - margin - (height - 2.0 * margin) * (v - lo) / span;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
        );
        svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
        svg.push('\n');
        // Axes and the zero line.
        let _ = writeln!(
            svg,
            r#"<line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/><line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
            m = margin,
            t = margin,
            b = height - margin,
            r = width - margin
        );
        if lo < 0.0 && hi > 0.0 {
            let _ = writeln!(
                svg,
                r##"<line x1="{m}" y1="{z:.2}" x2="{r}" y2="{z:.2}" stroke="#cccccc" stroke-dasharray="4 4"/>"##,
                m = margin,
                r = width - margin,
                z = y(0.0)
            );
        }
        for (tick, anchor_y) in [(hi, y(hi)), (lo, y(lo)), (0.0, y(0.0))] {
            if tick == 0.0 && !(lo < 0.0 && hi > 0.0) {
                continue;
            }
            let _ = writeln!(
                svg,
                r#"<text x="{tx:.2}" y="{ty:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{tick:.1}%</text>"#,
                tx = margin - 6.0,
                ty = anchor_y + 4.0
            );
        }
        for (label, tx, anchor) in [
            (first.dates[0], margin, "start"),
            (
                *first.dates.last().expect("curve is non-empty"),
                width - margin,
                "end",
            ),
        ] {
            let _ = writeln!(
                svg,
                r#"<text x="{tx}" y="{ty}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{label}</text>"#,
                ty = height - margin + 18.0
            );
        }
        let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
        for (k, (name, curve)) in curves.iter().enumerate() {
            let color = palette[k % palette.len()];
            let mut points = String::new();
            for (i, v) in curve.values.iter().enumerate() {
                let _ = write!(points, "{:.2},{:.2} ", x(i), y(*v));
            }
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                points.trim_end()
            );
            let _ = writeln!(
                svg,
                r#"<text x="{tx}" y="{ty}" font-family="sans-serif" font-size="13" fill="{color}">{name}</text>"#,
                tx = margin + 10.0,
                ty = margin + 16.0 + 16.0 * k as f64
            );
        }
        svg.push_str("</svg>\n");
        Some(svg)
    }
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn write_file(
    path: PathBuf,
    contents: &str,
    written: &mut Vec<PathBuf>,
) -> Result<(), ExperimentError> {
    std::fs::write(&path, contents).map_err(|source| ExperimentError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(())
}

fn ensure_dir(path: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(super) fn write_outputs(
    report: &RunReport,
    output: &OutputConfig,
) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut written = Vec::new();
    ensure_dir(&output.dir)?;
    write_file(output.dir.join("report.json"), &report.to_json()?, &mut written)?;

    if output.write_tables {
        let tables = output.dir.join("tables");
        ensure_dir(&tables)?;
        for metric in ["accuracy", "precision", "recall", "f_score"] {
            write_file(
                tables.join(format!("{metric}.csv")),
                &report.metric_table_csv(metric),
                &mut written,
            )?;
        }
        write_file(tables.join("trading.csv"), &report.trading_table_csv(), &mut written)?;
        write_file(
            tables.join("drawdowns.csv"),
            &report.drawdown_table_csv(),
            &mut written,
        )?;
    }
    if output.write_equity_curve {
        if let Some(csv) = report.equity_curve_csv() {
            write_file(output.dir.join("equity_curve.csv"), &csv, &mut written)?;
        }
    }
    if output.write_svg {
        if let Some(svg) = report.equity_curve_svg() {
            write_file(output.dir.join("equity_curve.svg"), &svg, &mut written)?;
        }
    }
    Ok(written)
}
