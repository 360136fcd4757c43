//! Trading simulation over daily direction signals, plus the trading-side
//! report metrics: transaction success rate, cumulative return, and
//! peak-to-trough drawdown episodes.
//!
//! Conventions, fixed here and relied on by the report layer:
//! - `predictions[t]` is the position held over day t → t+1;
//!   `closes`/`dates` carry one extra leading point, so the curve starts
//!   at 0 on the entry date.
//! - Equity compounds multiplicatively; curve values are cumulative return
//!   in percent.
//! - A position change costs `(fee_bps + impact_bps)` per unit of position
//!   moved (a long→short flip moves two units), charged inside the first
//!   day of the new position. A trade's net return therefore contains its
//!   entry cost; its exit cost lands in the following run or cash period.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::DirectionLabel;

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("expected {expected} {what}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("close price at index {index} is not a positive finite number")]
    BadPrice { index: usize },
    #[error("invalid strategy config: {msg}")]
    BadConfig { msg: String },
}

/// What a down signal means: step aside, or take the other side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyMode {
    LongFlat,
    LongShort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub mode: StrategyMode,
    /// Basis points of notional per unit of position change.
    pub fee_bps: f64,
    /// Additional basis points per unit of position change.
    pub impact_bps: f64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            mode: StrategyMode::LongShort,
            fee_bps: 0.0,
            impact_bps: 0.0,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<(), BacktestError> {
        for (name, v) in [("fee_bps", self.fee_bps), ("impact_bps", self.impact_bps)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(BacktestError::BadConfig {
                    msg: format!("{name} must be non-negative, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Cumulative strategy return in percent, one point per close: the entry
/// date at 0, then one point per evaluated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityCurve {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl EquityCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Final compounded return as a fraction (×100 gives the reported %).
    pub fn cumulative_return(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0) / 100.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeDirection {
    Long,
    Short,
}

/// A maximal run of constant non-cash position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub entry: NaiveDate,
    pub exit: NaiveDate,
    pub direction: TradeDirection,
    /// Compounded return over the run, entry cost included.
    pub net_return: f64,
}

/// One peak-to-recovery drawdown episode, Table-style: dates plus
/// trading-day counts, depth in (negative) percentage points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawdownRecord {
    pub begin: NaiveDate,
    pub bottom: NaiveDate,
    pub end: NaiveDate,
    pub depth: f64,
    pub length: usize,
    pub fall: usize,
    pub recovery: usize,
}

fn position(mode: StrategyMode, label: DirectionLabel) -> f64 {
    match (mode, label) {
        (_, DirectionLabel::Up) => 1.0,
        (StrategyMode::LongFlat, DirectionLabel::Down) => 0.0,
        (StrategyMode::LongShort, DirectionLabel::Down) => -1.0,
    }
}

struct OpenRun {
    entry_date: NaiveDate,
    direction: TradeDirection,
    entry_equity: f64,
}

/// Run the strategy. `dates` and `closes` have one more element than
/// `predictions` (the entry point); dates are assumed increasing.
pub fn simulate(
    predictions: &[DirectionLabel],
    dates: &[NaiveDate],
    closes: &[f64],
    cfg: &StrategyConfig,
) -> Result<(EquityCurve, Vec<Trade>), BacktestError> {
    cfg.validate()?;
    if closes.len() != predictions.len() + 1 {
        return Err(BacktestError::LengthMismatch {
            what: "closes (predictions + 1)",
            expected: predictions.len() + 1,
            got: closes.len(),
        });
    }
    if dates.len() != closes.len() {
        return Err(BacktestError::LengthMismatch {
            what: "dates (one per close)",
            expected: closes.len(),
            got: dates.len(),
        });
    }
    if let Some(index) = closes.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(BacktestError::BadPrice { index });
    }

    let cost_rate = (cfg.fee_bps + cfg.impact_bps) / 10_000.0;
    let mut equity = 1.0f64;
    let mut prev_pos = 0.0f64;
    let mut values = Vec::with_capacity(closes.len());
    values.push(0.0);
    let mut trades = Vec::new();
    let mut open: Option<OpenRun> = None;

    for (t, &label) in predictions.iter().enumerate() {
        let pos = position(cfg.mode, label);
        if pos != prev_pos {
            if let Some(run) = open.take() {
                trades.push(close_run(run, dates[t], equity));
            }
            if pos != 0.0 {
                open = Some(OpenRun {
                    entry_date: dates[t],
                    direction: if pos > 0.0 {
                        TradeDirection::Long
                    } else {
                        TradeDirection::Short
                    },
                    entry_equity: equity,
                });
            }
        }
        let cost = cost_rate * (pos - prev_pos).abs();
        let daily_move = closes[t + 1] / closes[t] - 1.0;
        let r = pos * daily_move - cost;
        equity *= 1.0 + r;
        values.push((equity - 1.0) * 100.0);
        prev_pos = pos;
    }
    if let Some(run) = open.take() {
        trades.push(close_run(run, dates[dates.len() - 1], equity));
    }

    Ok((
        EquityCurve {
            dates: dates.to_vec(),
            values,
        },
        trades,
    ))
}

fn close_run(run: OpenRun, exit: NaiveDate, equity_now: f64) -> Trade {
    Trade {
        entry: run.entry_date,
        exit,
        direction: run.direction,
        net_return: equity_now / run.entry_equity - 1.0,
    }
}

/// Share of trades with strictly positive net return; `None` when no
/// trades happened (undefined rather than zero).
pub fn transaction_success_rate(trades: &[Trade]) -> Option<f64> {
    if trades.is_empty() {
        return None;
    }
    let winners = trades.iter().filter(|t| t.net_return > 0.0).count();
    Some(winners as f64 / trades.len() as f64)
}

/// Final compounded return of the curve, as a fraction.
pub fn cumulative_return(curve: &EquityCurve) -> f64 {
    curve.cumulative_return()
}

/// Deepest peak-to-trough decline where the peak precedes the trough:
/// max over t ≤ τ of X(t) − X(τ). Single pass; same units as the series.
pub fn max_drawdown(values: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &v in values {
        peak = peak.max(v);
        worst = worst.max(peak - v);
    }
    worst
}

/// The k deepest non-overlapping peak-to-recovery episodes, deepest first
/// (ties: earlier begin). An episode opens when the curve drops below its
/// running peak (begin = the last touch of that peak), bottoms at its first
/// minimum, and ends when the curve regains the peak level — or at the last
/// point if it never recovers.
pub fn top_drawdowns(curve: &EquityCurve, k: usize) -> Vec<DrawdownRecord> {
    let v = &curve.values;
    let mut episodes = Vec::new();
    if v.len() < 2 {
        return episodes;
    }
    let mut peak_idx = 0usize;
    let mut open: Option<(usize, usize)> = None; // (begin peak, bottom so far)
    for t in 1..v.len() {
        if v[t] >= v[peak_idx] {
            if let Some((begin, bottom)) = open.take() {
                episodes.push(make_record(curve, begin, bottom, t));
            }
            peak_idx = t;
        } else {
            match &mut open {
                None => open = Some((peak_idx, t)),
                Some((_, bottom)) => {
                    if v[t] < v[*bottom] {
                        *bottom = t;
                    }
                }
            }
        }
    }
    if let Some((begin, bottom)) = open {
        episodes.push(make_record(curve, begin, bottom, v.len() - 1));
    }
    episodes.sort_by(|a, b| {
        a.depth
            .partial_cmp(&b.depth)
            .expect("depths are finite")
            .then(a.begin.cmp(&b.begin))
    });
    episodes.truncate(k);
    episodes
}

fn make_record(curve: &EquityCurve, begin: usize, bottom: usize, end: usize) -> DrawdownRecord {
    DrawdownRecord {
        begin: curve.dates[begin],
        bottom: curve.dates[bottom],
        end: curve.dates[end],
        depth: curve.values[bottom] - curve.values[begin],
        length: end - begin,
        fall: bottom - begin,
        recovery: end - bottom,
    }
}
