//! Oscillator and momentum families: RSI, ATR, Volatility, ROC, CMO, MFI,
//! WPR, Momentum, Stochastic %K.

use super::helpers::{true_range, typical_price, wilder_opt};
use crate::market_data::BarSeries;

/// Relative Strength Index (Wilder smoothing).
///
/// `RSI = 100 - 100/(1 + avg_gain/avg_loss)`. A zero average loss gives 100;
/// a fully flat window (zero gain and loss) gives the neutral 50.
pub(super) fn rsi(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let closes = series.closes();
    let n = closes.len();
    let mut gains = vec![None; n];
    let mut losses = vec![None; n];
    for t in 1..n {
        let d = closes[t] - closes[t - 1];
        gains[t] = Some(d.max(0.0));
        losses[t] = Some((-d).max(0.0));
    }
    let avg_gain = wilder_opt(&gains, period);
    let avg_loss = wilder_opt(&losses, period);
    let mut out = vec![None; n];
    for t in 0..n {
        if let (Some(g), Some(l)) = (avg_gain[t], avg_loss[t]) {
            out[t] = Some(if l == 0.0 {
                if g == 0.0 {
                    50.0
                } else {
                    100.0
                }
            } else {
                100.0 - 100.0 / (1.0 + g / l)
            });
        }
    }
    out
}

/// Average True Range (Wilder smoothing of the true range).
pub(super) fn atr(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let bars = series.bars();
    let highs: Vec<f64> = bars.iter().map(|b| b.high).collect();
    let lows: Vec<f64> = bars.iter().map(|b| b.low).collect();
    let closes = series.closes();
    let tr: Vec<Option<f64>> = true_range(&highs, &lows, &closes)
        .into_iter()
        .map(Some)
        .collect();
    wilder_opt(&tr, period)
}

/// Annualized rolling volatility: the sample standard deviation (n-1
/// denominator) of daily log close returns over the window, scaled by √252.
pub(super) fn volatility(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let closes = series.closes();
    let n = closes.len();
    let mut out = vec![None; n];
    for t in period..n {
        let returns: Vec<f64> = (t + 1 - period..=t)
            .map(|i| (closes[i] / closes[i - 1]).ln())
            .collect();
        let mean = returns.iter().sum::<f64>() / period as f64;
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (period as f64 - 1.0);
        out[t] = Some(var.sqrt() * 252.0_f64.sqrt());
    }
    out
}

/// Rate of Change: `100 * (C[t]/C[t-period] - 1)`.
pub(super) fn roc(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let closes = series.closes();
    let n = closes.len();
    let mut out = vec![None; n];
    for t in period..n {
        out[t] = Some(100.0 * (closes[t] / closes[t - period] - 1.0));
    }
    out
}

/// Chande Momentum Oscillator: `100 * (SU - SD) / (SU + SD)` over windowed
/// gain/loss sums. A flat window gives 0.
pub(super) fn cmo(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let closes = series.closes();
    let n = closes.len();
    let mut out = vec![None; n];
    for t in period..n {
        let mut up = 0.0;
        let mut down = 0.0;
        for i in t + 1 - period..=t {
            let d = closes[i] - closes[i - 1];
            if d > 0.0 {
                up += d;
            } else {
                down -= d;
            }
        }
        let denom = up + down;
        out[t] = Some(if denom == 0.0 {
            0.0
        } else {
            100.0 * (up - down) / denom
        });
    }
    out
}

/// Money Flow Index over typical-price volume flows. Bars whose typical
/// price is unchanged contribute to neither side; if both sides are zero
/// the value is the neutral 50.
pub(super) fn mfi(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let bars = series.bars();
    let highs: Vec<f64> = bars.iter().map(|b| b.high).collect();
    let lows: Vec<f64> = bars.iter().map(|b| b.low).collect();
    let closes = series.closes();
    let tp = typical_price(&highs, &lows, &closes);
    let n = tp.len();
    let mut out = vec![None; n];
    for t in period..n {
        let mut positive = 0.0;
        let mut negative = 0.0;
        for i in t + 1 - period..=t {
            let flow = tp[i] * bars[i].volume;
            if tp[i] > tp[i - 1] {
                positive += flow;
            } else if tp[i] < tp[i - 1] {
                negative += flow;
            }
        }
        let total = positive + negative;
        out[t] = Some(if total == 0.0 {
            50.0
        } else {
            // Divide before scaling: `positive / total <= 1.0` holds exactly
            // in floating point, so the result cannot exceed 100.
            100.0 * (positive / total)
        });
    }
    out
}

/// Williams %R: `-100 * (HH - C) / (HH - LL)` over the window; a flat
/// window gives the midpoint -50.
pub(super) fn wpr(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let bars = series.bars();
    let n = bars.len();
    let mut out = vec![None; n];
    for t in (period - 1)..n {
        let lo = t + 1 - period;
        let hh = bars[lo..=t].iter().map(|b| b.high).fold(f64::NEG_INFINITY, f64::max);
        let ll = bars[lo..=t].iter().map(|b| b.low).fold(f64::INFINITY, f64::min);
        let range = hh - ll;
        out[t] = Some(if range == 0.0 {
            -50.0
        } else {
            -100.0 * (hh - bars[t].close) / range
        });
    }
    out
}

/// Momentum: `C[t] - C[t-period]`.
pub(super) fn momentum(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let closes = series.closes();
    let n = closes.len();
    let mut out = vec![None; n];
    for t in period..n {
        out[t] = Some(closes[t] - closes[t - period]);
    }
    out
}

/// Raw stochastic %K: `100 * (C - LL) / (HH - LL)` over the window; a flat
/// window gives the midpoint 50.
pub(super) fn stoch_k(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let bars = series.bars();
    let n = bars.len();
    let mut out = vec![None; n];
    for t in (period - 1)..n {
        let lo = t + 1 - period;
        let hh = bars[lo..=t].iter().map(|b| b.high).fold(f64::NEG_INFINITY, f64::max);
        let ll = bars[lo..=t].iter().map(|b| b.low).fold(f64::INFINITY, f64::min);
        let range = hh - ll;
        out[t] = Some(if range == 0.0 {
            50.0
        } else {
            100.0 * (bars[t].close - ll) / range
        });
    }
    out
}
