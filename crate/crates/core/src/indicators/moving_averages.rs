//! Moving-average family: SMA, EMA, EVWMA, ZLEMA, TRIX, MACD, DEMA.

use super::helpers::{defined, ema_opt, first_defined, sma_opt};
use crate::market_data::BarSeries;

/// Simple moving average of closes.
pub(super) fn sma(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    sma_opt(&defined(&series.closes()), period)
}

/// Exponential moving average of closes, SMA-seeded.
pub(super) fn ema(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    ema_opt(&defined(&series.closes()), period)
}

/// Elastic volume-weighted moving average.
///
/// `evwma[t] = (evwma[t-1] * (VS[t] - V[t]) + C[t] * V[t]) / VS[t]` where
/// `VS[t]` is the volume sum over the trailing `period` bars. Seeded with the
/// SMA of the first `period` closes; a zero `VS` carries the previous value
/// forward.
pub(super) fn evwma(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let closes = series.closes();
    let volumes: Vec<f64> = series.bars().iter().map(|b| b.volume).collect();
    let n = closes.len();
    let mut out = vec![None; n];
    if period > n {
        return out;
    }
    let seed_at = period - 1;
    let mut prev = closes[..period].iter().sum::<f64>() / period as f64;
    out[seed_at] = Some(prev);
    for t in (seed_at + 1)..n {
        let vs: f64 = volumes[t + 1 - period..=t].iter().sum();
        if vs > 0.0 {
            prev = (prev * (vs - volumes[t]) + closes[t] * volumes[t]) / vs;
        }
        out[t] = Some(prev);
    }
    out
}

/// Zero-lag EMA: an EMA over the de-lagged series `2*C[t] - C[t-lag]` with
/// `lag = (period-1)/2` (integer division).
pub(super) fn zlema(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let closes = series.closes();
    let lag = (period - 1) / 2;
    let n = closes.len();
    let mut delagged = vec![None; n];
    for t in lag..n {
        delagged[t] = Some(2.0 * closes[t] - closes[t - lag]);
    }
    ema_opt(&delagged, period)
}

/// TRIX: one-bar percentage rate of change of a triple-smoothed EMA,
/// `100 * (e3[t]/e3[t-1] - 1)`.
pub(super) fn trix(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let e1 = ema_opt(&defined(&series.closes()), period);
    let e2 = ema_opt(&e1, period);
    let e3 = ema_opt(&e2, period);
    let n = e3.len();
    let mut out = vec![None; n];
    let Some(start) = first_defined(&e3) else {
        return out;
    };
    for t in (start + 1)..n {
        let prev = e3[t - 1].unwrap();
        let cur = e3[t].unwrap();
        // Closes are strictly positive, so a triple EMA of them is too.
        out[t] = Some(100.0 * (cur / prev - 1.0));
    }
    out
}

/// MACD reduced to one value per bar: the line minus its signal
/// (`EMA(fast) - EMA(slow)` minus the `signal`-period EMA of that line).
pub(super) fn macd_histogram(
    series: &BarSeries,
    fast: usize,
    slow: usize,
    signal: usize,
) -> Vec<Option<f64>> {
    let closes = defined(&series.closes());
    let ema_fast = ema_opt(&closes, fast);
    let ema_slow = ema_opt(&closes, slow);
    let n = closes.len();
    let mut line = vec![None; n];
    for t in 0..n {
        if let (Some(f), Some(s)) = (ema_fast[t], ema_slow[t]) {
            line[t] = Some(f - s);
        }
    }
    let signal_line = ema_opt(&line, signal);
    let mut out = vec![None; n];
    for t in 0..n {
        if let (Some(l), Some(s)) = (line[t], signal_line[t]) {
            out[t] = Some(l - s);
        }
    }
    out
}

/// Double EMA: `2*EMA(C) - EMA(EMA(C))`.
pub(super) fn dema(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let e1 = ema_opt(&defined(&series.closes()), period);
    let e2 = ema_opt(&e1, period);
    let n = e1.len();
    let mut out = vec![None; n];
    for t in 0..n {
        if let (Some(a), Some(b)) = (e1[t], e2[t]) {
            out[t] = Some(2.0 * a - b);
        }
    }
    out
}
