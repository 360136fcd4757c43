//! Trend-detection family: EMV, ADX, AROON, CCI, TDI, VHF, DPO, ZigZag.

use super::helpers::{sma_opt, true_range, typical_price, wilder_opt};
use crate::market_data::BarSeries;

/// Arms' Ease of Movement, smoothed with an SMA.
///
/// Raw value per bar: midpoint move divided by the box ratio
/// `(V/1e8) / (H-L)`. Bars with zero volume or zero range contribute 0.
pub(super) fn emv(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let bars = series.bars();
    let n = bars.len();
    let mut raw = vec![None; n];
    for t in 1..n {
        let mid = (bars[t].high + bars[t].low) / 2.0;
        let mid_prev = (bars[t - 1].high + bars[t - 1].low) / 2.0;
        let distance = mid - mid_prev;
        let range = bars[t].high - bars[t].low;
        let volume = bars[t].volume;
        raw[t] = Some(if range == 0.0 || volume == 0.0 {
            0.0
        } else {
            distance / ((volume / 1e8) / range)
        });
    }
    sma_opt(&raw, period)
}

/// Average Directional Index (Wilder).
///
/// Directional movements `+DM`/`-DM` and true range are Wilder-smoothed;
/// `DX = 100*|+DI - -DI|/(+DI + -DI)`; ADX seeds with the mean of the first
/// `period` DX values and continues with the Wilder recurrence.
pub(super) fn adx(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let bars = series.bars();
    let n = bars.len();
    let highs: Vec<f64> = bars.iter().map(|b| b.high).collect();
    let lows: Vec<f64> = bars.iter().map(|b| b.low).collect();
    let closes = series.closes();
    let tr = true_range(&highs, &lows, &closes);

    let mut plus_dm = vec![None; n];
    let mut minus_dm = vec![None; n];
    let mut tr_opt = vec![None; n];
    for t in 1..n {
        let up = highs[t] - highs[t - 1];
        let down = lows[t - 1] - lows[t];
        plus_dm[t] = Some(if up > down && up > 0.0 { up } else { 0.0 });
        minus_dm[t] = Some(if down > up && down > 0.0 { down } else { 0.0 });
        tr_opt[t] = Some(tr[t]);
    }

    let s_plus = wilder_opt(&plus_dm, period);
    let s_minus = wilder_opt(&minus_dm, period);
    let s_tr = wilder_opt(&tr_opt, period);

    let mut dx = vec![None; n];
    for t in 0..n {
        if let (Some(p), Some(m), Some(trv)) = (s_plus[t], s_minus[t], s_tr[t]) {
            let (plus_di, minus_di) = if trv == 0.0 {
                (0.0, 0.0)
            } else {
                (100.0 * p / trv, 100.0 * m / trv)
            };
            let denom = plus_di + minus_di;
            dx[t] = Some(if denom == 0.0 {
                0.0
            } else {
                100.0 * (plus_di - minus_di).abs() / denom
            });
        }
    }
    wilder_opt(&dx, period)
}

/// Aroon oscillator: `AroonUp - AroonDown` over a window of `period + 1`
/// bars ending at `t`. `AroonUp = 100*(period - bars_since_highest_high)/period`;
/// ties pick the earliest occurrence of the extreme value.
pub(super) fn aroon_diff(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let bars = series.bars();
    let n = bars.len();
    let mut out = vec![None; n];
    for t in period..n {
        let lo = t - period;
        let mut hi_idx = lo;
        let mut lo_idx = lo;
        for i in lo..=t {
            if bars[i].high > bars[hi_idx].high {
                hi_idx = i;
            }
            if bars[i].low < bars[lo_idx].low {
                lo_idx = i;
            }
        }
        let up = 100.0 * (period - (t - hi_idx)) as f64 / period as f64;
        let down = 100.0 * (period - (t - lo_idx)) as f64 / period as f64;
        out[t] = Some(up - down);
    }
    out
}

/// Commodity Channel Index: `(TP - SMA(TP)) / (0.015 * MD)` with `MD` the
/// mean absolute deviation of typical price from its SMA over the window.
/// A zero deviation yields 0.
pub(super) fn cci(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let bars = series.bars();
    let highs: Vec<f64> = bars.iter().map(|b| b.high).collect();
    let lows: Vec<f64> = bars.iter().map(|b| b.low).collect();
    let closes = series.closes();
    let tp = typical_price(&highs, &lows, &closes);
    let n = tp.len();
    let mut out = vec![None; n];
    for t in (period - 1)..n {
        let window = &tp[t + 1 - period..=t];
        let mean = window.iter().sum::<f64>() / period as f64;
        let md = window.iter().map(|v| (v - mean).abs()).sum::<f64>() / period as f64;
        out[t] = Some(if md == 0.0 {
            0.0
        } else {
            (tp[t] - mean) / (0.015 * md)
        });
    }
    out
}

/// Trend Detection Index.
///
/// With momentum `mom[t] = C[t] - C[t-period]`:
/// `TDI = |sum of mom over period| - (sum of |mom| over 2*period - sum of |mom| over period)`.
pub(super) fn tdi(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let closes = series.closes();
    let n = closes.len();
    let mut out = vec![None; n];
    if n == 0 {
        return out;
    }
    let mut mom = vec![None; n];
    for t in period..n {
        mom[t] = Some(closes[t] - closes[t - period]);
    }
    // First index where all 2*period momentum values exist.
    let start = period + 2 * period - 1;
    for t in start..n {
        let recent: Vec<f64> = (t + 1 - period..=t).map(|i| mom[i].unwrap()).collect();
        let full: Vec<f64> = (t + 1 - 2 * period..=t).map(|i| mom[i].unwrap()).collect();
        let direction: f64 = recent.iter().sum::<f64>().abs();
        let abs_recent: f64 = recent.iter().map(|v| v.abs()).sum();
        let abs_full: f64 = full.iter().map(|v| v.abs()).sum();
        out[t] = Some(direction - (abs_full - abs_recent));
    }
    out
}

/// Vertical Horizontal Filter: range of closes over the window divided by
/// the sum of absolute one-bar close changes across it. A flat window (zero
/// denominator) yields 0.
pub(super) fn vhf(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let closes = series.closes();
    let n = closes.len();
    let mut out = vec![None; n];
    for t in period..n {
        let window = &closes[t + 1 - period..=t];
        let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
        let denom: f64 = (t + 1 - period..=t)
            .map(|i| (closes[i] - closes[i - 1]).abs())
            .sum();
        out[t] = Some(if denom == 0.0 { 0.0 } else { (hi - lo) / denom });
    }
    out
}

/// Detrended Price Oscillator, causal form: `C[t - k] - SMA(period)[t]`
/// with `k = period/2 + 1`. The standard DPO centers the SMA into the
/// future; shifting the close back instead keeps the value computable at t.
pub(super) fn dpo(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let closes = series.closes();
    let n = closes.len();
    let k = period / 2 + 1;
    let sma = sma_opt(&super::helpers::defined(&closes), period);
    let mut out = vec![None; n];
    for t in 0..n {
        if t >= k {
            if let Some(avg) = sma[t] {
                out[t] = Some(closes[t - k] - avg);
            }
        }
    }
    out
}

/// Causal ZigZag direction: +1 after the most recently *confirmed* trough,
/// -1 after the most recently confirmed peak. A move of `reversal_pct`
/// percent from the running candidate extreme confirms it as a pivot.
/// Undefined until the first confirmation; never repaints.
pub(super) fn zigzag_direction(series: &BarSeries, reversal_pct: f64) -> Vec<Option<f64>> {
    let closes = series.closes();
    let n = closes.len();
    let mut out = vec![None; n];
    if n == 0 {
        return out;
    }
    let f = reversal_pct / 100.0;

    // Direction of the last confirmed swing; None until the first pivot.
    let mut direction: Option<f64> = None;
    // Candidate extremes (value, index). Before the first confirmation both
    // are tracked; afterwards only the one opposing the current direction.
    let mut cand_max = (closes[0], 0usize);
    let mut cand_min = (closes[0], 0usize);

    for t in 1..n {
        let c = closes[t];
        match direction {
            None => {
                if c > cand_max.0 {
                    cand_max = (c, t);
                }
                if c < cand_min.0 {
                    cand_min = (c, t);
                }
                let peak_confirmed = c <= cand_max.0 * (1.0 - f);
                let trough_confirmed = c >= cand_min.0 * (1.0 + f);
                // If both trigger at once, the more recent extreme is the
                // pivot being confirmed (a pivot precedes its confirmation).
                if peak_confirmed && (!trough_confirmed || cand_max.1 > cand_min.1) {
                    direction = Some(-1.0);
                    cand_min = (c, t);
                } else if trough_confirmed {
                    direction = Some(1.0);
                    cand_max = (c, t);
                }
            }
            Some(d) if d < 0.0 => {
                // Falling swing: watch for a trough confirmation.
                if c < cand_min.0 {
                    cand_min = (c, t);
                }
                if c >= cand_min.0 * (1.0 + f) {
                    direction = Some(1.0);
                    cand_max = (c, t);
                }
            }
            Some(_) => {
                // Rising swing: watch for a peak confirmation.
                if c > cand_max.0 {
                    cand_max = (c, t);
                }
                if c <= cand_max.0 * (1.0 - f) {
                    direction = Some(-1.0);
                    cand_min = (c, t);
                }
            }
        }
        out[t] = direction;
    }
    out
}
