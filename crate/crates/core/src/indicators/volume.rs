//! Volume family: OBV, CLV, CMF, Chaikin A/D line.

use super::helpers::clv_per_bar;
use crate::market_data::BarSeries;

/// On-Balance Volume: starts at 0, adds volume on up closes, subtracts on
/// down closes, carries on unchanged closes.
pub(super) fn obv(series: &BarSeries) -> Vec<Option<f64>> {
    let closes = series.closes();
    let bars = series.bars();
    let n = closes.len();
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    for t in 0..n {
        if t > 0 {
            if closes[t] > closes[t - 1] {
                acc += bars[t].volume;
            } else if closes[t] < closes[t - 1] {
                acc -= bars[t].volume;
            }
        }
        out.push(Some(acc));
    }
    out
}

/// Close Location Value: `((C-L) - (H-C)) / (H-L)` in [-1, 1]; a rangeless
/// bar gives 0.
pub(super) fn clv(series: &BarSeries) -> Vec<Option<f64>> {
    let bars = series.bars();
    let highs: Vec<f64> = bars.iter().map(|b| b.high).collect();
    let lows: Vec<f64> = bars.iter().map(|b| b.low).collect();
    let closes = series.closes();
    clv_per_bar(&highs, &lows, &closes)
        .into_iter()
        .map(Some)
        .collect()
}

/// Chaikin Money Flow: windowed sum of CLV-weighted volume over windowed
/// volume. A zero-volume window gives 0.
pub(super) fn cmf(series: &BarSeries, period: usize) -> Vec<Option<f64>> {
    let bars = series.bars();
    let highs: Vec<f64> = bars.iter().map(|b| b.high).collect();
    let lows: Vec<f64> = bars.iter().map(|b| b.low).collect();
    let closes = series.closes();
    let clv = clv_per_bar(&highs, &lows, &closes);
    let n = bars.len();
    let mut out = vec![None; n];
    for t in (period - 1)..n {
        let lo = t + 1 - period;
        let flow: f64 = (lo..=t).map(|i| clv[i] * bars[i].volume).sum();
        let vol: f64 = (lo..=t).map(|i| bars[i].volume).sum();
        out[t] = Some(if vol == 0.0 { 0.0 } else { flow / vol });
    }
    out
}

/// Chaikin Accumulation/Distribution line: cumulative CLV-weighted volume.
pub(super) fn chaikin_ad(series: &BarSeries) -> Vec<Option<f64>> {
    let bars = series.bars();
    let highs: Vec<f64> = bars.iter().map(|b| b.high).collect();
    let lows: Vec<f64> = bars.iter().map(|b| b.low).collect();
    let closes = series.closes();
    let clv = clv_per_bar(&highs, &lows, &closes);
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(bars.len());
    for t in 0..bars.len() {
        acc += clv[t] * bars[t].volume;
        out.push(Some(acc));
    }
    out
}
