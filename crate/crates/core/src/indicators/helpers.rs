//! Shared numeric primitives for indicator computations.
//!
//! Everything here works on `Vec<Option<f64>>` so warm-up prefixes compose:
//! an input may start with an undefined run, but once defined it stays
//! defined. Windowed statistics are recomputed from scratch for every window
//! (no rolling-sum shortcuts) so a value depends bit-for-bit only on the bars
//! inside its window.

/// Indices and inputs: first defined index of a warm-up-prefixed series.
pub(crate) fn first_defined(values: &[Option<f64>]) -> Option<usize> {
    values.iter().position(Option::is_some)
}

/// Lift a fully-defined series into the `Option` representation.
pub(crate) fn defined(values: &[f64]) -> Vec<Option<f64>> {
    values.iter().copied().map(Some).collect()
}

/// Simple moving average with window `period`, recomputed per window.
pub(crate) fn sma_opt(values: &[Option<f64>], period: usize) -> Vec<Option<f64>> {
    let n = values.len();
    let mut out = vec![None; n];
    let Some(start) = first_defined(values) else {
        return out;
    };
    for t in (start + period - 1)..n {
        let lo = t + 1 - period;
        let sum: f64 = values[lo..=t].iter().map(|v| v.unwrap()).sum();
        out[t] = Some(sum / period as f64);
    }
    out
}

/// Exponential moving average seeded with the SMA of the first `period`
/// defined values; thereafter `ema[t] = k*x[t] + (1-k)*ema[t-1]` with
/// `k = 2/(period+1)`.
pub(crate) fn ema_opt(values: &[Option<f64>], period: usize) -> Vec<Option<f64>> {
    let n = values.len();
    let mut out = vec![None; n];
    let Some(start) = first_defined(values) else {
        return out;
    };
    let seed_at = start + period - 1;
    if seed_at >= n {
        return out;
    }
    let seed: f64 = values[start..=seed_at].iter().map(|v| v.unwrap()).sum::<f64>() / period as f64;
    let k = 2.0 / (period as f64 + 1.0);
    let mut prev = seed;
    out[seed_at] = Some(seed);
    for t in (seed_at + 1)..n {
        prev = k * values[t].unwrap() + (1.0 - k) * prev;
        out[t] = Some(prev);
    }
    out
}

/// Wilder smoothing: seed with the mean of the first `period` defined values,
/// then `w[t] = (w[t-1]*(period-1) + x[t]) / period`.
pub(crate) fn wilder_opt(values: &[Option<f64>], period: usize) -> Vec<Option<f64>> {
    let n = values.len();
    let mut out = vec![None; n];
    let Some(start) = first_defined(values) else {
        return out;
    };
    let seed_at = start + period - 1;
    if seed_at >= n {
        return out;
    }
    let seed: f64 = values[start..=seed_at].iter().map(|v| v.unwrap()).sum::<f64>() / period as f64;
    let p = period as f64;
    let mut prev = seed;
    out[seed_at] = Some(seed);
    for t in (seed_at + 1)..n {
        prev = (prev * (p - 1.0) + values[t].unwrap()) / p;
        out[t] = Some(prev);
    }
    out
}

/// Typical price (H+L+C)/3 per bar.
pub(crate) fn typical_price(high: &[f64], low: &[f64], close: &[f64]) -> Vec<f64> {
    high.iter()
        .zip(low)
        .zip(close)
        .map(|((&h, &l), &c)| (h + l + c) / 3.0)
        .collect()
}

/// True range: `TR[0] = H-L`, `TR[t] = max(H-L, |H-Cprev|, |L-Cprev|)`.
pub(crate) fn true_range(high: &[f64], low: &[f64], close: &[f64]) -> Vec<f64> {
    let n = close.len();
    let mut tr = Vec::with_capacity(n);
    for t in 0..n {
        if t == 0 {
            tr.push(high[0] - low[0]);
        } else {
            let hl = high[t] - low[t];
            let hc = (high[t] - close[t - 1]).abs();
            let lc = (low[t] - close[t - 1]).abs();
            tr.push(hl.max(hc).max(lc));
        }
    }
    tr
}

/// Close-location value per bar: `((C-L) - (H-C)) / (H-L)`, zero when the
/// bar has no range.
pub(crate) fn clv_per_bar(high: &[f64], low: &[f64], close: &[f64]) -> Vec<f64> {
    high.iter()
        .zip(low)
        .zip(close)
        .map(|((&h, &l), &c)| {
            let range = h - l;
            if range == 0.0 {
                0.0
            } else {
                ((c - l) - (h - c)) / range
            }
        })
        .collect()
}
