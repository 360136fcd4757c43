//! Self-contained bar-series generator: a geometric random walk whose
//! next-day drift can depend on a smooth function of the recent returns,
//! giving a tunable, learnable pattern for end-to-end testing.

use chrono::{Datelike, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use super::{config_err, ExperimentError};
use crate::market_data::{Bar, BarSeries};

/// Daily log-return volatility of the generated walk.
const DAILY_VOL: f64 = 0.01;
/// How much each of the five most recent returns contributes to the signal.
const LAG_WEIGHTS: [f64; 5] = [0.35, 0.25, 0.2, 0.12, 0.08];
/// Peak drift at full signal strength, in units of `DAILY_VOL`.
const DRIFT_SCALE: f64 = 1.1;
/// Steepness of the drift response to the recent-return summary.
const DRIFT_SHARPNESS: f64 = 1.5;

fn next_weekday(mut d: NaiveDate) -> NaiveDate {
    loop {
        d = d.succ_opt().expect("date range is tiny");
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            return d;
        }
    }
}

/// Weighted recent-return summary in volatility units; the drift of the
/// next day is `signal · DRIFT_SCALE · DAILY_VOL · tanh(DRIFT_SHARPNESS·z)`.
/// Exposed to tests so probes can reconstruct the generating window.
pub(crate) fn signal_summary(recent_returns: &[f64]) -> f64 {
    let mut z = 0.0;
    for (w, r) in LAG_WEIGHTS.iter().zip(recent_returns.iter().rev()) {
        z += w * r;
    }
    z / DAILY_VOL
}

/// Generate `n_days` daily bars. `signal_strength` = 0 is a pure random
/// walk; 1 gives the drift its full amplitude. Same seed, same series.
pub fn gen_synthetic(
    n_days: usize,
    seed: u64,
    signal_strength: f64,
) -> Result<BarSeries, ExperimentError> {
    if n_days < 100 {
        return Err(config_err(format!(
            "synthetic series needs at least 100 days, got {n_days}"
        )));
    }
    if !(signal_strength.is_finite() && (0.0..=1.0).contains(&signal_strength)) {
        return Err(config_err(format!(
            "signal strength must lie in [0, 1], got {signal_strength}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let standard = Normal::new(0.0, 1.0).expect("valid parameters");
    let volume_dist = LogNormal::new(1e5f64.ln(), 0.5).expect("valid parameters");

    let mut bars = Vec::with_capacity(n_days);
    let mut returns: Vec<f64> = Vec::with_capacity(n_days);
    let mut prev_close = 100.0f64;
    let mut date = NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date");

    for day in 0..n_days {
        let drift = signal_strength
            * DRIFT_SCALE
            * DAILY_VOL
            * (DRIFT_SHARPNESS * signal_summary(&returns)).tanh();
        let r = drift + DAILY_VOL * standard.sample(&mut rng);
        let close = prev_close * r.exp();

        let open = prev_close * (0.3 * DAILY_VOL * standard.sample(&mut rng)).exp();
        let body_hi = open.max(close);
        let body_lo = open.min(close);
        let high = body_hi * (0.5 * DAILY_VOL * standard.sample(&mut rng).abs()).exp();
        let low = body_lo * (-0.5 * DAILY_VOL * standard.sample(&mut rng).abs()).exp();
        let volume = volume_dist.sample(&mut rng);

        bars.push(
            Bar::new(date, open, high, low, close, volume)
                .expect("generated values respect bar invariants"),
        );
        returns.push(r);
        prev_close = close;
        if day + 1 < n_days {
            date = next_weekday(date);
        }
    }
    Ok(BarSeries::new(bars).expect("dates strictly increase"))
}
