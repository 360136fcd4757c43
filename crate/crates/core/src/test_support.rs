//! Shared helpers for unit tests: tiny deterministic fixtures that do not
//! depend on the crate's own RNG plumbing.

use chrono::NaiveDate;

use crate::market_data::{Bar, BarSeries};

pub(crate) fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

/// Flat bars (open = high = low = close) at the given closes, one per
/// calendar day, volume 100.
pub(crate) fn series_from_closes(closes: &[f64]) -> BarSeries {
    let bars = closes
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let d = date("2020-01-01") + chrono::Days::new(i as u64);
            Bar::new(d, c, c, c, c, 100.0).unwrap()
        })
        .collect();
    BarSeries::new(bars).unwrap()
}

/// xorshift64* — a self-contained deterministic generator so test fixtures
/// cannot drift with RNG crate versions.
pub(crate) struct XorShift(pub u64);

impl XorShift {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// A plausible OHLCV random walk honoring every bar invariant.
pub(crate) fn random_series(n: usize, seed: u64) -> BarSeries {
    let mut rng = XorShift(seed.max(1));
    let mut close = 100.0;
    let mut bars = Vec::with_capacity(n);
    for i in 0..n {
        let open = close;
        close *= 1.0 + rng.range(-0.02, 0.02);
        let body_hi = open.max(close);
        let body_lo = open.min(close);
        let high = body_hi * (1.0 + rng.range(0.0, 0.01));
        let low = body_lo * (1.0 - rng.range(0.0, 0.01));
        let volume = rng.range(1e4, 1e6);
        let d = date("2015-01-01") + chrono::Days::new(i as u64);
        bars.push(Bar::new(d, open, high, low, close, volume).unwrap());
    }
    BarSeries::new(bars).unwrap()
}

pub(crate) fn assert_close(actual: f64, expected: f64, tol: f64) {
    assert!(
        (actual - expected).abs() <= tol,
        "expected {expected}, got {actual} (tol {tol})"
    );
}
