//! Daily OHLCV bar ingestion, validation, and next-day direction labels.
//!
//! Input CSV format: UTF-8, header `date,open,high,low,close,volume`,
//! ISO-8601 dates, plain decimal numbers. Rows are re-sorted by date before
//! validation; duplicate dates are rejected.

use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Expected CSV header, in order.
pub const CSV_HEADER: [&str; 6] = ["date", "open", "high", "low", "close", "volume"];

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("failed to open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad header: expected `date,open,high,low,close,volume`, got `{0}`")]
    BadHeader(String),
    #[error("line {line}: {msg}")]
    MalformedRow { line: u64, msg: String },
    #[error("line {line}: invalid bar: {msg}")]
    InvalidBar { line: u64, msg: String },
    #[error("duplicate date {date}")]
    DuplicateDate { date: NaiveDate },
    #[error("no bars")]
    Empty,
    #[error("series too short: need at least {needed} bars, have {have}")]
    TooShort { needed: usize, have: usize },
    #[error("invalid bar: {0}")]
    Invariant(String),
    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One trading day of OHLCV data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Bar {
    /// Build a bar, enforcing the OHLC invariants:
    /// prices positive and finite, `high >= max(open, close)`,
    /// `low <= min(open, close)`, `volume >= 0`.
    pub fn new(
        date: NaiveDate,
        open: f64,
        high: f64,
        low: f64,
        close: f64,
        volume: f64,
    ) -> Result<Self, MarketDataError> {
        let bar = Bar {
            date,
            open,
            high,
            low,
            close,
            volume,
        };
        bar.validate()?;
        Ok(bar)
    }

    fn validate(&self) -> Result<(), MarketDataError> {
        let err = |msg: String| Err(MarketDataError::Invariant(msg));
        for (name, v) in [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return err(format!("{name} must be a positive finite number, got {v}"));
            }
        }
        if !self.volume.is_finite() || self.volume < 0.0 {
            return err(format!("volume must be non-negative, got {}", self.volume));
        }
        if self.high < self.open.max(self.close) {
            return err(format!(
                "high {} below max(open, close) = {}",
                self.high,
                self.open.max(self.close)
            ));
        }
        if self.low > self.open.min(self.close) {
            return err(format!(
                "low {} above min(open, close) = {}",
                self.low,
                self.open.min(self.close)
            ));
        }
        Ok(())
    }
}

/// An ordered, date-indexed series of daily bars.
///
/// Dates are strictly increasing; the constructor sorts its input and rejects
/// duplicates. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarSeries {
    bars: Vec<Bar>,
}

impl BarSeries {
    /// Build a series from bars in any order. Bars are sorted by date;
    /// duplicate dates are an error.
    pub fn new(mut bars: Vec<Bar>) -> Result<Self, MarketDataError> {
        bars.sort_by_key(|b| b.date);
        for w in bars.windows(2) {
            if w[0].date == w[1].date {
                return Err(MarketDataError::DuplicateDate { date: w[0].date });
            }
        }
        Ok(BarSeries { bars })
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.bars.iter().map(|b| b.date).collect()
    }

    /// The first `n` bars as a new series.
    pub fn prefix(&self, n: usize) -> BarSeries {
        BarSeries {
            bars: self.bars[..n.min(self.bars.len())].to_vec(),
        }
    }
}

impl std::ops::Index<usize> for BarSeries {
    type Output = Bar;
    fn index(&self, i: usize) -> &Bar {
        &self.bars[i]
    }
}

/// Next-day direction of the close: `Up` (+1) or `Down` (-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DirectionLabel {
    Down,
    Up,
}

impl DirectionLabel {
    /// +1 for `Up`, -1 for `Down`.
    pub fn value(self) -> i8 {
        match self {
            DirectionLabel::Up => 1,
            DirectionLabel::Down => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    /// Map a real-valued decision to a label; zero goes to `Up`.
    pub fn from_decision(x: f64) -> Self {
        if x >= 0.0 {
            DirectionLabel::Up
        } else {
            DirectionLabel::Down
        }
    }
}

impl fmt::Display for DirectionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectionLabel::Up => write!(f, "+1"),
            DirectionLabel::Down => write!(f, "-1"),
        }
    }
}

/// Load a validated series from CSV. Errors carry the offending line number.
pub fn load_series<P: AsRef<Path>>(path: P) -> Result<BarSeries, MarketDataError> {
    let path_str = path.as_ref().display().to_string();
    let file = std::fs::File::open(path.as_ref()).map_err(|source| MarketDataError::Io {
        path: path_str.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers = reader
        .headers()
        .map_err(|e| MarketDataError::MalformedRow {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(MarketDataError::BadHeader(
            headers.iter().collect::<Vec<_>>().join(","),
        ));
    }

    let mut bars = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| MarketDataError::MalformedRow {
            line: e
                .position()
                .map(|p| p.line())
                .unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 6 {
            return Err(MarketDataError::MalformedRow {
                line,
                msg: format!("expected 6 columns, got {}", record.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| {
            MarketDataError::MalformedRow {
                line,
                msg: format!("bad date `{}`: {e}", &record[0]),
            }
        })?;
        let mut nums = [0.0f64; 5];
        for (slot, (field, name)) in nums.iter_mut().zip(
            record
                .iter()
                .skip(1)
                .zip(["open", "high", "low", "close", "volume"]),
        ) {
            *slot = field.parse::<f64>().map_err(|e| MarketDataError::MalformedRow {
                line,
                msg: format!("bad {name} `{field}`: {e}"),
            })?;
        }
        let bar = Bar::new(date, nums[0], nums[1], nums[2], nums[3], nums[4]).map_err(|e| {
            MarketDataError::InvalidBar {
                line,
                msg: e.to_string(),
            }
        })?;
        bars.push(bar);
    }
    if bars.is_empty() {
        return Err(MarketDataError::Empty);
    }
    BarSeries::new(bars)
}

/// Write a series to CSV in the `load_series` format.
///
/// Round-trips: `load_series(save_series(s)) == s` for any valid series.
pub fn save_series<P: AsRef<Path>>(series: &BarSeries, path: P) -> Result<(), MarketDataError> {
    let path_str = path.as_ref().display().to_string();
    let mut out = String::new();
    out.push_str(&CSV_HEADER.join(","));
    out.push('\n');
    for b in series.bars() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            b.date.format("%Y-%m-%d"),
            b.open,
            b.high,
            b.low,
            b.close,
            b.volume
        ));
    }
    std::fs::write(path.as_ref(), out).map_err(|source| MarketDataError::Write {
        path: path_str,
        source,
    })
}

/// Label each day with the direction of the next day's close:
/// `label[t] = Up` iff `close[t+1] > close[t]`, `Down` otherwise
/// (unchanged closes count as `Down`). The last bar receives no label.
pub fn label_direction(series: &BarSeries) -> Result<Vec<DirectionLabel>, MarketDataError> {
    if series.len() < 2 {
        return Err(MarketDataError::TooShort {
            needed: 2,
            have: series.len(),
        });
    }
    Ok(series
        .bars()
        .windows(2)
        .map(|w| {
            if w[1].close > w[0].close {
                DirectionLabel::Up
            } else {
                DirectionLabel::Down
            }
        })
        .collect())
}
