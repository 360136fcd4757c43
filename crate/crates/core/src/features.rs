//! Aligned feature matrix assembly and train-window min-max scaling.
//!
//! `assemble` turns a bar series plus an indicator list into a dense matrix:
//! one row per day that (a) lies past every indicator's warm-up and (b) has
//! a next-day direction label. `Scaler` then maps each column into [0, 1]
//! using extrema measured on training rows only; out-of-range test values
//! are clamped so the contract survives regime shifts without leaking
//! test-set statistics into the fit.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::{self, IndicatorError, IndicatorSpec};
use crate::market_data::{label_direction, BarSeries, DirectionLabel, MarketDataError};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
    #[error(transparent)]
    MarketData(#[from] MarketDataError),
    #[error("no indicator specs supplied")]
    NoSpecs,
    #[error("no labeled rows survive the warm-up (max warm-up {warm_up}, last labeled index {last_labeled})")]
    EmptyAfterWarmUp { warm_up: usize, last_labeled: isize },
    #[error("matrix shape mismatch: {msg}")]
    ShapeMismatch { msg: String },
    #[error("column count mismatch: scaler has {scaler}, matrix has {matrix}")]
    ColumnCountMismatch { scaler: usize, matrix: usize },
    #[error("cannot fit a scaler on an empty matrix")]
    EmptyFit,
}

/// Dense row-major feature matrix with aligned labels and dates.
///
/// Row `t`'s label is the close-to-close direction from its own day to the
/// next; the final bar of the source series therefore never becomes a row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    columns: Vec<String>,
    data: Vec<f64>,
    labels: Vec<DirectionLabel>,
    dates: Vec<NaiveDate>,
}

impl FeatureMatrix {
    pub fn from_parts(
        columns: Vec<String>,
        data: Vec<f64>,
        labels: Vec<DirectionLabel>,
        dates: Vec<NaiveDate>,
    ) -> Result<Self, FeatureError> {
        if columns.is_empty() {
            return Err(FeatureError::NoSpecs);
        }
        if labels.len() != dates.len() {
            return Err(FeatureError::ShapeMismatch {
                msg: format!("{} labels vs {} dates", labels.len(), dates.len()),
            });
        }
        if data.len() != labels.len() * columns.len() {
            return Err(FeatureError::ShapeMismatch {
                msg: format!(
                    "{} values cannot form {} rows of {} columns",
                    data.len(),
                    labels.len(),
                    columns.len()
                ),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(FeatureError::ShapeMismatch {
                msg: format!("non-finite feature value {bad}"),
            });
        }
        Ok(FeatureMatrix {
            columns,
            data,
            labels,
            dates,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.n_cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn labels(&self) -> &[DirectionLabel] {
        &self.labels
    }

    /// Labels as ±1 reals, the encoding shared by every classifier here.
    pub fn labels_pm1(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.as_f64()).collect()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    /// Copy of the rows `range.start..range.end` with their labels/dates.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> FeatureMatrix {
        let c = self.n_cols();
        FeatureMatrix {
            columns: self.columns.clone(),
            data: self.data[range.start * c..range.end * c].to_vec(),
            labels: self.labels[range.clone()].to_vec(),
            dates: self.dates[range].to_vec(),
        }
    }

    /// CSV rendering: date, label, then one column per feature.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("date,label");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for i in 0..self.n_rows() {
            out.push_str(&self.dates[i].format("%Y-%m-%d").to_string());
            out.push(',');
            out.push_str(&self.labels[i].to_string());
            for v in self.row(i) {
                out.push(',');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Compute all indicators, drop warm-up rows and the final (label-less) bar,
/// and pack the rest into a matrix. Column order follows `specs`.
pub fn assemble(
    series: &BarSeries,
    specs: &[IndicatorSpec],
) -> Result<FeatureMatrix, FeatureError> {
    if specs.is_empty() {
        return Err(FeatureError::NoSpecs);
    }
    let computed = indicators::compute_all(specs, series)?;
    let warm_up = computed.iter().map(|s| s.warm_up()).max().unwrap();
    let n = series.len();
    // Last row that still has a next-day label.
    let last_labeled = n as isize - 2;
    if (warm_up as isize) > last_labeled {
        return Err(FeatureError::EmptyAfterWarmUp {
            warm_up,
            last_labeled,
        });
    }
    let labels = label_direction(series)?;
    let dates = series.dates();

    let n_rows = last_labeled as usize - warm_up + 1;
    let mut data = Vec::with_capacity(n_rows * specs.len());
    let mut kept_labels = Vec::with_capacity(n_rows);
    let mut kept_dates = Vec::with_capacity(n_rows);
    for t in warm_up..=last_labeled as usize {
        for series_j in &computed {
            data.push(series_j.get(t).expect("defined past warm-up"));
        }
        kept_labels.push(labels[t]);
        kept_dates.push(dates[t]);
    }
    let columns = specs.iter().map(|s| s.kind.name().to_string()).collect();
    FeatureMatrix::from_parts(columns, data, kept_labels, kept_dates)
}

/// Per-column min-max statistics measured on a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Scaler {
    /// Column-wise extrema of the training rows.
    pub fn fit(train: &FeatureMatrix) -> Result<Scaler, FeatureError> {
        if train.is_empty() {
            return Err(FeatureError::EmptyFit);
        }
        let c = train.n_cols();
        let mut min = vec![f64::INFINITY; c];
        let mut max = vec![f64::NEG_INFINITY; c];
        for row in train.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v < min[j] {
                    min[j] = v;
                }
                if v > max[j] {
                    max[j] = v;
                }
            }
        }
        Ok(Scaler { min, max })
    }

    pub fn n_cols(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    /// `(x - min) / (max - min)` clamped to [0, 1]; a constant training
    /// column (min = max) maps everything to the midpoint 0.5.
    pub fn transform(&self, m: &FeatureMatrix) -> Result<FeatureMatrix, FeatureError> {
        if m.n_cols() != self.n_cols() {
            return Err(FeatureError::ColumnCountMismatch {
                scaler: self.n_cols(),
                matrix: m.n_cols(),
            });
        }
        let c = m.n_cols();
        let mut out = m.clone();
        for i in 0..m.n_rows() {
            for j in 0..c {
                let v = m.data[i * c + j];
                out.data[i * c + j] = self.transform_one(j, v);
            }
        }
        Ok(out)
    }

    fn transform_one(&self, j: usize, v: f64) -> f64 {
        let (lo, hi) = (self.min[j], self.max[j]);
        if lo == hi {
            0.5
        } else {
            ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicators::{IndicatorKind, IndicatorSpec};
    use crate::test_support::{assert_close, random_series, series_from_closes, XorShift};

    fn sma_spec(period: f64) -> IndicatorSpec {
        IndicatorSpec::new(IndicatorKind::Sma, &[("period", period)])
    }

    fn matrix_from_rows(rows: &[&[f64]]) -> FeatureMatrix {
        let n_cols = rows[0].len();
        let columns = (0..n_cols).map(|j| format!("c{j}")).collect();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let labels = vec![DirectionLabel::Up; rows.len()];
        let dates = (0..rows.len())
            .map(|i| crate::test_support::date("2020-01-01") + chrono::Days::new(i as u64))
            .collect();
        FeatureMatrix::from_parts(columns, data, labels, dates).unwrap()
    }

    #[test]
    fn assemble_trims_warm_up_and_final_unlabeled_bar() {
        let s = random_series(100, 3);
        // Max warm-up 35 comes from SMA(36).
        let specs = vec![sma_spec(36.0), sma_spec(2.0)];
        let m = assemble(&s, &specs).unwrap();
        assert_eq!(m.n_rows(), 64); // indices 35..=98
        assert_eq!(m.n_cols(), 2);
        assert_eq!(m.dates()[0], s.dates()[35]);
        assert_eq!(m.dates()[63], s.dates()[98]);
    }

    #[test]
    fn assemble_errors_when_no_labeled_row_survives() {
        // SMA(10) warm-up is 9; a 10-bar series labels only indices 0..=8.
        let s = random_series(10, 4);
        let err = assemble(&s, &[sma_spec(10.0)]).unwrap_err();
        assert!(matches!(err, FeatureError::EmptyAfterWarmUp { .. }));
    }

    #[test]
    fn assemble_aligns_labels_with_next_day_direction() {
        let closes = [10.0, 11.0, 10.5, 10.5, 12.0, 11.0, 11.5, 11.2];
        let s = series_from_closes(&closes);
        let m = assemble(&s, &[sma_spec(2.0)]).unwrap();
        // warm-up 1, last labeled index 6 -> rows are days 1..=6.
        assert_eq!(m.n_rows(), 6);
        for (i, t) in (1..=6).enumerate() {
            let expected = if closes[t + 1] > closes[t] {
                DirectionLabel::Up
            } else {
                DirectionLabel::Down
            };
            assert_eq!(m.labels()[i], expected, "row {i}");
        }
    }

    #[test]
    fn assemble_keeps_column_order() {
        let s = random_series(60, 7);
        let specs = vec![
            IndicatorSpec::new(IndicatorKind::Momentum, &[("period", 10.0)]),
            sma_spec(5.0),
        ];
        let m = assemble(&s, &specs).unwrap();
        assert_eq!(m.columns(), &["Momentum".to_string(), "SMA".to_string()]);
        let mom = crate::indicators::compute(&specs[0], &s).unwrap();
        let sma = crate::indicators::compute(&specs[1], &s).unwrap();
        for i in 0..m.n_rows() {
            let t = i + 10; // max warm-up is Momentum's 10
            assert_eq!(m.row(i)[0], mom.get(t).unwrap());
            assert_eq!(m.row(i)[1], sma.get(t).unwrap());
        }
    }

    #[test]
    fn fit_finds_column_extrema() {
        let m = matrix_from_rows(&[&[2.0, -1.0], &[4.0, -3.0]]);
        let s = Scaler::fit(&m).unwrap();
        assert_eq!(s.min(), &[2.0, -3.0]);
        assert_eq!(s.max(), &[4.0, -1.0]);
    }

    #[test]
    fn fit_on_single_row_gives_min_equal_max() {
        let m = matrix_from_rows(&[&[1.5, 2.5]]);
        let s = Scaler::fit(&m).unwrap();
        assert_eq!(s.min(), s.max());
    }

    #[test]
    fn fit_matches_brute_force_on_random_matrix() {
        let mut rng = XorShift(77);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..28).map(|_| rng.range(-100.0, 100.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = matrix_from_rows(&refs);
        let s = Scaler::fit(&m).unwrap();
        for j in 0..28 {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(s.min()[j], lo);
            assert_eq!(s.max()[j], hi);
        }
    }

    #[test]
    fn transform_maps_training_extrema_to_exact_endpoints() {
        let m = matrix_from_rows(&[&[2.0, 5.0], &[4.0, 1.0], &[3.0, 3.0]]);
        let s = Scaler::fit(&m).unwrap();
        let t = s.transform(&m).unwrap();
        let col = |j: usize| -> Vec<f64> { (0..t.n_rows()).map(|i| t.row(i)[j]).collect() };
        assert!(col(0).contains(&0.0) && col(0).contains(&1.0));
        assert!(col(1).contains(&0.0) && col(1).contains(&1.0));
        for i in 0..t.n_rows() {
            for &v in t.row(i) {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn transform_clamps_out_of_range_test_values() {
        let train = matrix_from_rows(&[&[0.0], &[10.0]]);
        let s = Scaler::fit(&train).unwrap();
        let test = matrix_from_rows(&[&[-5.0], &[15.0], &[5.0]]);
        let t = s.transform(&test).unwrap();
        assert_eq!(t.row(0)[0], 0.0);
        assert_eq!(t.row(1)[0], 1.0);
        assert_eq!(t.row(2)[0], 0.5);
    }

    #[test]
    fn constant_training_column_maps_to_midpoint() {
        let train = matrix_from_rows(&[&[7.0], &[7.0]]);
        let s = Scaler::fit(&train).unwrap();
        let test = matrix_from_rows(&[&[7.0], &[123.0]]);
        let t = s.transform(&test).unwrap();
        assert_eq!(t.row(0)[0], 0.5);
        assert_eq!(t.row(1)[0], 0.5);
    }

    #[test]
    fn transform_is_affine_within_training_range() {
        let mut rng = XorShift(123);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..5).map(|_| rng.range(-10.0, 10.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = matrix_from_rows(&refs);
        let s = Scaler::fit(&m).unwrap();
        let t = s.transform(&m).unwrap();
        for i in 0..m.n_rows() {
            for j in 0..m.n_cols() {
                let expected = (m.row(i)[j] - s.min()[j]) / (s.max()[j] - s.min()[j]);
                assert_close(t.row(i)[j], expected, 1e-15);
            }
        }
    }

    #[test]
    fn transform_preserves_within_column_order() {
        let mut rng = XorShift(321);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![rng.range(0.0, 1000.0)])
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = matrix_from_rows(&refs);
        let s = Scaler::fit(&m).unwrap();
        let t = s.transform(&m).unwrap();
        for a in 0..m.n_rows() {
            for b in 0..m.n_rows() {
                if m.row(a)[0] < m.row(b)[0] {
                    assert!(t.row(a)[0] <= t.row(b)[0]);
                }
            }
        }
    }

    #[test]
    fn scaler_is_unaffected_by_test_set_outliers() {
        let train = matrix_from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let scaler = Scaler::fit(&train).unwrap();
        let before = scaler.clone();
        let outliers = matrix_from_rows(&[&[1e9, -1e9]]);
        let _ = scaler.transform(&outliers).unwrap();
        assert_eq!(scaler, before);
        // Re-fitting on train alone reproduces the same statistics.
        assert_eq!(Scaler::fit(&train).unwrap(), before);
    }

    #[test]
    fn transform_rejects_column_count_mismatch() {
        let train = matrix_from_rows(&[&[1.0, 2.0]]);
        let scaler = Scaler::fit(&train).unwrap();
        let other = matrix_from_rows(&[&[1.0]]);
        assert!(matches!(
            scaler.transform(&other),
            Err(FeatureError::ColumnCountMismatch { .. })
        ));
    }

    #[test]
    fn slice_rows_keeps_alignment() {
        let s = random_series(80, 10);
        let m = assemble(&s, &[sma_spec(5.0), sma_spec(3.0)]).unwrap();
        let part = m.slice_rows(10..20);
        assert_eq!(part.n_rows(), 10);
        for i in 0..10 {
            assert_eq!(part.row(i), m.row(10 + i));
            assert_eq!(part.labels()[i], m.labels()[10 + i]);
            assert_eq!(part.dates()[i], m.dates()[10 + i]);
        }
    }

    #[test]
    fn csv_rendering_has_header_and_one_line_per_row() {
        let s = random_series(40, 2);
        let m = assemble(&s, &[sma_spec(3.0)]).unwrap();
        let csv = m.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "date,label,SMA");
        assert_eq!(lines.len(), 1 + m.n_rows());
        assert!(lines[1].starts_with(&m.dates()[0].format("%Y-%m-%d").to_string()));
    }
}
