//! The 28-indicator technical-analysis catalog.
//!
//! Five categories: moving averages (EMA, SMA, EVWMA, ZLEMA, TRIX, MACD),
//! trend detection (EMV, DEMA, ADX, AROON, CCI, TDI, VHF, DPO, ZigZag),
//! oscillators (RSI, ATR, Volatility, ROC, CMO, MFI, WPR), volume (OBV, CLV,
//! CMF, ChaikinAD), and momentum (Momentum, Stoch).
//!
//! Every computation is causal: the value at index `t` depends only on bars
//! `0..=t`. Values inside the warm-up period are undefined (`None`), never
//! imputed. Multi-output indicators are reduced to one scalar each so the
//! feature count stays exactly 28: MACD emits line minus signal, AROON emits
//! up minus down, Stoch emits raw %K, and ZigZag emits the direction of the
//! last confirmed swing.

mod moving_averages;
mod oscillators;
mod trend;
mod volume;

pub(crate) mod helpers;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::BarSeries;

#[derive(Debug, Error)]
pub enum IndicatorError {
    #[error("{kind}: missing required parameter `{name}`")]
    MissingParam { kind: IndicatorKind, name: String },
    #[error("{kind}: parameter `{name}` must be {requirement}, got {value}")]
    BadParam {
        kind: IndicatorKind,
        name: String,
        requirement: String,
        value: f64,
    },
    #[error("{kind}: series of length {have} is too short (needs more than {warm_up} bars)")]
    SeriesTooShort {
        kind: IndicatorKind,
        have: usize,
        warm_up: usize,
    },
    #[error("{kind}: no value became defined over {have} bars")]
    NeverDefined { kind: IndicatorKind, have: usize },
}

/// The closed catalog of indicator names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndicatorKind {
    Ema,
    Sma,
    Evwma,
    Zlema,
    Trix,
    Macd,
    Emv,
    Dema,
    Adx,
    Aroon,
    Cci,
    Tdi,
    Vhf,
    Dpo,
    ZigZag,
    Rsi,
    Atr,
    Volatility,
    Roc,
    Cmo,
    Mfi,
    Wpr,
    Obv,
    Clv,
    Cmf,
    ChaikinAd,
    Momentum,
    Stoch,
}

/// Table-1 category of an indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndicatorCategory {
    MovingAverages,
    TrendDetection,
    Oscillators,
    Volume,
    Momentum,
}

impl IndicatorKind {
    pub const ALL: [IndicatorKind; 28] = [
        IndicatorKind::Ema,
        IndicatorKind::Sma,
        IndicatorKind::Evwma,
        IndicatorKind::Zlema,
        IndicatorKind::Trix,
        IndicatorKind::Macd,
        IndicatorKind::Emv,
        IndicatorKind::Dema,
        IndicatorKind::Adx,
        IndicatorKind::Aroon,
        IndicatorKind::Cci,
        IndicatorKind::Tdi,
        IndicatorKind::Vhf,
        IndicatorKind::Dpo,
        IndicatorKind::ZigZag,
        IndicatorKind::Rsi,
        IndicatorKind::Atr,
        IndicatorKind::Volatility,
        IndicatorKind::Roc,
        IndicatorKind::Cmo,
        IndicatorKind::Mfi,
        IndicatorKind::Wpr,
        IndicatorKind::Obv,
        IndicatorKind::Clv,
        IndicatorKind::Cmf,
        IndicatorKind::ChaikinAd,
        IndicatorKind::Momentum,
        IndicatorKind::Stoch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IndicatorKind::Ema => "EMA",
            IndicatorKind::Sma => "SMA",
            IndicatorKind::Evwma => "EVWMA",
            IndicatorKind::Zlema => "ZLEMA",
            IndicatorKind::Trix => "TRIX",
            IndicatorKind::Macd => "MACD",
            IndicatorKind::Emv => "EMV",
            IndicatorKind::Dema => "DEMA",
            IndicatorKind::Adx => "ADX",
            IndicatorKind::Aroon => "AROON",
            IndicatorKind::Cci => "CCI",
            IndicatorKind::Tdi => "TDI",
            IndicatorKind::Vhf => "VHF",
            IndicatorKind::Dpo => "DPO",
            IndicatorKind::ZigZag => "ZigZag",
            IndicatorKind::Rsi => "RSI",
            IndicatorKind::Atr => "ATR",
            IndicatorKind::Volatility => "Volatility",
            IndicatorKind::Roc => "ROC",
            IndicatorKind::Cmo => "CMO",
            IndicatorKind::Mfi => "MFI",
            IndicatorKind::Wpr => "WPR",
            IndicatorKind::Obv => "OBV",
            IndicatorKind::Clv => "CLV",
            IndicatorKind::Cmf => "CMF",
            IndicatorKind::ChaikinAd => "ChaikinAD",
            IndicatorKind::Momentum => "Momentum",
            IndicatorKind::Stoch => "Stoch",
        }
    }

    pub fn category(self) -> IndicatorCategory {
        use IndicatorKind::*;
        match self {
            Ema | Sma | Evwma | Zlema | Trix | Macd => IndicatorCategory::MovingAverages,
            Emv | Dema | Adx | Aroon | Cci | Tdi | Vhf | Dpo | ZigZag => {
                IndicatorCategory::TrendDetection
            }
            Rsi | Atr | Volatility | Roc | Cmo | Mfi | Wpr => IndicatorCategory::Oscillators,
            Obv | Clv | Cmf | ChaikinAd => IndicatorCategory::Volume,
            Momentum | Stoch => IndicatorCategory::Momentum,
        }
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One indicator with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSpec {
    pub kind: IndicatorKind,
    /// Named parameters; all values must be positive.
    pub params: BTreeMap<String, f64>,
}

impl IndicatorSpec {
    pub fn new(kind: IndicatorKind, params: &[(&str, f64)]) -> Self {
        IndicatorSpec {
            kind,
            params: params
                .iter()
                .map(|&(k, v)| (k.to_string(), v))
                .collect(),
        }
    }

    fn param(&self, name: &str) -> Result<f64, IndicatorError> {
        let v = *self
            .params
            .get(name)
            .ok_or_else(|| IndicatorError::MissingParam {
                kind: self.kind,
                name: name.to_string(),
            })?;
        if !(v.is_finite() && v > 0.0) {
            return Err(IndicatorError::BadParam {
                kind: self.kind,
                name: name.to_string(),
                requirement: "positive".to_string(),
                value: v,
            });
        }
        Ok(v)
    }

    /// Integer-valued positive parameter (a period).
    fn period(&self, name: &str) -> Result<usize, IndicatorError> {
        let v = self.param(name)?;
        if v.fract() != 0.0 {
            return Err(IndicatorError::BadParam {
                kind: self.kind,
                name: name.to_string(),
                requirement: "a whole number".to_string(),
                value: v,
            });
        }
        Ok(v as usize)
    }
}

/// A time-aligned indicator value series with an explicit warm-up period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub kind: IndicatorKind,
    values: Vec<Option<f64>>,
    warm_up: usize,
}

impl IndicatorSeries {
    /// Wrap raw values, deriving `warm_up` as the index of the first defined
    /// entry. Every entry from `warm_up` on must be defined and finite.
    fn from_values(
        kind: IndicatorKind,
        values: Vec<Option<f64>>,
    ) -> Result<Self, IndicatorError> {
        let warm_up = values
            .iter()
            .position(Option::is_some)
            .ok_or(IndicatorError::NeverDefined {
                kind,
                have: values.len(),
            })?;
        for (t, v) in values.iter().enumerate().skip(warm_up) {
            match v {
                Some(x) if x.is_finite() => {}
                Some(x) => panic!("{kind}: non-finite value {x} at index {t}"),
                None => panic!("{kind}: undefined value at index {t} after warm-up {warm_up}"),
            }
        }
        Ok(IndicatorSeries {
            kind,
            values,
            warm_up,
        })
    }

    /// Index of the first defined value.
    pub fn warm_up(&self) -> usize {
        self.warm_up
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, t: usize) -> Option<f64> {
        self.values.get(t).copied().flatten()
    }
}

/// Default parameters for the whole catalog, overridable via the experiment
/// config (`[indicators]` section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndicatorSettings {
    pub ema_period: usize,
    pub sma_period: usize,
    pub evwma_period: usize,
    pub zlema_period: usize,
    pub trix_period: usize,
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    pub emv_period: usize,
    pub dema_period: usize,
    pub adx_period: usize,
    pub aroon_period: usize,
    pub cci_period: usize,
    pub tdi_period: usize,
    pub vhf_period: usize,
    pub dpo_period: usize,
    /// Reversal threshold for ZigZag swing confirmation, in percent.
    pub zigzag_reversal_pct: f64,
    pub rsi_period: usize,
    pub atr_period: usize,
    pub volatility_period: usize,
    pub roc_period: usize,
    pub cmo_period: usize,
    pub mfi_period: usize,
    pub wpr_period: usize,
    pub cmf_period: usize,
    pub momentum_period: usize,
    pub stoch_k: usize,
    pub stoch_d: usize,
}

impl Default for IndicatorSettings {
    fn default() -> Self {
        IndicatorSettings {
            ema_period: 10,
            sma_period: 10,
            evwma_period: 10,
            zlema_period: 10,
            trix_period: 15,
            macd_fast: 12,
            macd_slow: 26,
            macd_signal: 9,
            emv_period: 14,
            dema_period: 10,
            adx_period: 14,
            aroon_period: 25,
            cci_period: 20,
            tdi_period: 20,
            vhf_period: 28,
            dpo_period: 20,
            zigzag_reversal_pct: 5.0,
            rsi_period: 14,
            atr_period: 14,
            volatility_period: 10,
            roc_period: 10,
            cmo_period: 14,
            mfi_period: 14,
            wpr_period: 14,
            cmf_period: 20,
            momentum_period: 10,
            stoch_k: 14,
            stoch_d: 3,
        }
    }
}

/// The 28-entry default catalog, in Table-1 order.
pub fn catalog() -> Vec<IndicatorSpec> {
    catalog_with(&IndicatorSettings::default())
}

/// Build the catalog from (possibly overridden) settings.
pub fn catalog_with(s: &IndicatorSettings) -> Vec<IndicatorSpec> {
    let p = |v: usize| v as f64;
    vec![
        IndicatorSpec::new(IndicatorKind::Ema, &[("period", p(s.ema_period))]),
        IndicatorSpec::new(IndicatorKind::Sma, &[("period", p(s.sma_period))]),
        IndicatorSpec::new(IndicatorKind::Evwma, &[("period", p(s.evwma_period))]),
        IndicatorSpec::new(IndicatorKind::Zlema, &[("period", p(s.zlema_period))]),
        IndicatorSpec::new(IndicatorKind::Trix, &[("period", p(s.trix_period))]),
        IndicatorSpec::new(
            IndicatorKind::Macd,
            &[
                ("fast", p(s.macd_fast)),
                ("slow", p(s.macd_slow)),
                ("signal", p(s.macd_signal)),
            ],
        ),
        IndicatorSpec::new(IndicatorKind::Emv, &[("period", p(s.emv_period))]),
        IndicatorSpec::new(IndicatorKind::Dema, &[("period", p(s.dema_period))]),
        IndicatorSpec::new(IndicatorKind::Adx, &[("period", p(s.adx_period))]),
        IndicatorSpec::new(IndicatorKind::Aroon, &[("period", p(s.aroon_period))]),
        IndicatorSpec::new(IndicatorKind::Cci, &[("period", p(s.cci_period))]),
        IndicatorSpec::new(IndicatorKind::Tdi, &[("period", p(s.tdi_period))]),
        IndicatorSpec::new(IndicatorKind::Vhf, &[("period", p(s.vhf_period))]),
        IndicatorSpec::new(IndicatorKind::Dpo, &[("period", p(s.dpo_period))]),
        IndicatorSpec::new(
            IndicatorKind::ZigZag,
            &[("reversal_pct", s.zigzag_reversal_pct)],
        ),
        IndicatorSpec::new(IndicatorKind::Rsi, &[("period", p(s.rsi_period))]),
        IndicatorSpec::new(IndicatorKind::Atr, &[("period", p(s.atr_period))]),
        IndicatorSpec::new(
            IndicatorKind::Volatility,
            &[("period", p(s.volatility_period))],
        ),
        IndicatorSpec::new(IndicatorKind::Roc, &[("period", p(s.roc_period))]),
        IndicatorSpec::new(IndicatorKind::Cmo, &[("period", p(s.cmo_period))]),
        IndicatorSpec::new(IndicatorKind::Mfi, &[("period", p(s.mfi_period))]),
        IndicatorSpec::new(IndicatorKind::Wpr, &[("period", p(s.wpr_period))]),
        IndicatorSpec::new(IndicatorKind::Obv, &[]),
        IndicatorSpec::new(IndicatorKind::Clv, &[]),
        IndicatorSpec::new(IndicatorKind::Cmf, &[("period", p(s.cmf_period))]),
        IndicatorSpec::new(IndicatorKind::ChaikinAd, &[]),
        IndicatorSpec::new(IndicatorKind::Momentum, &[("period", p(s.momentum_period))]),
        IndicatorSpec::new(
            IndicatorKind::Stoch,
            &[("k", p(s.stoch_k)), ("d", p(s.stoch_d))],
        ),
    ]
}

/// Compute one indicator over a bar series.
pub fn compute(spec: &IndicatorSpec, series: &BarSeries) -> Result<IndicatorSeries, IndicatorError> {
    let values = match spec.kind {
        IndicatorKind::Ema => moving_averages::ema(series, spec.period("period")?),
        IndicatorKind::Sma => moving_averages::sma(series, spec.period("period")?),
        IndicatorKind::Evwma => moving_averages::evwma(series, spec.period("period")?),
        IndicatorKind::Zlema => moving_averages::zlema(series, spec.period("period")?),
        IndicatorKind::Trix => moving_averages::trix(series, spec.period("period")?),
        IndicatorKind::Macd => {
            let fast = spec.period("fast")?;
            let slow = spec.period("slow")?;
            let signal = spec.period("signal")?;
            if fast >= slow {
                return Err(IndicatorError::BadParam {
                    kind: spec.kind,
                    name: "fast".to_string(),
                    requirement: format!("smaller than slow ({slow})"),
                    value: fast as f64,
                });
            }
            moving_averages::macd_histogram(series, fast, slow, signal)
        }
        IndicatorKind::Emv => trend::emv(series, spec.period("period")?),
        IndicatorKind::Dema => moving_averages::dema(series, spec.period("period")?),
        IndicatorKind::Adx => trend::adx(series, spec.period("period")?),
        IndicatorKind::Aroon => trend::aroon_diff(series, spec.period("period")?),
        IndicatorKind::Cci => trend::cci(series, spec.period("period")?),
        IndicatorKind::Tdi => trend::tdi(series, spec.period("period")?),
        IndicatorKind::Vhf => trend::vhf(series, spec.period("period")?),
        IndicatorKind::Dpo => trend::dpo(series, spec.period("period")?),
        IndicatorKind::ZigZag => trend::zigzag_direction(series, spec.param("reversal_pct")?),
        IndicatorKind::Rsi => oscillators::rsi(series, spec.period("period")?),
        IndicatorKind::Atr => oscillators::atr(series, spec.period("period")?),
        IndicatorKind::Volatility => {
            let period = spec.period("period")?;
            if period < 2 {
                return Err(IndicatorError::BadParam {
                    kind: spec.kind,
                    name: "period".to_string(),
                    requirement: "at least 2".to_string(),
                    value: period as f64,
                });
            }
            oscillators::volatility(series, period)
        }
        IndicatorKind::Roc => oscillators::roc(series, spec.period("period")?),
        IndicatorKind::Cmo => oscillators::cmo(series, spec.period("period")?),
        IndicatorKind::Mfi => oscillators::mfi(series, spec.period("period")?),
        IndicatorKind::Wpr => oscillators::wpr(series, spec.period("period")?),
        IndicatorKind::Obv => volume::obv(series),
        IndicatorKind::Clv => volume::clv(series),
        IndicatorKind::Cmf => volume::cmf(series, spec.period("period")?),
        IndicatorKind::ChaikinAd => volume::chaikin_ad(series),
        IndicatorKind::Momentum => oscillators::momentum(series, spec.period("period")?),
        IndicatorKind::Stoch => {
            // %D is carried in the catalog for completeness; the emitted
            // feature is raw %K.
            let _ = spec.period("d")?;
            oscillators::stoch_k(series, spec.period("k")?)
        }
    };
    match IndicatorSeries::from_values(spec.kind, values) {
        Ok(s) => Ok(s),
        Err(IndicatorError::NeverDefined { kind, have }) => {
            Err(IndicatorError::SeriesTooShort {
                kind,
                have,
                warm_up: have,
            })
        }
        Err(e) => Err(e),
    }
}

/// Compute every spec in order.
pub fn compute_all(
    specs: &[IndicatorSpec],
    series: &BarSeries,
) -> Result<Vec<IndicatorSeries>, IndicatorError> {
    specs.iter().map(|s| compute(s, series)).collect()
}
