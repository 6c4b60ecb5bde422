//! Time-series signals describing where an entity sits relative to an
//! event: seasonality, autocorrelation, rank stability, forecast surprise
//! and a fitted SpikeM rise-and-fall curve.

mod holt;
mod lm;
mod spikem;
mod stats;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use holt::{holt_winters_fit_forecast, hw_grid, surprise, HwFit, HwParams};
pub use lm::{levenberg_marquardt, LmParams, LmReport};
pub use spikem::{spikem_fit, spikem_simulate, SpikeFitParams, SpikeMFit, SpikeMParams, SPIKEM_KERNEL_DAYS};
pub use stats::{autocorr_lag1, rank_gamma, seasonality};

use crate::error::{Error, Result};
use crate::logstore::Day;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalParams {
    pub period: usize,
    pub spikem: SpikeFitParams,
}

impl Default for SignalParams {
    fn default() -> Self {
        SignalParams {
            period: 7,
            spikem: SpikeFitParams::default(),
        }
    }
}

/// Per (entity, day) feature row for event type and time identification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalVector<T> {
    /// On the entity's query volume.
    pub seasonality_q: T,
    /// On the entity's article edit counts; 0 without edit data.
    pub seasonality_we: T,
    pub autocorr_lag1: T,
    pub rank_gamma: T,
    pub surprise: T,
    pub spikem: SpikeMParams<T>,
}

pub const SIGNAL_COLUMNS: [&str; 13] = [
    "seasonality_q",
    "seasonality_we",
    "autocorr_lag1",
    "rank_gamma",
    "surprise",
    "n_pop",
    "beta",
    "n_b",
    "s_b",
    "epsilon",
    "p_a",
    "p_p",
    "p_s",
];

impl<T: Scalar> SignalVector<T> {
    pub const DIM: usize = SIGNAL_COLUMNS.len();

    pub fn to_vec(&self) -> Vec<T> {
        let mut v = vec![
            self.seasonality_q,
            self.seasonality_we,
            self.autocorr_lag1,
            self.rank_gamma,
            self.surprise,
        ];
        v.extend_from_slice(&self.spikem.to_array());
        v
    }

    pub fn from_slice(v: &[T]) -> Result<Self> {
        if v.len() != Self::DIM {
            return Err(Error::DimensionMismatch {
                expected: Self::DIM,
                found: v.len(),
            });
        }
        let n_b = v[7].to_usize().ok_or_else(|| Error::param("shock day must be a non-negative integer"))?;
        Ok(SignalVector {
            seasonality_q: v[0],
            seasonality_we: v[1],
            autocorr_lag1: v[2],
            rank_gamma: v[3],
            surprise: v[4],
            spikem: SpikeMParams {
                n_pop: v[5],
                beta: v[6],
                n_b,
                s_b: v[8],
                epsilon: v[9],
                p_a: v[10],
                p_p: v[11],
                p_s: v[12],
            },
        })
    }
}

/// Signal vector of a query-volume history ending at the studied day.
/// A constant history has autocorrelation 0; edit series that are absent or
/// shorter than two periods give seasonality 0.
pub fn compute_signals<T: Scalar>(
    query: &[T],
    edits: Option<&[T]>,
    gamma: f64,
    params: &SignalParams,
) -> Result<SignalVector<T>> {
    let seasonality_q = seasonality(query, params.period)?;
    let seasonality_we = match edits {
        Some(e) if e.len() >= 2 * params.period => seasonality(e, params.period)?,
        _ => T::zero(),
    };
    let autocorr = match autocorr_lag1(query) {
        Ok(r) => r,
        Err(Error::ConstantSeries) => T::zero(),
        Err(e) => return Err(e),
    };
    let surprise = surprise(query, params.period)?;
    let fit = spikem_fit(query, &params.spikem)?;
    Ok(SignalVector {
        seasonality_q,
        seasonality_we,
        autocorr_lag1: autocorr,
        rank_gamma: T::lit(gamma),
        surprise,
        spikem: fit.params,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignalRow<T> {
    pub entity: String,
    pub day: Day,
    pub signals: SignalVector<T>,
}

pub fn signals_to_csv<T: Scalar>(rows: &[SignalRow<T>]) -> String {
    let mut w = csv::Writer::from_writer(vec![]);
    let mut header = vec!["entity", "day"];
    header.extend(SIGNAL_COLUMNS);
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec = vec![r.entity.clone(), r.day.to_string()];
        rec.extend(r.signals.to_vec().iter().map(|v| v.as_f64().to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

pub fn signals_from_csv<T: Scalar>(raw: &str, origin: &str) -> Result<Vec<SignalRow<T>>> {
    let mut rd = csv::Reader::from_reader(raw.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let perr = |message: String| Error::Parse {
            path: origin.to_string(),
            line,
            message,
        };
        let rec = rec.map_err(|e| perr(e.to_string()))?;
        if rec.len() != 2 + SIGNAL_COLUMNS.len() {
            return Err(perr(format!("expected {} columns, got {}", 2 + SIGNAL_COLUMNS.len(), rec.len())));
        }
        let day: Day = rec[1].parse().map_err(|_| perr(format!("bad day {:?}", &rec[1])))?;
        let vals: Vec<T> = rec
            .iter()
            .skip(2)
            .map(|f| f.parse::<f64>().map(T::lit).map_err(|e| perr(e.to_string())))
            .collect::<Result<_>>()?;
        out.push(SignalRow {
            entity: rec[0].to_string(),
            day,
            signals: SignalVector::from_slice(&vals).map_err(|e| perr(e.to_string()))?,
        });
    }
    Ok(out)
}

pub fn load_signals<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<SignalRow<T>>> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    signals_from_csv(&raw, &path.display().to_string())
}

#[cfg(test)]
mod tests;
