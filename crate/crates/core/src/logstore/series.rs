use serde::{Deserialize, Serialize};

use super::day::{Day, DaySpan};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Daily-binned non-negative counts starting at `origin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<T> {
    origin: Day,
    values: Vec<T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(origin: Day, values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("time series must hold at least one day".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < T::zero()) {
            return Err(Error::param(format!("time series value {bad} is negative or non-finite")));
        }
        Ok(TimeSeries { origin, values })
    }

    pub fn zeros(span: DaySpan) -> Self {
        TimeSeries {
            origin: span.first,
            values: vec![T::zero(); span.len()],
        }
    }

    pub fn origin(&self) -> Day {
        self.origin
    }

    pub fn last_day(&self) -> Day {
        self.origin.offset(self.values.len() as i64 - 1)
    }

    pub fn span(&self) -> DaySpan {
        DaySpan {
            first: self.origin,
            last: self.last_day(),
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> T {
        self.values.iter().copied().sum()
    }

    /// Value on `day`, zero outside the series.
    pub fn at(&self, day: Day) -> T {
        let i = day.since(self.origin);
        if i < 0 || i as usize >= self.values.len() {
            T::zero()
        } else {
            self.values[i as usize]
        }
    }

    /// Index of `day` within the series, if covered.
    pub fn index_of(&self, day: Day) -> Option<usize> {
        let i = day.since(self.origin);
        (i >= 0 && (i as usize) < self.values.len()).then_some(i as usize)
    }

    /// Sub-series over `span`, zero-filled where the series has no data.
    pub fn window(&self, span: DaySpan) -> Self {
        TimeSeries {
            origin: span.first,
            values: span.days().map(|d| self.at(d)).collect(),
        }
    }

    /// Prefix ending at `day` (inclusive).
    pub fn until(&self, day: Day) -> Result<Self> {
        if day < self.origin {
            return Err(Error::InsufficientData(format!(
                "series starts at {} after requested end {day}",
                self.origin
            )));
        }
        Ok(self.window(DaySpan {
            first: self.origin,
            last: day,
        }))
    }

    pub fn cast<U: Scalar>(&self) -> TimeSeries<U> {
        TimeSeries {
            origin: self.origin,
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}
