use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SECS_PER_DAY: i64 = 86_400;

/// A UTC calendar day, counted from 1970-01-01.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Day(pub i64);

impl Day {
    pub fn from_date(date: NaiveDate) -> Self {
        let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
        Day((date - epoch).num_days())
    }

    pub fn from_ymd(y: i32, m: u32, d: u32) -> Option<Self> {
        NaiveDate::from_ymd_opt(y, m, d).map(Self::from_date)
    }

    pub fn date(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(1970, 1, 1).unwrap() + chrono::Duration::days(self.0)
    }

    pub fn of_timestamp(secs: i64) -> Self {
        Day(secs.div_euclid(SECS_PER_DAY))
    }

    pub fn start_timestamp(self) -> i64 {
        self.0 * SECS_PER_DAY
    }

    pub fn offset(self, days: i64) -> Self {
        Day(self.0 + days)
    }

    /// Signed number of days from `other` to `self`.
    pub fn since(self, other: Day) -> i64 {
        self.0 - other.0
    }

    /// (year, month) of the day.
    pub fn year_month(self) -> (i32, u32) {
        use chrono::Datelike;
        let d = self.date();
        (d.year(), d.month())
    }
}

impl fmt::Display for Day {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.date().format("%Y-%m-%d"))
    }
}

impl FromStr for Day {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
            .map(Day::from_date)
            .map_err(|e| Error::param(format!("bad ISO day `{s}`: {e}")))
    }
}

/// Parses a log timestamp into UTC unix seconds. Accepts
/// `YYYY-MM-DD HH:MM:SS`, RFC 3339, a bare `YYYY-MM-DD`, or integer seconds.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S") {
        return Some(dt.and_utc().timestamp());
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Some(dt.and_utc().timestamp());
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(Day::from_date(d).start_timestamp());
    }
    s.parse::<i64>().ok()
}

pub fn format_timestamp(secs: i64) -> String {
    DateTime::from_timestamp(secs, 0)
        .map(|dt| dt.format("%Y-%m-%d %H:%M:%S").to_string())
        .unwrap_or_else(|| secs.to_string())
}

/// Inclusive range of days.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaySpan {
    pub first: Day,
    pub last: Day,
}

impl DaySpan {
    pub fn new(first: Day, last: Day) -> Result<Self> {
        if last < first {
            return Err(Error::param(format!("empty day span {first}..{last}")));
        }
        Ok(DaySpan { first, last })
    }

    pub fn len(&self) -> usize {
        (self.last.0 - self.first.0 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, day: Day) -> bool {
        self.first <= day && day <= self.last
    }

    pub fn covers(&self, other: &DaySpan) -> bool {
        self.contains(other.first) && self.contains(other.last)
    }

    pub fn days(&self) -> impl Iterator<Item = Day> {
        (self.first.0..=self.last.0).map(Day)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn day_roundtrips_through_dates() {
        let d = Day::from_ymd(2006, 3, 1).unwrap();
        assert_eq!(d.to_string(), "2006-03-01");
        assert_eq!("2006-03-01".parse::<Day>().unwrap(), d);
        assert_eq!(d.year_month(), (2006, 3));
    }

    #[test]
    fn timestamps_bin_to_utc_days() {
        let t = parse_timestamp("2006-03-01 23:59:59").unwrap();
        let u = parse_timestamp("2006-03-02 00:00:00").unwrap();
        assert_eq!(Day::of_timestamp(t).offset(1), Day::of_timestamp(u));
        assert_eq!(parse_timestamp("2006-03-01T23:59:59"), Some(t));
        assert!(parse_timestamp("yesterday").is_none());
        assert_eq!(format_timestamp(t), "2006-03-01 23:59:59");
    }
}
