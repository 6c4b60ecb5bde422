use std::collections::BTreeMap;
use std::path::Path;

use super::day::{Day, DaySpan};
use super::index::Reject;
use super::series::TimeSeries;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-entity daily edit counts read from `(entity_id, day, edit_count)` CSV.
#[derive(Clone, Debug, Default)]
pub struct EditLog {
    rows: BTreeMap<String, BTreeMap<Day, f64>>,
    rejects: Vec<Reject>,
}

impl EditLog {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&raw))
    }

    pub fn parse(raw: &str) -> Self {
        let mut log = EditLog::default();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(raw.as_bytes());
        for (i, rec) in reader.records().enumerate() {
            let line = i + 1;
            let rec = match rec {
                Ok(r) => r,
                Err(e) => {
                    log.rejects.push(Reject { line, reason: e.to_string() });
                    continue;
                }
            };
            if line == 1 && rec.get(0) == Some("entity_id") {
                continue;
            }
            if rec.len() != 3 {
                log.rejects.push(Reject {
                    line,
                    reason: format!("expected 3 columns, found {}", rec.len()),
                });
                continue;
            }
            let day = match rec[1].parse::<Day>() {
                Ok(d) => d,
                Err(e) => {
                    log.rejects.push(Reject { line, reason: e.to_string() });
                    continue;
                }
            };
            let count = match rec[2].parse::<f64>() {
                Ok(c) if c.is_finite() && c >= 0.0 => c,
                Ok(c) => {
                    log.rejects.push(Reject {
                        line,
                        reason: format!("edit count {c} is negative"),
                    });
                    continue;
                }
                Err(_) => {
                    log.rejects.push(Reject {
                        line,
                        reason: format!("bad edit count `{}`", &rec[2]),
                    });
                    continue;
                }
            };
            *log.rows.entry(rec[0].to_string()).or_default().entry(day).or_default() += count;
        }
        log
    }

    pub fn rejects(&self) -> &[Reject] {
        &self.rejects
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    /// Edit series from the entity's first to last recorded day, gaps as zero.
    pub fn series<T: Scalar>(&self, entity: &str) -> Result<TimeSeries<T>> {
        let rows = self.rows.get(entity).filter(|r| !r.is_empty()).ok_or_else(|| {
            Error::InsufficientData(format!("no edit rows for entity `{entity}`"))
        })?;
        let first = *rows.keys().next().unwrap();
        let last = *rows.keys().next_back().unwrap();
        let span = DaySpan { first, last };
        let values = span.days().map(|d| T::lit(rows.get(&d).copied().unwrap_or(0.0))).collect();
        TimeSeries::new(first, values)
    }
}

/// Loads the edit series of one entity.
pub fn load_edit_series<T: Scalar>(path: impl AsRef<Path>, entity: &str) -> Result<TimeSeries<T>> {
    EditLog::load(path)?.series(entity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps_are_zero_filled() {
        let log = EditLog::parse("entity_id,day,count\ne,2006-03-01,4\ne,2006-03-03,2\n");
        let s = log.series::<f64>("e").unwrap();
        assert_eq!(s.values(), &[4.0, 0.0, 2.0]);
        assert_eq!(s.origin(), Day::from_ymd(2006, 3, 1).unwrap());
    }

    #[test]
    fn single_row() {
        let log = EditLog::parse("e,2006-03-01,7\n");
        assert_eq!(log.series::<f32>("e").unwrap().len(), 1);
    }

    #[test]
    fn negative_counts_are_rejected() {
        let log = EditLog::parse("e,2006-03-01,1\ne,2006-03-02,-3\n");
        assert_eq!(log.rejects().len(), 1);
        assert_eq!(log.rejects()[0].line, 2);
        assert_eq!(log.series::<f64>("e").unwrap().values(), &[1.0]);
    }

    #[test]
    fn missing_entity_is_an_error() {
        let log = EditLog::parse("e,2006-03-01,1\n");
        assert!(log.series::<f64>("other").is_err());
    }
}
