//! Query-log ingestion, filtering, indexing and daily binning.

mod alias;
mod day;
mod edits;
mod index;
mod ingest;
mod series;

pub use alias::EntityAliasTable;
pub use day::{format_timestamp, parse_timestamp, Day, DaySpan};
pub use edits::{load_edit_series, EditLog};
pub use index::{
    Click, ClickPair, ClickRecord, FilterParams, LogEvent, LogIndex, QueryRecord, Reject,
    INDEX_VERSION,
};
pub(crate) use index::sum_days;
pub use ingest::{ingest, ingest_reader, ingest_str};
pub use series::TimeSeries;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Daily count of queries mentioning any alias of `entity` over `window`.
pub fn series_for<T: Scalar>(
    index: &LogIndex,
    aliases: &EntityAliasTable,
    entity: &str,
    window: DaySpan,
) -> Result<TimeSeries<T>> {
    let phrases = aliases.aliases(entity)?;
    let span = index
        .span()
        .ok_or_else(|| Error::InsufficientData("log index is empty".into()))?;
    if !span.covers(&window) {
        return Err(Error::param(format!(
            "window {}..{} outside log span {}..{}",
            window.first, window.last, span.first, span.last
        )));
    }
    let matched = index.queries_matching(phrases);
    Ok(series_of_queries(index, &matched, window))
}

/// Summed daily counts of a set of queries over `window`.
pub fn series_of_queries<T: Scalar>(index: &LogIndex, queries: &[u32], window: DaySpan) -> TimeSeries<T> {
    let mut values = vec![0u64; window.len()];
    for &q in queries {
        for (v, c) in values.iter_mut().zip(index.daily_counts(q, window)) {
            *v += c;
        }
    }
    TimeSeries::new(window.first, values.into_iter().map(|v| T::from_u64(v).unwrap()).collect())
        .expect("window is non-empty and counts are non-negative")
}
