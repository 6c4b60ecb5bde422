//! Popularity baselines from query auto-completion.

use super::list::RankedList;
use crate::error::{Error, Result};
use crate::logstore::{Day, DaySpan, LogIndex};
use crate::scalar::Scalar;
use crate::signals::holt_winters_fit_forecast;
use crate::text::contains_phrase;

fn count_ranked<T: Scalar>(candidates: &[String], count: impl Fn(u32) -> u64, index: &LogIndex) -> RankedList<T> {
    let scores = candidates
        .iter()
        .map(|c| {
            let n = index.query_id(c).map_or(0, &count);
            (c.clone(), T::lit(n as f64))
        })
        .collect();
    RankedList::from_scores(scores)
}

fn log_start(index: &LogIndex) -> Result<Day> {
    index
        .span()
        .map(|s| s.first)
        .ok_or_else(|| Error::InsufficientData("empty log".into()))
}

/// Total frequency from the start of the log through `t`.
pub fn baseline_mle<T: Scalar>(candidates: &[String], index: &LogIndex, t: Day) -> Result<RankedList<T>> {
    if candidates.is_empty() {
        return Ok(RankedList { entries: vec![] });
    }
    let start = log_start(index)?;
    Ok(count_ranked(candidates, |q| index.count_between(q, start, t), index))
}

/// Frequency within the `w` days ending at `t`.
pub fn baseline_mle_w<T: Scalar>(candidates: &[String], index: &LogIndex, t: Day, w: usize) -> Result<RankedList<T>> {
    if w == 0 {
        return Err(Error::param("window W must be positive"));
    }
    let from = t.offset(1 - w as i64);
    Ok(count_ranked(candidates, |q| index.count_between(q, from, t), index))
}

/// Matches among the last `n` entity queries issued on or before `t`.
pub fn baseline_lnq<T: Scalar>(
    candidates: &[String],
    index: &LogIndex,
    aliases: &[String],
    t: Day,
    n: usize,
) -> Result<RankedList<T>> {
    if n == 0 {
        return Err(Error::param("query count N must be positive"));
    }
    let matching: Vec<bool> = index
        .queries()
        .iter()
        .map(|q| aliases.iter().any(|a| contains_phrase(q, a)))
        .collect();
    let end = t.offset(1).start_timestamp();
    let recent: Vec<u32> = index
        .events()
        .iter()
        .rev()
        .filter(|e| e.time < end && matching[e.query as usize])
        .take(n)
        .map(|e| e.query)
        .collect();
    Ok(count_ranked(
        candidates,
        |q| recent.iter().filter(|&&r| r == q).count() as u64,
        index,
    ))
}

/// Holt-Winters forecast of each candidate's daily volume for `t + 1`.
/// Candidates whose history up to `t` is shorter than two periods fall back
/// to their MLE-W score; those are returned alongside the list.
pub fn baseline_pnq<T: Scalar>(
    candidates: &[String],
    index: &LogIndex,
    t: Day,
    period: usize,
    w: usize,
) -> Result<(RankedList<T>, Vec<String>)> {
    if period == 0 || w == 0 {
        return Err(Error::param("period and window W must be positive"));
    }
    let mut fallback = Vec::new();
    let mut scores = Vec::with_capacity(candidates.len());
    for c in candidates {
        let qid = index.query_id(c);
        // history runs from the candidate's first appearance
        let first = qid.and_then(|q| index.daily(q).first().map(|&(d, _)| d)).filter(|&d| d <= t);
        let forecast = match (qid, first) {
            (Some(q), Some(first)) if t.since(first) + 1 >= 2 * period as i64 => {
                let y: Vec<T> = index
                    .daily_counts(q, DaySpan::new(first, t)?)
                    .into_iter()
                    .map(|v| T::lit(v as f64))
                    .collect();
                Some(holt_winters_fit_forecast(&y, period, 1)?.forecast[0])
            }
            _ => None,
        };
        let score = match forecast {
            Some(f) => f,
            None => {
                fallback.push(c.clone());
                let from = t.offset(1 - w as i64);
                T::lit(qid.map_or(0, |q| index.count_between(q, from, t)) as f64)
            }
        };
        scores.push((c.clone(), score));
    }
    Ok((RankedList::from_scores(scores), fallback))
}

/// Walk scores as given.
pub fn baseline_rwr<T: Scalar>(candidates: &[(String, T)]) -> RankedList<T> {
    RankedList::from_scores(candidates.to_vec())
}
