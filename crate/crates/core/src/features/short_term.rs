use super::corpus::{CorpusIndex, TermCounts};
use super::salience::{dirichlet_log_prob, entropy, EntityQueries};
use crate::error::{Error, Result};
use crate::logstore::{Day, LogIndex};
use crate::scalar::{pearson, Scalar};

/// Entropy of the query's click distribution over URLs on one day.
pub fn temporal_click_entropy<T: Scalar>(index: &LogIndex, query: &str, day: Day) -> T {
    let Some(q) = index.query_id(query) else {
        return T::zero();
    };
    let clicks: Vec<f64> = index.clicks_on_day(q, day).into_iter().map(|(_, c)| c as f64).collect();
    T::lit(entropy(&clicks))
}

/// Short minus long trailing moving average at index `t`.
pub fn trending_momentum<T: Scalar>(ts: &[T], t: usize, short: usize, long: usize) -> Result<T> {
    if short == 0 || long == 0 {
        return Err(Error::param("moving-average windows must be positive"));
    }
    let need = short.max(long);
    if t + 1 < need || t >= ts.len() {
        return Err(Error::InsufficientData(format!(
            "momentum at {t} needs {need} days of history within {} points",
            ts.len()
        )));
    }
    let ma = |i: usize| ts[t + 1 - i..=t].iter().copied().sum::<T>() / T::from_count(i);
    Ok(ma(short) - ma(long))
}

/// Maximum Pearson correlation over lags `-max_lag..=max_lag`, shifting the
/// aspect series. `None` when no lag has variance on both sides.
pub fn cross_correlation<T: Scalar>(entity: &[T], aspect: &[T], max_lag: usize) -> Result<Option<T>> {
    if entity.len() != aspect.len() {
        return Err(Error::DimensionMismatch {
            expected: entity.len(),
            found: aspect.len(),
        });
    }
    if entity.len() < 3 {
        return Err(Error::InsufficientData("cross-correlation needs 3 points".into()));
    }
    let n = entity.len();
    let mut best: Option<T> = None;
    for lag in -(max_lag as i64)..=(max_lag as i64) {
        let (e, a) = if lag >= 0 {
            let l = lag as usize;
            (&entity[..n - l], &aspect[l..])
        } else {
            let l = (-lag) as usize;
            (&entity[l..], &aspect[..n - l])
        };
        if e.len() < 2 {
            continue;
        }
        if let Some(r) = pearson(e, a) {
            best = Some(best.map_or(r, |b: T| b.max(r)));
        }
    }
    Ok(best)
}

/// Query likelihood of the aspect under the concatenated text of the `k`
/// URLs most clicked for the entity's queries on `day`. `None` when no
/// clicked URL has text.
pub fn temporal_lm<T: Scalar>(
    terms: &[String],
    corpus: &CorpusIndex,
    queries: &EntityQueries,
    index: &LogIndex,
    day: Day,
    k: usize,
    mu: f64,
) -> Option<T> {
    let urls = top_clicked_urls(queries, index, day, k);
    let mut doc = TermCounts::new();
    let mut len = 0;
    let mut found = false;
    for u in urls {
        if let Some((counts, l)) = corpus.urls.get(index.url_text(u)) {
            found = true;
            for (t, c) in counts {
                *doc.entry(t.clone()).or_default() += c;
            }
            len += l;
        }
    }
    if !found {
        return None;
    }
    Some(dirichlet_log_prob(terms, &doc, len, corpus, mu))
}

/// Most clicked URLs across the entity's queries on one day; ties by URL text.
pub fn top_clicked_urls(queries: &EntityQueries, index: &LogIndex, day: Day, k: usize) -> Vec<u32> {
    let mut per_url: std::collections::HashMap<u32, u64> = std::collections::HashMap::new();
    for q in queries.query_ids() {
        for (u, c) in index.clicks_on_day(q, day) {
            *per_url.entry(u).or_default() += c;
        }
    }
    let mut v: Vec<(u32, u64)> = per_url.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| index.url_text(a.0).cmp(index.url_text(b.0))));
    v.into_iter().take(k).map(|(u, _)| u).collect()
}
