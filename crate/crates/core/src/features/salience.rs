use std::collections::HashMap;

use super::corpus::{CorpusIndex, TermCounts};
use crate::error::{Error, Result};
use crate::logstore::{Day, DaySpan, LogIndex};
use crate::scalar::Scalar;

/// Floor for log-probabilities of unsmoothed zero-probability text.
pub const LOG_FLOOR: f64 = -1e9;

/// Mean over aspect terms of `max_D tf(w, D) * ln(N_sec / df(w))`.
pub fn tfidf_salience<T: Scalar>(terms: &[String], corpus: &CorpusIndex, entity: &str) -> Result<T> {
    if terms.is_empty() {
        return Err(Error::param("aspect has no terms"));
    }
    let e = corpus.entity(entity)?;
    let n_sec = e.sections.len() as f64;
    let mut total = 0.0;
    for w in terms {
        let df = e.df.get(w).copied().unwrap_or(0);
        if df == 0 {
            continue;
        }
        let idf = (n_sec / df as f64).ln();
        let tf = e.sections.iter().map(|s| s.get(w).copied().unwrap_or(0)).max().unwrap_or(0);
        total += tf as f64 * idf;
    }
    Ok(T::lit(total / terms.len() as f64))
}

/// Dirichlet-smoothed unigram log-likelihood of `terms` under a document.
pub fn dirichlet_log_prob<T: Scalar>(terms: &[String], doc: &TermCounts, doc_len: u64, corpus: &CorpusIndex, mu: f64) -> T {
    let mut lp = 0.0;
    for w in terms {
        let tf = doc.get(w).copied().unwrap_or(0) as f64;
        let p = (tf + mu * corpus.background_prob(w)) / (doc_len as f64 + mu);
        if !(p > 0.0) {
            return T::lit(LOG_FLOOR);
        }
        lp += p.ln();
    }
    T::lit(lp.max(LOG_FLOOR))
}

/// Query likelihood of the aspect under the entity's own article.
pub fn lm_salience<T: Scalar>(terms: &[String], corpus: &CorpusIndex, entity: &str, mu: f64) -> Result<T> {
    if corpus.background_len == 0 {
        return Err(Error::InsufficientData("corpus is empty".into()));
    }
    if mu < 0.0 {
        return Err(Error::param("Dirichlet mu must be non-negative"));
    }
    let e = corpus.entity(entity)?;
    Ok(dirichlet_log_prob(terms, &e.own, e.own_len, corpus, mu))
}

/// Log queries mentioning one entity, with their content terms.
#[derive(Clone, Debug, Default)]
pub struct EntityQueries {
    /// (query id, distinct terms with the entity alias removed)
    pub(crate) queries: Vec<(u32, Vec<String>)>,
}

impl EntityQueries {
    pub fn build(index: &LogIndex, aliases: &[String]) -> Self {
        let queries = index
            .queries_matching(aliases)
            .into_iter()
            .map(|q| {
                let mut terms = super::aspect_terms(index.query_text(q), aliases);
                terms.sort();
                terms.dedup();
                (q, terms)
            })
            .collect();
        EntityQueries { queries }
    }

    pub fn query_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.queries.iter().map(|(q, _)| *q)
    }

    /// Co-occurrence count of every term over `[from, to]`.
    pub fn term_counts(&self, index: &LogIndex, from: Day, to: Day) -> HashMap<&str, u64> {
        let mut out: HashMap<&str, u64> = HashMap::new();
        for (q, terms) in &self.queries {
            let c = index.count_between(*q, from, to);
            if c == 0 {
                continue;
            }
            for t in terms {
                *out.entry(t.as_str()).or_default() += c;
            }
        }
        out
    }
}

/// Share of the candidate set's cumulated co-occurrence mass held by one
/// aspect, counted from the log start to `t`.
pub fn mle_salience<T: Scalar>(
    terms: &[String],
    candidates: &[Vec<String>],
    queries: &EntityQueries,
    index: &LogIndex,
    t: Day,
) -> T {
    let Some(span) = index.span() else {
        return T::zero();
    };
    let counts = queries.term_counts(index, span.first, t);
    let mass = |ts: &[String]| -> u64 { ts.iter().map(|w| counts.get(w.as_str()).copied().unwrap_or(0)).sum() };
    let den: u64 = candidates.iter().map(|c| mass(c)).sum();
    if den == 0 {
        log::warn!("no co-occurrence mass for the candidate set up to {t}");
        return T::zero();
    }
    T::lit(mass(terms) as f64 / den as f64)
}

/// Entropy of the aspect's daily co-occurrence over `window`.
pub fn entropy_salience<T: Scalar>(terms: &[String], queries: &EntityQueries, index: &LogIndex, window: DaySpan) -> T {
    let per_day: Vec<f64> = window
        .days()
        .map(|d| {
            let c = queries.term_counts(index, d, d);
            terms.iter().map(|w| c.get(w.as_str()).copied().unwrap_or(0)).sum::<u64>() as f64
        })
        .collect();
    T::lit(entropy(&per_day))
}

/// Natural-log entropy of non-negative weights; 0 for zero mass.
pub fn entropy(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let h: f64 = weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}
