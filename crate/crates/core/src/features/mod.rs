//! Ranking features for (entity, aspect, hitting day) triples: long-term
//! salience and short-term interest.

mod corpus;
mod salience;
mod short_term;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use corpus::{CorpusIndex, CorpusStore, EntityDoc, EntityTerms, Section, UrlDoc};
pub use salience::{entropy, entropy_salience, lm_salience, mle_salience, tfidf_salience, EntityQueries, LOG_FLOOR};
pub use short_term::{cross_correlation, temporal_click_entropy, temporal_lm, top_clicked_urls, trending_momentum};

use crate::error::{Error, Result};
use crate::logstore::{Day, DaySpan, LogIndex};
use crate::scalar::Scalar;
use crate::text::{content_terms, strip_phrase};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureParams {
    /// Dirichlet prior mass.
    pub mu: f64,
    pub short_window: usize,
    pub long_window: usize,
    /// Trailing days used for cross-correlation.
    pub cc_window: usize,
    pub max_lag: usize,
    /// URLs pooled for the temporal language model.
    pub top_k_urls: usize,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            mu: 2000.0,
            short_window: 1,
            long_window: 5,
            cc_window: 14,
            max_lag: 1,
            top_k_urls: 3,
        }
    }
}

impl FeatureParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) {
            return Err(Error::param("mu must be non-negative"));
        }
        if self.short_window == 0 || self.long_window < self.short_window {
            return Err(Error::param("need 0 < short window <= long window"));
        }
        if self.cc_window < 3 {
            return Err(Error::param("cross-correlation window must be at least 3 days"));
        }
        if self.top_k_urls == 0 {
            return Err(Error::param("top-k URLs must be positive"));
        }
        Ok(())
    }
}

/// Content terms of an aspect with the entity's alias phrases removed.
pub fn aspect_terms(aspect: &str, aliases: &[String]) -> Vec<String> {
    let stripped = aliases.iter().fold(aspect.to_string(), |acc, a| strip_phrase(&acc, a));
    content_terms(&stripped)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AspectFeatureVector<T> {
    pub tfidf: T,
    pub mle: T,
    pub entropy: T,
    pub lm: T,
    pub click_entropy: T,
    pub momentum: T,
    pub cross_corr: T,
    pub temporal_lm: T,
    pub rwr_score: T,
    pub cross_corr_present: T,
    pub temporal_lm_present: T,
}

pub const FEATURE_COLUMNS: [&str; 11] = [
    "tfidf",
    "mle",
    "entropy",
    "lm",
    "click_entropy",
    "momentum",
    "cross_corr",
    "temporal_lm",
    "rwr_score",
    "cross_corr_present",
    "temporal_lm_present",
];

impl<T: Scalar> AspectFeatureVector<T> {
    pub const DIM: usize = FEATURE_COLUMNS.len();

    pub fn to_vec(&self) -> Vec<T> {
        vec![
            self.tfidf,
            self.mle,
            self.entropy,
            self.lm,
            self.click_entropy,
            self.momentum,
            self.cross_corr,
            self.temporal_lm,
            self.rwr_score,
            self.cross_corr_present,
            self.temporal_lm_present,
        ]
    }

    pub fn from_slice(v: &[T]) -> Result<Self> {
        if v.len() != Self::DIM {
            return Err(Error::DimensionMismatch {
                expected: Self::DIM,
                found: v.len(),
            });
        }
        Ok(AspectFeatureVector {
            tfidf: v[0],
            mle: v[1],
            entropy: v[2],
            lm: v[3],
            click_entropy: v[4],
            momentum: v[5],
            cross_corr: v[6],
            temporal_lm: v[7],
            rwr_score: v[8],
            cross_corr_present: v[9],
            temporal_lm_present: v[10],
        })
    }
}

/// Feature families used by the single-model ablations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMask {
    Salience,
    Timeliness,
    All,
}

impl FeatureMask {
    pub fn columns(self) -> Vec<usize> {
        match self {
            FeatureMask::Salience => vec![0, 1, 2, 3],
            FeatureMask::Timeliness => vec![4, 5, 6, 7, 9, 10],
            FeatureMask::All => (0..FEATURE_COLUMNS.len()).collect(),
        }
    }
}

/// Read-only inputs shared by every feature computation.
pub struct FeatureContext<'a> {
    pub index: &'a LogIndex,
    pub corpus: &'a CorpusIndex,
    pub params: FeatureParams,
}

/// Per-entity state reused across days and aspects.
pub struct EntityContext {
    pub entity: String,
    pub aliases: Vec<String>,
    pub queries: EntityQueries,
}

impl EntityContext {
    pub fn new(index: &LogIndex, entity: &str, aliases: &[String]) -> Self {
        EntityContext {
            entity: entity.to_string(),
            aliases: aliases.to_vec(),
            queries: EntityQueries::build(index, aliases),
        }
    }

    /// Summed daily volume of every query mentioning the entity.
    pub fn volume<T: Scalar>(&self, index: &LogIndex, span: DaySpan) -> Vec<T> {
        let mut out = vec![0u64; span.len()];
        for q in self.queries.query_ids() {
            for (o, c) in out.iter_mut().zip(index.daily_counts(q, span)) {
                *o += c;
            }
        }
        out.into_iter().map(|c| T::lit(c as f64)).collect()
    }
}

fn query_volume<T: Scalar>(index: &LogIndex, query: &str, span: DaySpan) -> Vec<T> {
    match index.query_id(query) {
        Some(q) => index.daily_counts(q, span).into_iter().map(|c| T::lit(c as f64)).collect(),
        None => vec![T::zero(); span.len()],
    }
}

/// Features for every candidate aspect of one entity at hitting day `day`.
pub fn aspect_features<T: Scalar>(
    ctx: &FeatureContext<'_>,
    ent: &EntityContext,
    day: Day,
    candidates: &[(String, T)],
) -> Result<Vec<AspectFeatureVector<T>>> {
    ctx.params.validate()?;
    let span = ctx.index.span().ok_or_else(|| Error::InsufficientData("empty log".into()))?;
    if !span.contains(day) {
        return Err(Error::param(format!("day {day} lies outside the log span")));
    }
    let history = DaySpan::new(span.first, day)?;
    let cc_first = span.first.max(day.offset(1 - ctx.params.cc_window as i64));
    let cc_span = DaySpan::new(cc_first, day)?;
    let entity_cc: Vec<T> = ent.volume(ctx.index, cc_span);

    let term_lists: Vec<Vec<String>> = candidates.iter().map(|(a, _)| aspect_terms(a, &ent.aliases)).collect();
    let mut out = Vec::with_capacity(candidates.len());
    for ((aspect, rwr), terms) in candidates.iter().zip(&term_lists) {
        let tfidf = tfidf_salience(terms, ctx.corpus, &ent.entity)?;
        let mle = mle_salience(terms, &term_lists, &ent.queries, ctx.index, day);
        let entropy = entropy_salience(terms, &ent.queries, ctx.index, history);
        let lm = lm_salience(terms, ctx.corpus, &ent.entity, ctx.params.mu)?;
        let click_entropy = temporal_click_entropy(ctx.index, aspect, day);
        let own: Vec<T> = query_volume(ctx.index, aspect, history);
        let momentum = trending_momentum(&own, own.len() - 1, ctx.params.short_window, ctx.params.long_window)?;
        let aspect_cc: Vec<T> = query_volume(ctx.index, aspect, cc_span);
        let cc = if cc_span.len() >= 3 {
            cross_correlation(&entity_cc, &aspect_cc, ctx.params.max_lag)?
        } else {
            None
        };
        let tlm = temporal_lm(
            terms,
            ctx.corpus,
            &ent.queries,
            ctx.index,
            day,
            ctx.params.top_k_urls,
            ctx.params.mu,
        );
        out.push(AspectFeatureVector {
            tfidf,
            mle,
            entropy,
            lm,
            click_entropy,
            momentum,
            cross_corr: cc.unwrap_or(T::zero()),
            temporal_lm: tlm.unwrap_or(T::zero()),
            rwr_score: *rwr,
            cross_corr_present: if cc.is_some() { T::one() } else { T::zero() },
            temporal_lm_present: if tlm.is_some() { T::one() } else { T::zero() },
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow<T> {
    pub entity: String,
    pub aspect: String,
    pub day: Day,
    pub features: AspectFeatureVector<T>,
    pub grade: Option<u8>,
}

pub fn features_to_csv<T: Scalar>(rows: &[FeatureRow<T>]) -> String {
    let mut w = csv::Writer::from_writer(vec![]);
    let mut header = vec!["entity", "aspect", "day"];
    header.extend(FEATURE_COLUMNS);
    header.push("label");
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec = vec![r.entity.clone(), r.aspect.clone(), r.day.to_string()];
        rec.extend(r.features.to_vec().iter().map(|v| v.as_f64().to_string()));
        rec.push(r.grade.map(|g| g.to_string()).unwrap_or_default());
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

pub fn features_from_csv<T: Scalar>(raw: &str, origin: &str) -> Result<Vec<FeatureRow<T>>> {
    let mut rd = csv::Reader::from_reader(raw.as_bytes());
    let width = 3 + FEATURE_COLUMNS.len() + 1;
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let perr = |message: String| Error::Parse {
            path: origin.to_string(),
            line: i + 2,
            message,
        };
        let rec = rec.map_err(|e| perr(e.to_string()))?;
        if rec.len() != width {
            return Err(perr(format!("expected {width} columns, got {}", rec.len())));
        }
        let day: Day = rec[2].parse().map_err(|_| perr(format!("bad day {:?}", &rec[2])))?;
        let vals: Vec<T> = (3..3 + FEATURE_COLUMNS.len())
            .map(|j| rec[j].parse::<f64>().map(T::lit).map_err(|e| perr(e.to_string())))
            .collect::<Result<_>>()?;
        let grade = match &rec[width - 1] {
            "" => None,
            g => Some(g.parse::<u8>().map_err(|e| perr(e.to_string()))?),
        };
        out.push(FeatureRow {
            entity: rec[0].to_string(),
            aspect: rec[1].to_string(),
            day,
            features: AspectFeatureVector::from_slice(&vals)?,
            grade,
        });
    }
    Ok(out)
}

pub fn load_features<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<FeatureRow<T>>> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    features_from_csv(&raw, &path.display().to_string())
}
