use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineConfig;
use crate::aspects::{extract_aspects, EmbeddingTable, RankedCandidate};
use crate::clickgraph::{build_graph_until, candidates, ClickGraph};
use crate::error::{Error, Result};
use crate::evalsynth::{EventRecord, GradedLabelSet};
use crate::eventclf::{EventTime, EventType};
use crate::features::{aspect_features, CorpusIndex, EntityContext, FeatureContext, FeatureRow};
use crate::logstore::{Day, DaySpan, EditLog, EntityAliasTable, LogIndex};
use crate::signals::{compute_signals, rank_gamma, SignalRow};

/// One (entity, hitting day) under study.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudiedDay {
    pub entity: String,
    pub kind: EventType,
    pub period: EventTime,
    pub day: Day,
    pub event_day: Day,
}

/// Each entity at its before, during and after day, ordered by entity then
/// day. Days outside `span` are skipped with a warning.
pub fn studied_days(events: &[EventRecord], span: DaySpan) -> Vec<StudiedDay> {
    let mut out = Vec::new();
    let mut sorted: Vec<&EventRecord> = events.iter().collect();
    sorted.sort_by(|a, b| a.entity.cmp(&b.entity));
    for e in sorted {
        for period in EventTime::ALL {
            let day = e.studied_day(period);
            if !span.contains(day) {
                log::warn!("{} {period} day {day} lies outside the log, skipped", e.entity);
                continue;
            }
            out.push(StudiedDay {
                entity: e.entity.clone(),
                kind: e.kind,
                period,
                day,
                event_day: e.day,
            });
        }
    }
    out
}

/// Walk candidates at a studied day plus the list one day earlier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub entity: String,
    pub day: Day,
    pub candidates: Vec<(String, f64)>,
    pub previous: Vec<String>,
}

fn walk(graph: &ClickGraph<f64>, aliases: &[String], k: usize, cfg: &PipelineConfig) -> Result<Vec<(String, f64)>> {
    for a in aliases {
        if graph.query_node(a).is_some() {
            return candidates(graph, a, k, &cfg.rwr);
        }
    }
    Ok(vec![])
}

/// Related queries of every studied day from the click graph built on the
/// log up to that day.
pub fn extract_candidates(
    index: &LogIndex,
    aliases: &EntityAliasTable,
    studied: &[StudiedDay],
    cfg: &PipelineConfig,
) -> Result<Vec<CandidateRecord>> {
    let span = index.span().ok_or_else(|| Error::InsufficientData("empty log".into()))?;
    let mut days: BTreeSet<Day> = BTreeSet::new();
    for s in studied {
        days.insert(s.day);
        if s.day > span.first {
            days.insert(s.day.offset(-1));
        }
    }
    let days: Vec<Day> = days.into_iter().collect();
    let graphs: Vec<ClickGraph<f64>> = days
        .par_iter()
        .map(|&d| build_graph_until(index, Some(d)))
        .collect::<Result<_>>()?;
    let by_day: HashMap<Day, &ClickGraph<f64>> = days.iter().copied().zip(&graphs).collect();

    studied
        .par_iter()
        .map(|s| {
            let names = aliases.aliases(&s.entity)?;
            let current = walk(by_day[&s.day], names, cfg.candidates, cfg)?;
            let previous = match by_day.get(&s.day.offset(-1)) {
                Some(g) => walk(g, names, cfg.candidates, cfg)?.into_iter().map(|(q, _)| q).collect(),
                None => vec![],
            };
            if current.is_empty() {
                log::warn!("no walk candidates for {} on {}", s.entity, s.day);
            }
            Ok(CandidateRecord {
                entity: s.entity.clone(),
                day: s.day,
                candidates: current,
                previous,
            })
        })
        .collect()
}

/// Representative aspects of one (entity, day), ordered by walk score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AspectRecord {
    pub entity: String,
    pub day: Day,
    pub aspects: Vec<(String, f64)>,
}

/// Clusters the walk candidates and keeps the top representatives.
pub fn build_aspects(
    index: &LogIndex,
    aliases: &EntityAliasTable,
    emb: Option<&EmbeddingTable<f64>>,
    records: &[CandidateRecord],
    cfg: &PipelineConfig,
) -> Result<Vec<AspectRecord>> {
    let span = index.span().ok_or_else(|| Error::InsufficientData("empty log".into()))?;
    records
        .par_iter()
        .map(|r| {
            let ranked: Vec<RankedCandidate<f64>> = r
                .candidates
                .iter()
                .map(|(q, s)| RankedCandidate {
                    text: q.clone(),
                    rwr_score: *s,
                    frequency: index.query_id(q).map_or(0, |id| index.count_between(id, span.first, r.day)),
                })
                .collect();
            let reps = extract_aspects(&ranked, emb, cfg.aspects, &cfg.aspect, aliases.aliases(&r.entity)?)?;
            Ok(AspectRecord {
                entity: r.entity.clone(),
                day: r.day,
                aspects: reps.into_iter().map(|a| (a.text, a.rwr_score)).collect(),
            })
        })
        .collect()
}

/// Signal vectors over the trailing window ending at each studied day.
pub fn compute_signal_rows(
    index: &LogIndex,
    aliases: &EntityAliasTable,
    edits: Option<&EditLog>,
    records: &[CandidateRecord],
    cfg: &PipelineConfig,
) -> Result<Vec<SignalRow<f64>>> {
    let span = index.span().ok_or_else(|| Error::InsufficientData("empty log".into()))?;
    let mut contexts: BTreeMap<&str, EntityContext> = BTreeMap::new();
    for r in records {
        if !contexts.contains_key(r.entity.as_str()) {
            contexts.insert(&r.entity, EntityContext::new(index, &r.entity, aliases.aliases(&r.entity)?));
        }
    }
    records
        .par_iter()
        .map(|r| {
            let first = span.first.max(r.day.offset(1 - cfg.signal_window as i64));
            let window = DaySpan::new(first, r.day)?;
            let volume: Vec<f64> = contexts[r.entity.as_str()].volume(index, window);
            let edit_series = edits.and_then(|e| e.series::<f64>(&r.entity).ok()).map(|s| s.window(window));
            let current: Vec<&str> = r.candidates.iter().map(|(q, _)| q.as_str()).collect();
            let previous: Vec<&str> = r.previous.iter().map(String::as_str).collect();
            let gamma = rank_gamma(&current, &previous);
            let signals = compute_signals(&volume, edit_series.as_ref().map(|s| s.values()), gamma, &cfg.signal)
                .map_err(|e| Error::InsufficientData(format!("signals for {} on {}: {e}", r.entity, r.day)))?;
            Ok(SignalRow {
                entity: r.entity.clone(),
                day: r.day,
                signals,
            })
        })
        .collect()
}

/// Feature rows of every aspect, graded against the label set at the
/// studied day's period. Unlabelled aspects get grade 0.
pub fn feature_rows(
    index: &LogIndex,
    aliases: &EntityAliasTable,
    corpus: &CorpusIndex,
    aspects: &[AspectRecord],
    studied: &[StudiedDay],
    labels: Option<&GradedLabelSet>,
    cfg: &PipelineConfig,
) -> Result<Vec<FeatureRow<f64>>> {
    let period: HashMap<(&str, Day), EventTime> = studied.iter().map(|s| ((s.entity.as_str(), s.day), s.period)).collect();
    let ctx = FeatureContext {
        index,
        corpus,
        params: cfg.features,
    };
    let per_record: Vec<Vec<FeatureRow<f64>>> = aspects
        .par_iter()
        .map(|r| {
            let ent = EntityContext::new(index, &r.entity, aliases.aliases(&r.entity)?);
            let vectors = aspect_features(&ctx, &ent, r.day, &r.aspects)?;
            let p = period.get(&(r.entity.as_str(), r.day)).copied();
            Ok(r.aspects
                .iter()
                .zip(vectors)
                .map(|((a, _), features)| FeatureRow {
                    entity: r.entity.clone(),
                    aspect: a.clone(),
                    day: r.day,
                    features,
                    grade: match (labels, p) {
                        (Some(l), Some(p)) => Some(l.grade(&r.entity, a, p)),
                        _ => None,
                    },
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_record.into_iter().flatten().collect())
}
