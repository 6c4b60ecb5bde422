use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{AspectRecord, PipelineConfig, StudiedDay};
use crate::error::{Error, Result};
use crate::evalsynth::{build_report, metric_vector, GradedLabelSet, MethodEval, Report, METRICS};
use crate::eventclf::{EventTime, EventType};
use crate::features::{FeatureMask, FeatureRow};
use crate::logstore::{Day, EntityAliasTable, LogIndex};
use crate::ranker::{
    baseline_lnq, baseline_mle, baseline_mle_w, baseline_pnq, baseline_rwr, preferences_from_rows, rank, run_entries,
    train_ensemble, train_single, DistributionMap, ModelSet, RunEntry, SingleModel,
};

/// Run tags in report order; the first is the reference baseline.
pub const METHODS: [&str; 9] = [
    "RWR",
    "RWR+MLE",
    "MLE-W",
    "LNQ",
    "PNQ",
    "SVM_salience",
    "SVM_timeliness",
    "SVM_all",
    "Ensemble",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModels {
    pub ensemble: ModelSet<f64>,
    pub all: SingleModel<f64>,
    pub salience: SingleModel<f64>,
    pub timeliness: SingleModel<f64>,
}

/// Ensemble and the three single-model ablations on the `train` entities.
pub fn train_models(
    features: &[FeatureRow<f64>],
    dists: &DistributionMap<f64>,
    train: &[String],
    cfg: &PipelineConfig,
) -> Result<TrainedModels> {
    let train: BTreeSet<&str> = train.iter().map(String::as_str).collect();
    let rows: Vec<FeatureRow<f64>> = features
        .iter()
        .filter(|r| train.contains(r.entity.as_str()))
        .cloned()
        .collect();
    let prefs = preferences_from_rows(&rows);
    if prefs.is_empty() {
        return Err(Error::InsufficientData(
            "training entities yield no graded preference pairs".into(),
        ));
    }
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.features.to_vec()).collect();
    let single = |mask: FeatureMask| train_single(&prefs, &x, &mask.columns(), &cfg.rank);
    Ok(TrainedModels {
        ensemble: train_ensemble(&prefs, &x, dists, &cfg.rank)?,
        all: single(FeatureMask::All)?,
        salience: single(FeatureMask::Salience)?,
        timeliness: single(FeatureMask::Timeliness)?,
    })
}

/// Run entries of every method for the aspect records of `test` entities.
/// All methods rank the same candidate set.
pub fn rank_all(
    index: &LogIndex,
    aliases: &EntityAliasTable,
    aspects: &[AspectRecord],
    features: &[FeatureRow<f64>],
    dists: &DistributionMap<f64>,
    models: &TrainedModels,
    test: &[String],
    cfg: &PipelineConfig,
) -> Result<Vec<RunEntry>> {
    let test: BTreeSet<&str> = test.iter().map(String::as_str).collect();
    let vectors: HashMap<(&str, Day, &str), Vec<f64>> = features
        .iter()
        .map(|r| ((r.entity.as_str(), r.day, r.aspect.as_str()), r.features.to_vec()))
        .collect();
    let mut records: Vec<&AspectRecord> = aspects.iter().filter(|r| test.contains(r.entity.as_str())).collect();
    records.sort_by(|a, b| (&a.entity, a.day).cmp(&(&b.entity, b.day)));

    let mut out = Vec::new();
    for r in records {
        if r.aspects.is_empty() {
            continue;
        }
        let (e, t) = (r.entity.as_str(), r.day);
        let texts: Vec<String> = r.aspects.iter().map(|(a, _)| a.clone()).collect();
        let cands: Vec<(String, Vec<f64>)> = texts
            .iter()
            .map(|a| {
                vectors
                    .get(&(e, t, a.as_str()))
                    .map(|v| (a.clone(), v.clone()))
                    .ok_or_else(|| Error::InsufficientData(format!("no features for {e} / {a} on {t}")))
            })
            .collect::<Result<_>>()?;
        let dist = dists
            .get(&(e.to_string(), t))
            .ok_or_else(|| Error::UnknownEntity(format!("{e} has no event distribution on {t}")))?;
        let names = aliases.aliases(e)?;
        let (pnq, _) = baseline_pnq::<f64>(&texts, index, t, cfg.signal.period, cfg.window_w)?;
        let lists = [
            baseline_rwr(&r.aspects),
            baseline_mle(&texts, index, t)?,
            baseline_mle_w(&texts, index, t, cfg.window_w)?,
            baseline_lnq(&texts, index, names, t, cfg.last_n)?,
            pnq,
            models.salience.rank(&cands)?,
            models.timeliness.rank(&cands)?,
            models.all.rank(&cands)?,
            rank(&models.ensemble, &cands, dist)?,
        ];
        for (tag, list) in METHODS.iter().zip(&lists) {
            out.extend(run_entries(e, t, list, tag));
        }
    }
    Ok(out)
}

/// Metric vector of one ranked list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub method: String,
    pub entity: String,
    pub day: Day,
    pub kind: EventType,
    pub period: EventTime,
    pub metrics: [f64; 4],
}

/// Scores every (method, entity, day) list in `runs` against the labels at
/// the studied period.
pub fn evaluate_runs(runs: &[RunEntry], labels: &GradedLabelSet, studied: &[StudiedDay]) -> Result<Vec<QueryMetrics>> {
    let info: HashMap<(&str, Day), &StudiedDay> = studied.iter().map(|s| ((s.entity.as_str(), s.day), s)).collect();
    let mut lists: BTreeMap<(&str, &str, Day), Vec<&RunEntry>> = BTreeMap::new();
    for r in runs {
        lists.entry((r.tag.as_str(), r.entity.as_str(), r.day)).or_default().push(r);
    }
    let mut out = Vec::with_capacity(lists.len());
    for ((method, entity, day), mut list) in lists {
        let s = info
            .get(&(entity, day))
            .ok_or_else(|| Error::UnknownEntity(format!("{entity} on {day} is not a studied day")))?;
        list.sort_by_key(|r| r.rank);
        let grades: Vec<u8> = list.iter().map(|r| labels.grade(entity, &r.aspect, s.period)).collect();
        out.push(QueryMetrics {
            method: method.to_string(),
            entity: entity.to_string(),
            day,
            kind: s.kind,
            period: s.period,
            metrics: metric_vector(&grades),
        });
    }
    Ok(out)
}

/// Per-method query vectors restricted to `keep`, aligned on the (entity,
/// day) pairs every method covers. Methods follow [`METHODS`] order, unknown
/// tags last.
pub fn method_evals(metrics: &[QueryMetrics], keep: impl Fn(&QueryMetrics) -> bool) -> Vec<MethodEval> {
    let mut by_method: BTreeMap<&str, BTreeMap<(&str, Day), [f64; 4]>> = BTreeMap::new();
    for m in metrics.iter().filter(|m| keep(m)) {
        by_method
            .entry(m.method.as_str())
            .or_default()
            .insert((m.entity.as_str(), m.day), m.metrics);
    }
    let common: Option<BTreeSet<(&str, Day)>> = by_method.values().fold(None, |acc, q| {
        let keys: BTreeSet<_> = q.keys().copied().collect();
        Some(match acc {
            None => keys,
            Some(a) => a.intersection(&keys).copied().collect(),
        })
    });
    let common = common.unwrap_or_default();
    let mut methods: Vec<&str> = by_method.keys().copied().collect();
    methods.sort_by_key(|m| (METHODS.iter().position(|k| k == m).unwrap_or(METHODS.len()), *m));
    methods
        .into_iter()
        .map(|m| MethodEval {
            method: m.to_string(),
            queries: common.iter().map(|k| by_method[m][k]).collect(),
        })
        .collect()
}

/// Report against the walk baseline restricted to one (type, period) slice,
/// or `None` when no query falls in it.
pub fn slice_report(metrics: &[QueryMetrics], kind: EventType, period: EventTime) -> Result<Option<Report>> {
    let evals = method_evals(metrics, |m| m.kind == kind && m.period == period);
    if evals.first().map_or(true, |e| e.queries.is_empty()) {
        return Ok(None);
    }
    build_report(&evals, METHODS[0]).map(Some)
}

pub fn query_metrics_to_csv(metrics: &[QueryMetrics]) -> String {
    let mut w = csv::Writer::from_writer(vec![]);
    let mut header = vec!["method", "entity", "day", "type", "period"];
    header.extend(METRICS);
    w.write_record(&header).expect("in-memory write");
    for m in metrics {
        let mut rec = vec![
            m.method.clone(),
            m.entity.clone(),
            m.day.to_string(),
            m.kind.to_string(),
            m.period.to_string(),
        ];
        rec.extend(m.metrics.iter().map(|v| v.to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

pub fn query_metrics_from_csv(raw: &str, origin: &str) -> Result<Vec<QueryMetrics>> {
    let mut rd = csv::Reader::from_reader(raw.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let perr = |message: String| Error::Parse {
            path: origin.to_string(),
            line: i + 2,
            message,
        };
        let rec = rec.map_err(|e| perr(e.to_string()))?;
        if rec.len() != 5 + METRICS.len() {
            return Err(perr(format!("expected {} columns, got {}", 5 + METRICS.len(), rec.len())));
        }
        let mut metrics = [0.0; 4];
        for (j, v) in metrics.iter_mut().enumerate() {
            *v = rec[5 + j].parse().map_err(|e: std::num::ParseFloatError| perr(e.to_string()))?;
        }
        out.push(QueryMetrics {
            method: rec[0].to_string(),
            entity: rec[1].to_string(),
            day: rec[2].parse().map_err(|_| perr(format!("bad day {:?}", &rec[2])))?,
            kind: rec[3].parse().map_err(|e: Error| perr(e.to_string()))?,
            period: rec[4].parse().map_err(|e: Error| perr(e.to_string()))?,
            metrics,
        });
    }
    Ok(out)
}
