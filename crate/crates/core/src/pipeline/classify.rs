use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{PipelineConfig, StudiedDay};
use crate::error::{Error, Result};
use crate::evalsynth::rolling_cv;
use crate::eventclf::{
    accuracy, fit_mixture, soft_assign, train_softmax, weighted_f1, CascadedClassifier, EventLabel, EventModel,
    EventTime, EVENT_MODEL_VERSION, NUM_CELLS,
};
use crate::logstore::Day;
use crate::ranker::DistributionMap;
use crate::signals::SignalRow;

/// Ground-truth cell of every studied (entity, day).
pub fn event_labels(studied: &[StudiedDay]) -> HashMap<(String, Day), EventLabel> {
    studied
        .iter()
        .map(|s| ((s.entity.clone(), s.day), EventLabel::new(s.kind, s.period)))
        .collect()
}

fn labelled<'a>(
    rows: &'a [SignalRow<f64>],
    labels: &HashMap<(String, Day), EventLabel>,
    keep: impl Fn(&str) -> bool,
) -> (Vec<Vec<f64>>, Vec<EventLabel>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for r in rows.iter().filter(|r| keep(&r.entity)) {
        if let Some(l) = labels.get(&(r.entity.clone(), r.day)) {
            x.push(r.signals.to_vec());
            y.push(*l);
        }
    }
    (x, y)
}

/// Scores of one rolling trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationFold {
    pub test_bin: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Stage-1 event type accuracy.
    pub type_accuracy: f64,
    /// Weighted F1 of the cascade's event time predictions.
    pub cascade_time_f1: f64,
    /// Weighted F1 of a multinomial logistic model on the signals alone.
    pub flat_time_f1: f64,
}

/// Rolling chronological cross-validation of the cascade against a flat
/// logistic time classifier.
pub fn classification_cv(
    rows: &[SignalRow<f64>],
    studied: &[StudiedDay],
    cfg: &PipelineConfig,
) -> Result<Vec<ClassificationFold>> {
    let labels = event_labels(studied);
    let mut event_days: BTreeMap<&str, Day> = BTreeMap::new();
    for s in studied {
        event_days.insert(&s.entity, s.event_day);
    }
    let entities: Vec<(String, Day)> = event_days.iter().map(|(e, d)| (e.to_string(), *d)).collect();
    let folds = rolling_cv(&entities, cfg.cv_bins, cfg.cv_test_bins)?;
    let mut out = Vec::with_capacity(folds.len());
    for f in folds {
        let (train_x, train_y) = labelled(rows, &labels, |e| f.train.iter().any(|t| t == e));
        let (test_x, test_y) = labelled(rows, &labels, |e| f.test.iter().any(|t| t == e));
        if test_x.is_empty() {
            continue;
        }
        let cascade = CascadedClassifier::train(&train_x, &train_y, &cfg.cascade)?;
        let times: Vec<usize> = train_y.iter().map(|l| l.time.index()).collect();
        let flat = train_softmax(&train_x, &times, EventTime::ALL.len(), &cfg.cascade.softmax)?;

        let mut pred_type = Vec::new();
        let mut pred_time = Vec::new();
        let mut pred_flat = Vec::new();
        for x in &test_x {
            let p = cascade.predict(x)?;
            pred_type.push(p.kind.index());
            pred_time.push(p.time.index());
            pred_flat.push(flat.predict(x)?);
        }
        let true_type: Vec<usize> = test_y.iter().map(|l| l.kind.index()).collect();
        let true_time: Vec<usize> = test_y.iter().map(|l| l.time.index()).collect();
        out.push(ClassificationFold {
            test_bin: f.test_bin,
            train_rows: train_x.len(),
            test_rows: test_x.len(),
            type_accuracy: accuracy(&pred_type, &true_type),
            cascade_time_f1: weighted_f1(&pred_time, &true_time, EventTime::ALL.len()),
            flat_time_f1: weighted_f1(&pred_flat, &true_time, EventTime::ALL.len()),
        });
    }
    Ok(out)
}

/// Cascade plus the ranking-side mixture, trained on `train` entities.
pub fn train_event_model(
    rows: &[SignalRow<f64>],
    studied: &[StudiedDay],
    train: &[String],
    cfg: &PipelineConfig,
) -> Result<EventModel<f64>> {
    let labels = event_labels(studied);
    let (x, y) = labelled(rows, &labels, |e| train.iter().any(|t| t == e));
    if x.is_empty() {
        return Err(Error::InsufficientData("no labelled signal rows for the training entities".into()));
    }
    let cascade = CascadedClassifier::train(&x, &y, &cfg.cascade)?;
    let importance = cascade.importance();
    let cells: Vec<usize> = y.iter().map(|l| l.cell()).collect();
    let mixture = fit_mixture(&x, &cells, &importance, &cfg.mixture)?;
    Ok(EventModel {
        version: EVENT_MODEL_VERSION,
        cascade,
        mixture,
    })
}

/// Soft (type, time) distribution of every signal row.
pub fn distributions(model: &EventModel<f64>, rows: &[SignalRow<f64>]) -> Result<DistributionMap<f64>> {
    rows.iter()
        .map(|r| Ok(((r.entity.clone(), r.day), soft_assign(&model.mixture, &r.signals.to_vec())?)))
        .collect()
}

fn cell_names() -> Vec<String> {
    EventLabel::all().map(|l| format!("{}_{}", l.kind, l.time)).collect()
}

/// CSV with one probability column per cell, rows sorted by entity and day.
pub fn distributions_to_csv(dists: &DistributionMap<f64>) -> String {
    let mut keys: Vec<&(String, Day)> = dists.keys().collect();
    keys.sort();
    let mut w = csv::Writer::from_writer(vec![]);
    let mut header = vec!["entity".to_string(), "day".to_string()];
    header.extend(cell_names());
    w.write_record(&header).expect("in-memory write");
    for k in keys {
        let mut rec = vec![k.0.clone(), k.1.to_string()];
        rec.extend(dists[k].iter().map(|p| p.to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

pub fn distributions_from_csv(raw: &str, origin: &str) -> Result<DistributionMap<f64>> {
    let mut rd = csv::Reader::from_reader(raw.as_bytes());
    let mut out = DistributionMap::new();
    for (i, rec) in rd.records().enumerate() {
        let perr = |message: String| Error::Parse {
            path: origin.to_string(),
            line: i + 2,
            message,
        };
        let rec = rec.map_err(|e| perr(e.to_string()))?;
        if rec.len() != 2 + NUM_CELLS {
            return Err(perr(format!("expected {} columns, got {}", 2 + NUM_CELLS, rec.len())));
        }
        let day: Day = rec[1].parse().map_err(|_| perr(format!("bad day {:?}", &rec[1])))?;
        let mut p = [0.0; NUM_CELLS];
        for (c, v) in p.iter_mut().enumerate() {
            *v = rec[2 + c].parse().map_err(|e: std::num::ParseFloatError| perr(e.to_string()))?;
        }
        out.insert((rec[0].to_string(), day), p);
    }
    Ok(out)
}
