//! End-to-end experiment plumbing shared by the command line tool and the
//! integration tests. Every stage is a pure function of its inputs.

mod classify;
mod evaluate;
mod stages;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use classify::{
    classification_cv, distributions, distributions_from_csv, distributions_to_csv, event_labels, train_event_model,
    ClassificationFold,
};
pub use evaluate::{
    evaluate_runs, method_evals, query_metrics_from_csv, query_metrics_to_csv, rank_all, slice_report, train_models, QueryMetrics,
    TrainedModels, METHODS,
};
pub use stages::{
    build_aspects, compute_signal_rows, extract_candidates, feature_rows, studied_days, AspectRecord, CandidateRecord,
    StudiedDay,
};

use crate::aspects::{AspectParams, EmbeddingTable};
use crate::clickgraph::RwrParams;
use crate::error::{Error, Result};
use crate::evalsynth::{build_report, split_train_test_by_month, EventRecord, GradedLabelSet, Report, SynthOutput};
use crate::eventclf::{CascadeParams, EventModel, MixtureParams};
use crate::features::{CorpusIndex, CorpusStore, FeatureParams, FeatureRow};
use crate::logstore::{ingest_str, Day, EditLog, EntityAliasTable, FilterParams, LogIndex};
use crate::ranker::{DistributionMap, RankParams, RunEntry};
use crate::signals::{SignalParams, SignalRow};

/// Every numeric knob of the pipeline. Missing JSON fields take defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub filter: FilterParams,
    pub rwr: RwrParams,
    /// Related queries taken from the walk before clustering.
    pub candidates: usize,
    /// Aspects kept per (entity, day).
    pub aspects: usize,
    pub aspect: AspectParams,
    pub signal: SignalParams,
    /// Trailing days of volume fed to the signal extractors.
    pub signal_window: usize,
    pub cascade: CascadeParams,
    pub mixture: MixtureParams,
    pub features: FeatureParams,
    pub rank: RankParams,
    /// MLE-W window.
    pub window_w: usize,
    /// LNQ query count.
    pub last_n: usize,
    pub cv_bins: usize,
    pub cv_test_bins: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            filter: FilterParams::default(),
            rwr: RwrParams::default(),
            candidates: 30,
            aspects: 10,
            aspect: AspectParams::default(),
            signal: SignalParams::default(),
            signal_window: 21,
            cascade: CascadeParams::default(),
            mixture: MixtureParams::default(),
            features: FeatureParams::default(),
            rank: RankParams::default(),
            window_w: 10,
            last_n: 200,
            cv_bins: 10,
            cv_test_bins: 4,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.rwr.validate()?;
        self.aspect.weights.validate()?;
        self.aspect.ap.validate()?;
        self.features.validate()?;
        self.rank.validate()?;
        if self.candidates == 0 || self.aspects == 0 {
            return Err(Error::param("candidate and aspect counts must be positive"));
        }
        if self.signal.period == 0 || self.signal_window < 2 * self.signal.period + 1 || self.signal_window < 14 {
            return Err(Error::param(format!(
                "signal window must cover at least 14 days and two periods plus one (got {})",
                self.signal_window
            )));
        }
        if self.window_w == 0 || self.last_n == 0 {
            return Err(Error::param("W and N must be positive"));
        }
        if self.cv_test_bins == 0 || self.cv_test_bins >= self.cv_bins {
            return Err(Error::param("need 0 < test bins < bins"));
        }
        Ok(())
    }
}

/// Seed shared by every stochastic step, set in one place.
pub fn with_seed(mut cfg: PipelineConfig, seed: u64) -> PipelineConfig {
    cfg.cascade.hinge.seed = seed;
    cfg.mixture.seed = seed;
    cfg.rank.seed = seed;
    cfg.signal.spikem.seed = seed;
    cfg
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Raw inputs of one experiment.
#[derive(Clone, Debug)]
pub struct ExperimentInputs {
    pub index: LogIndex,
    pub aliases: EntityAliasTable,
    pub corpus: CorpusStore,
    pub edits: Option<EditLog>,
    pub embeddings: Option<EmbeddingTable<f64>>,
    pub labels: GradedLabelSet,
    pub events: Vec<EventRecord>,
}

impl ExperimentInputs {
    /// Parses generator output in memory.
    pub fn from_synth(out: &SynthOutput, filter: FilterParams) -> Result<Self> {
        Ok(ExperimentInputs {
            index: ingest_str(&out.log_tsv, filter)?,
            aliases: EntityAliasTable::from_json(&out.aliases_json)?,
            corpus: CorpusStore::parse_jsonl(&out.corpus_jsonl, "corpus.jsonl")?,
            edits: Some(EditLog::parse(&out.edits_csv)),
            embeddings: Some(EmbeddingTable::parse(&out.embeddings_txt)?),
            labels: out.labels.clone(),
            events: out.events.clone(),
        })
    }
}

/// Every intermediate artifact of a full run.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub studied: Vec<StudiedDay>,
    pub split: Split,
    pub candidates: Vec<CandidateRecord>,
    pub aspects: Vec<AspectRecord>,
    pub signals: Vec<SignalRow<f64>>,
    pub folds: Vec<ClassificationFold>,
    pub event_model: EventModel<f64>,
    pub dists: DistributionMap<f64>,
    pub features: Vec<FeatureRow<f64>>,
    pub models: TrainedModels,
    pub runs: Vec<RunEntry>,
    pub metrics: Vec<QueryMetrics>,
    pub report: Report,
}

/// Entities with their event day, for the split protocols.
pub fn entity_days(studied: &[StudiedDay]) -> Vec<(String, Day)> {
    let mut seen: BTreeMap<&str, Day> = BTreeMap::new();
    for s in studied {
        seen.insert(&s.entity, s.event_day);
    }
    seen.into_iter().map(|(e, d)| (e.to_string(), d)).collect()
}

/// Month split: entities whose event falls in the last month are tested.
pub fn month_split(studied: &[StudiedDay]) -> Result<Split> {
    let (train, test) = split_train_test_by_month(&entity_days(studied))?;
    Ok(Split { train, test })
}

/// Runs every stage in memory and reports all methods against the walk
/// baseline on the month split.
pub fn run_experiment(inputs: &ExperimentInputs, cfg: &PipelineConfig) -> Result<Experiment> {
    cfg.validate()?;
    let span = inputs.index.span().ok_or_else(|| Error::InsufficientData("empty log".into()))?;
    let studied = studied_days(&inputs.events, span);
    let split = month_split(&studied)?;
    let candidates = extract_candidates(&inputs.index, &inputs.aliases, &studied, cfg)?;
    let aspects = build_aspects(&inputs.index, &inputs.aliases, inputs.embeddings.as_ref(), &candidates, cfg)?;
    let signals = compute_signal_rows(&inputs.index, &inputs.aliases, inputs.edits.as_ref(), &candidates, cfg)?;
    let folds = classification_cv(&signals, &studied, cfg)?;
    let event_model = train_event_model(&signals, &studied, &split.train, cfg)?;
    let dists = distributions(&event_model, &signals)?;
    let corpus = CorpusIndex::build(&inputs.corpus);
    let features = feature_rows(
        &inputs.index,
        &inputs.aliases,
        &corpus,
        &aspects,
        &studied,
        Some(&inputs.labels),
        cfg,
    )?;
    let models = train_models(&features, &dists, &split.train, cfg)?;
    let runs = rank_all(
        &inputs.index,
        &inputs.aliases,
        &aspects,
        &features,
        &dists,
        &models,
        &split.test,
        cfg,
    )?;
    let metrics = evaluate_runs(&runs, &inputs.labels, &studied)?;
    let report = build_report(&method_evals(&metrics, |_| true), METHODS[0])?;
    Ok(Experiment {
        studied,
        split,
        candidates,
        aspects,
        signals,
        folds,
        event_model,
        dists,
        features,
        models,
        runs,
        metrics,
        report,
    })
}
