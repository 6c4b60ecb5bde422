use aspect_rank::evalsynth::{build_report, events_from_csv, GradedLabelSet};
use aspect_rank::eventclf::{EventTime, EventType};
use aspect_rank::features::{features_from_csv, features_to_csv, CorpusIndex, CorpusStore};
use aspect_rank::logstore::{ingest_str, EditLog, EntityAliasTable, LogIndex};
use aspect_rank::pipeline::{
    build_aspects, classification_cv, compute_signal_rows, distributions, distributions_from_csv,
    distributions_to_csv, evaluate_runs, extract_candidates, feature_rows, method_evals, month_split,
    query_metrics_from_csv, query_metrics_to_csv, rank_all, slice_report, studied_days, train_event_model,
    train_models, AspectRecord, CandidateRecord, ClassificationFold, PipelineConfig, Split, StudiedDay,
    TrainedModels, METHODS,
};
use aspect_rank::ranker::{runs_from_tsv, runs_to_tsv};
use aspect_rank::signals::{signals_from_csv, signals_to_csv};
use aspect_rank::{EmbeddingTable, Error};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::config::{param_hash, Config};
use crate::error::{CliError, Result};
use crate::manifest::Workspace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Graph,
    Aspects,
    Signals,
    Classify,
    Features,
    Train,
    Rank,
    Evaluate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Ingest,
        Stage::Graph,
        Stage::Aspects,
        Stage::Signals,
        Stage::Classify,
        Stage::Features,
        Stage::Train,
        Stage::Rank,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Graph => "graph",
            Stage::Aspects => "aspects",
            Stage::Signals => "signals",
            Stage::Classify => "classify",
            Stage::Features => "features",
            Stage::Train => "train",
            Stage::Rank => "rank",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }

    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &["index.json"],
            Stage::Graph => &["studied.json", "split.json", "candidates.json"],
            Stage::Aspects => &["aspects.json"],
            Stage::Signals => &["signals.csv"],
            Stage::Classify => &["event_model.json", "distributions.csv", "classification_cv.json"],
            Stage::Features => &["features.csv"],
            Stage::Train => &["models.json"],
            Stage::Rank => &["runs.tsv"],
            Stage::Evaluate => &["metrics.csv"],
            Stage::Report => &["report.txt", "report.csv"],
        }
    }

    pub fn producing(artifact: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.outputs().contains(&artifact))
    }

    /// Digest of the parameters this stage reads.
    pub fn param_hash(self, p: &PipelineConfig) -> String {
        let v = match self {
            Stage::Ingest => json!({ "filter": p.filter }),
            Stage::Graph => json!({ "rwr": p.rwr, "candidates": p.candidates }),
            Stage::Aspects => json!({ "aspect": p.aspect, "aspects": p.aspects }),
            Stage::Signals => json!({ "signal": p.signal, "signal_window": p.signal_window }),
            Stage::Classify => json!({
                "cascade": p.cascade,
                "mixture": p.mixture,
                "cv_bins": p.cv_bins,
                "cv_test_bins": p.cv_test_bins,
            }),
            Stage::Features => json!({ "features": p.features }),
            Stage::Train => json!({ "rank": p.rank }),
            Stage::Rank => json!({ "period": p.signal.period, "window_w": p.window_w, "last_n": p.last_n }),
            Stage::Evaluate | Stage::Report => json!({}),
        };
        param_hash(&json!({ "stage": self.name(), "params": v }))
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("artifact serializes") + "\n"
}

fn to_json_pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("artifact serializes") + "\n"
}

fn from_json<T: DeserializeOwned>(raw: &str, name: &str) -> Result<T> {
    serde_json::from_str(raw).map_err(|e| CliError::Stale(format!("{name} is unreadable: {e}")))
}

struct Ctx<'a> {
    cfg: &'a Config,
    params: PipelineConfig,
    ws: Workspace,
}

impl Ctx<'_> {
    fn artifact<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        from_json(&self.ws.read_artifact(name)?, name)
    }

    fn index(&self) -> Result<LogIndex> {
        Ok(LogIndex::from_json(&self.ws.read_artifact("index.json")?)?)
    }

    fn aliases(&self) -> Result<EntityAliasTable> {
        let path = self.cfg.require(&self.cfg.paths.aliases, "aliases")?;
        Ok(EntityAliasTable::from_json(&self.ws.read_input(&path)?)?)
    }

    fn labels(&self) -> Result<Option<GradedLabelSet>> {
        match &self.cfg.paths.labels {
            Some(path) => Ok(Some(GradedLabelSet::from_csv(
                &self.ws.read_input(path)?,
                &path.display().to_string(),
            )?)),
            None => Ok(None),
        }
    }

    fn studied(&self) -> Result<Vec<StudiedDay>> {
        self.artifact("studied.json")
    }

    fn split(&self) -> Result<Split> {
        self.artifact("split.json")
    }

    fn dists(&self) -> Result<aspect_rank::ranker::DistributionMap<f64>> {
        Ok(distributions_from_csv(&self.ws.read_artifact("distributions.csv")?, "distributions.csv")?)
    }

    fn features(&self) -> Result<Vec<aspect_rank::features::FeatureRow<f64>>> {
        Ok(features_from_csv(&self.ws.read_artifact("features.csv")?, "features.csv")?)
    }
}

pub fn run(stage: Stage, cfg: &Config) -> Result<()> {
    let params = cfg.seeded();
    let hashes = params.clone();
    let ctx = Ctx {
        cfg,
        params,
        ws: Workspace::new(cfg.paths.output_dir.clone(), cfg.seed, move |s| s.param_hash(&hashes)),
    };
    let outputs = match stage {
        Stage::Ingest => ingest(&ctx)?,
        Stage::Graph => graph(&ctx)?,
        Stage::Aspects => aspects(&ctx)?,
        Stage::Signals => signals(&ctx)?,
        Stage::Classify => classify(&ctx)?,
        Stage::Features => features(&ctx)?,
        Stage::Train => train(&ctx)?,
        Stage::Rank => rank(&ctx)?,
        Stage::Evaluate => evaluate(&ctx)?,
        Stage::Report => report(&ctx)?,
    };
    ctx.ws.finish(stage, outputs)
}

type Outputs = Vec<(&'static str, String)>;

fn ingest(c: &Ctx) -> Result<Outputs> {
    let path = c.cfg.require(&c.cfg.paths.log, "log")?;
    let index = ingest_str(&c.ws.read_input(&path)?, c.params.filter)?;
    let span = index
        .span()
        .ok_or_else(|| Error::InsufficientData(format!("{} has no usable log lines", path.display())))?;
    log::info!("indexed {} queries over {} .. {}", index.num_queries(), span.first, span.last);
    Ok(vec![("index.json", index.to_json() + "\n")])
}

fn graph(c: &Ctx) -> Result<Outputs> {
    let index = c.index()?;
    let aliases = c.aliases()?;
    let path = c.cfg.require(&c.cfg.paths.events, "events")?;
    let events = events_from_csv(&c.ws.read_input(&path)?, &path.display().to_string())?;
    let span = index.span().ok_or_else(|| Error::InsufficientData("empty log".into()))?;
    let studied = studied_days(&events, span);
    let split = month_split(&studied)?;
    let candidates = extract_candidates(&index, &aliases, &studied, &c.params)?;
    Ok(vec![
        ("studied.json", to_json_pretty(&studied)),
        ("split.json", to_json_pretty(&split)),
        ("candidates.json", to_json(&candidates)),
    ])
}

fn aspects(c: &Ctx) -> Result<Outputs> {
    let index = c.index()?;
    let aliases = c.aliases()?;
    let candidates: Vec<CandidateRecord> = c.artifact("candidates.json")?;
    let emb = match &c.cfg.paths.embeddings {
        Some(p) => Some(EmbeddingTable::parse(&c.ws.read_input(p)?)?),
        None => None,
    };
    let records = build_aspects(&index, &aliases, emb.as_ref(), &candidates, &c.params)?;
    Ok(vec![("aspects.json", to_json(&records))])
}

fn signals(c: &Ctx) -> Result<Outputs> {
    let index = c.index()?;
    let aliases = c.aliases()?;
    let candidates: Vec<CandidateRecord> = c.artifact("candidates.json")?;
    let edits = match &c.cfg.paths.edits {
        Some(p) => Some(EditLog::parse(&c.ws.read_input(p)?)),
        None => None,
    };
    let rows = compute_signal_rows(&index, &aliases, edits.as_ref(), &candidates, &c.params)?;
    Ok(vec![("signals.csv", signals_to_csv(&rows))])
}

fn classify(c: &Ctx) -> Result<Outputs> {
    let rows = signals_from_csv::<f64>(&c.ws.read_artifact("signals.csv")?, "signals.csv")?;
    let studied = c.studied()?;
    let split = c.split()?;
    let folds = classification_cv(&rows, &studied, &c.params)?;
    let model = train_event_model(&rows, &studied, &split.train, &c.params)?;
    let dists = distributions(&model, &rows)?;
    Ok(vec![
        ("event_model.json", model.to_json() + "\n"),
        ("distributions.csv", distributions_to_csv(&dists)),
        ("classification_cv.json", to_json_pretty(&folds)),
    ])
}

fn features(c: &Ctx) -> Result<Outputs> {
    let index = c.index()?;
    let aliases = c.aliases()?;
    let path = c.cfg.require(&c.cfg.paths.corpus, "corpus")?;
    let corpus = CorpusStore::parse_jsonl(&c.ws.read_input(&path)?, &path.display().to_string())?;
    let labels = c.labels()?;
    let aspects: Vec<AspectRecord> = c.artifact("aspects.json")?;
    let studied = c.studied()?;
    let rows = feature_rows(
        &index,
        &aliases,
        &CorpusIndex::build(&corpus),
        &aspects,
        &studied,
        labels.as_ref(),
        &c.params,
    )?;
    Ok(vec![("features.csv", features_to_csv(&rows))])
}

fn train(c: &Ctx) -> Result<Outputs> {
    let features = c.features()?;
    let dists = c.dists()?;
    let split = c.split()?;
    let models = train_models(&features, &dists, &split.train, &c.params)?;
    Ok(vec![("models.json", to_json(&models))])
}

fn rank(c: &Ctx) -> Result<Outputs> {
    let index = c.index()?;
    let aliases = c.aliases()?;
    let aspects: Vec<AspectRecord> = c.artifact("aspects.json")?;
    let features = c.features()?;
    let dists = c.dists()?;
    let models: TrainedModels = c.artifact("models.json")?;
    let split = c.split()?;
    let runs = rank_all(&index, &aliases, &aspects, &features, &dists, &models, &split.test, &c.params)?;
    Ok(vec![("runs.tsv", runs_to_tsv(&runs))])
}

fn evaluate(c: &Ctx) -> Result<Outputs> {
    let runs = runs_from_tsv(&c.ws.read_artifact("runs.tsv")?, "runs.tsv")?;
    let labels = c
        .labels()?
        .ok_or_else(|| CliError::Config("paths.labels is not set".into()))?;
    let studied = c.studied()?;
    let metrics = evaluate_runs(&runs, &labels, &studied)?;
    Ok(vec![("metrics.csv", query_metrics_to_csv(&metrics))])
}

fn report(c: &Ctx) -> Result<Outputs> {
    let metrics = query_metrics_from_csv(&c.ws.read_artifact("metrics.csv")?, "metrics.csv")?;
    let folds: Vec<ClassificationFold> = c.artifact("classification_cv.json")?;
    let overall = build_report(&method_evals(&metrics, |_| true), METHODS[0])?;

    let mut text = String::from("Aspect ranking, all test queries\n");
    text += &overall.to_text();
    for kind in EventType::ALL {
        for period in EventTime::ALL {
            if let Some(r) = slice_report(&metrics, kind, period)? {
                text += &format!("\n{kind} entities, {period} the event\n");
                text += &r.to_text();
            }
        }
    }
    if !folds.is_empty() {
        let n = folds.len() as f64;
        let mean = |f: fn(&ClassificationFold) -> f64| folds.iter().map(f).sum::<f64>() / n;
        text += &format!(
            "\nEvent classification, {} rolling folds\ntype accuracy {:.4}; time weighted F1 cascaded {:.4}, flat {:.4}\n",
            folds.len(),
            mean(|f| f.type_accuracy),
            mean(|f| f.cascade_time_f1),
            mean(|f| f.flat_time_f1),
        );
    }
    print!("{text}");
    Ok(vec![("report.txt", text), ("report.csv", overall.to_csv())])
}
