mod config;
mod error;
mod manifest;
mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aspect_rank::evalsynth::{generate, SynthSpec, SYNTH_FILES};
use clap::{Parser, Subcommand};
use serde_json::json;

use config::{load, param_hash, Overrides};
use error::Result;
use manifest::{write, FileHash};
use stages::Stage;

/// Entity aspect extraction and time-aware ranking over query logs.
///
/// Each subcommand reads the artifacts of the ones before it from the output
/// directory: ingest, graph, aspects, signals, classify, features, train,
/// rank, evaluate, report. `synth` writes a planted dataset plus a config
/// that points at it.
#[derive(Parser)]
#[command(name = "aspect-rank", version)]
struct Cli {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config value, e.g. `--set params.rank.c=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    /// Output directory (overrides paths.output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every stochastic step (overrides the config seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world with planted events and labels.
    Synth {
        /// Directory for the generated files and their config.json.
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        breaking: Option<usize>,
        #[arg(long)]
        anticipated: Option<usize>,
        #[arg(long)]
        days: Option<usize>,
    },
    /// Filter and index the query log.
    Ingest,
    /// Walk the click graph for related queries of every studied day.
    Graph,
    /// Cluster the candidates into representative aspects.
    Aspects,
    /// Compute event time-series signals.
    Signals,
    /// Cross-validate and train the event classifier; write distributions.
    Classify,
    /// Compute aspect ranking features.
    Features,
    /// Train the ensemble and single ranking models.
    Train,
    /// Rank the test aspects with every method.
    Rank,
    /// Score the ranked lists against the labels.
    Evaluate,
    /// Print and write the method comparison tables.
    Report,
}

fn synth(cli: &Cli, data_dir: &Path, breaking: Option<usize>, anticipated: Option<usize>, days: Option<usize>) -> Result<()> {
    let base = load(&Overrides {
        file: cli.config.as_deref(),
        sets: &cli.sets,
        out: None,
        seed: cli.seed,
    })?;
    let mut spec = SynthSpec {
        seed: base.seed,
        ..SynthSpec::default()
    };
    spec.breaking = breaking.unwrap_or(spec.breaking);
    spec.anticipated = anticipated.unwrap_or(spec.anticipated);
    spec.days = days.unwrap_or(spec.days);
    let out = generate(&spec)?;
    out.write_to(data_dir)?;

    let config = json!({
        "paths": {
            "log": "queries.tsv",
            "aliases": "aliases.json",
            "corpus": "corpus.jsonl",
            "edits": "edits.csv",
            "embeddings": "embeddings.txt",
            "labels": "labels.csv",
            "events": "events.csv",
            "output_dir": "out",
        },
        "seed": spec.seed,
    });
    let config = serde_json::to_string_pretty(&config).expect("config serializes") + "\n";
    write(&data_dir.join("config.json"), config.as_bytes())?;

    let mut outputs = Vec::new();
    for name in SYNTH_FILES {
        let path = data_dir.join(name);
        outputs.push(FileHash {
            path: name.to_string(),
            sha256: manifest::sha256_file(&path)?,
        });
    }
    let params = json!({
        "breaking": spec.breaking,
        "anticipated": spec.anticipated,
        "days": spec.days,
    });
    let manifest = json!({
        "stage": "synth",
        "seed": spec.seed,
        "param_hash": param_hash(&params),
        "params": params,
        "outputs": outputs,
    });
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write(&data_dir.join("manifest.json"), body.as_bytes())?;
    log::info!(
        "wrote {} breaking and {} anticipated entities to {}",
        spec.breaking,
        spec.anticipated,
        data_dir.display()
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    let stage = match &cli.command {
        Command::Synth {
            data_dir,
            breaking,
            anticipated,
            days,
        } => return synth(cli, data_dir, *breaking, *anticipated, *days),
        Command::Ingest => Stage::Ingest,
        Command::Graph => Stage::Graph,
        Command::Aspects => Stage::Aspects,
        Command::Signals => Stage::Signals,
        Command::Classify => Stage::Classify,
        Command::Features => Stage::Features,
        Command::Train => Stage::Train,
        Command::Rank => Stage::Rank,
        Command::Evaluate => Stage::Evaluate,
        Command::Report => Stage::Report,
    };
    let cfg = load(&Overrides {
        file: cli.config.as_deref(),
        sets: &cli.sets,
        out: cli.out.as_deref(),
        seed: cli.seed,
    })?;
    stages::run(stage, &cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| dispatch(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(2),
    }
}
