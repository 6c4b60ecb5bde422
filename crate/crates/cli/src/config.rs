//! JSON run configuration.
//!
//! Precedence, lowest first: built-in defaults, the `--config` file,
//! `--set key=value` overrides in command-line order, then the dedicated
//! `--out` and `--seed` flags. Relative paths inside the config file resolve
//! against the file's directory; paths given on the command line resolve
//! against the working directory.

use std::path::{Path, PathBuf};

use aspect_rank::pipeline::{with_seed, PipelineConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub log: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub edits: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            log: None,
            aliases: None,
            corpus: None,
            edits: None,
            embeddings: None,
            labels: None,
            events: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub paths: Paths,
    pub seed: u64,
    pub params: PipelineConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            paths: Paths::default(),
            seed: 42,
            params: PipelineConfig::default(),
        }
    }
}

impl Config {
    /// Parameters with the run seed pushed into every stochastic step.
    pub fn seeded(&self) -> PipelineConfig {
        with_seed(self.params.clone(), self.seed)
    }

    /// `name` must be set in `paths`.
    pub fn require(&self, path: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
        path.clone()
            .ok_or_else(|| CliError::Config(format!("paths.{name} is not set")))
    }
}

pub struct Overrides<'a> {
    pub file: Option<&'a Path>,
    pub sets: &'a [String],
    pub out: Option<&'a Path>,
    pub seed: Option<u64>,
}

fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn resolve_paths(doc: &mut Value, dir: &Path) {
    let Some(Value::Object(paths)) = doc.get_mut("paths") else {
        return;
    };
    for v in paths.values_mut() {
        if let Value::String(s) = v {
            let p = Path::new(s.as_str());
            if p.is_relative() {
                *s = dir.join(p).display().to_string();
            }
        }
    }
}

/// Applies one `a.b.c=value` override. The value is read as JSON and falls
/// back to a plain string.
fn apply_set(doc: &mut Value, set: &str) -> Result<()> {
    let (key, raw) = set
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {set:?}")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut patch = value;
    for part in key.rsplit('.') {
        if part.is_empty() {
            return Err(CliError::Config(format!("empty segment in --set key {key:?}")));
        }
        let mut m = Map::new();
        m.insert(part.to_string(), patch);
        patch = Value::Object(m);
    }
    merge(doc, patch);
    Ok(())
}

pub fn load(o: &Overrides) -> Result<Config> {
    let mut doc = serde_json::to_value(Config::default()).expect("config serializes");
    if let Some(path) = o.file {
        let raw = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut file: Value = serde_json::from_str(&raw)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        resolve_paths(&mut file, path.parent().unwrap_or(Path::new("")));
        merge(&mut doc, file);
    }
    for s in o.sets {
        apply_set(&mut doc, s)?;
    }
    let mut cfg: Config = serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(out) = o.out {
        cfg.paths.output_dir = out.to_path_buf();
    }
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    cfg.params.validate()?;
    Ok(cfg)
}

/// Stable digest of a serializable parameter block.
pub fn param_hash<T: Serialize>(params: &T) -> String {
    let json = serde_json::to_string(params).expect("parameters serialize");
    hex::encode(Sha256::digest(json.as_bytes()))
}
