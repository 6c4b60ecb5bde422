//! Per-stage manifests and chain validation.
//!
//! Every subcommand writes `manifests/<stage>.json` next to its outputs. The
//! manifest records the digest of each external input and upstream artifact
//! it read, the digest of its own parameters and the digests of what it
//! wrote. Consumers re-check the whole upstream chain before reading.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::stages::Stage;

pub const MANIFEST_FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub stage: String,
    pub seed: u64,
    pub param_hash: String,
    /// Digest of the parameter hash and every input digest, in order.
    pub input_hash: String,
    /// External files, as configured.
    pub inputs: Vec<FileHash>,
    /// Upstream artifacts, relative to the output directory.
    pub artifacts: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_bytes(&bytes))
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Output directory plus the inputs one stage has read so far.
pub struct Workspace {
    pub dir: PathBuf,
    seed: u64,
    hashes: Box<dyn Fn(Stage) -> String>,
    verified: RefCell<BTreeSet<&'static str>>,
    inputs: RefCell<Vec<FileHash>>,
    artifacts: RefCell<Vec<FileHash>>,
}

impl Workspace {
    /// `hashes` gives the current parameter hash of a stage.
    pub fn new(dir: PathBuf, seed: u64, hashes: impl Fn(Stage) -> String + 'static) -> Self {
        Workspace {
            dir,
            seed,
            hashes: Box::new(hashes),
            verified: RefCell::new(BTreeSet::new()),
            inputs: RefCell::new(vec![]),
            artifacts: RefCell::new(vec![]),
        }
    }

    fn manifest_path(&self, stage: Stage) -> PathBuf {
        self.dir.join("manifests").join(format!("{}.json", stage.name()))
    }

    fn read_manifest(&self, stage: Stage) -> Result<Option<Manifest>> {
        let path = self.manifest_path(stage);
        if !path.exists() {
            return Ok(None);
        }
        let raw = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let m: Manifest = serde_json::from_str(&raw)
            .map_err(|e| CliError::Stale(format!("{} is unreadable ({e}); re-run `{}`", path.display(), stage.name())))?;
        if m.format != MANIFEST_FORMAT {
            return Err(CliError::Stale(format!(
                "{} has format {}; re-run `{}`",
                path.display(),
                m.format,
                stage.name()
            )));
        }
        Ok(Some(m))
    }

    /// Checks `stage` and everything upstream of it against the files on
    /// disk and the current parameters.
    fn verify(&self, stage: Stage) -> Result<()> {
        if self.verified.borrow().contains(stage.name()) {
            return Ok(());
        }
        let name = stage.name();
        let m = self.read_manifest(stage)?.ok_or(CliError::MissingUpstream {
            artifact: format!("manifests/{name}.json"),
            stage: name,
        })?;
        if m.param_hash != (self.hashes)(stage) {
            return Err(CliError::Stale(format!(
                "parameters changed since `{name}` ran; re-run `{name}` and the stages after it"
            )));
        }
        for f in &m.outputs {
            let path = self.dir.join(&f.path);
            if !path.exists() {
                return Err(CliError::MissingUpstream {
                    artifact: f.path.clone(),
                    stage: name,
                });
            }
            if sha256_file(&path)? != f.sha256 {
                return Err(CliError::Stale(format!("{} was modified after `{name}` ran; re-run `{name}`", f.path)));
            }
        }
        for f in &m.inputs {
            let now = sha256_file(Path::new(&f.path))
                .map_err(|_| CliError::Stale(format!("input {} used by `{name}` is gone", f.path)))?;
            if now != f.sha256 {
                return Err(CliError::Stale(format!("input {} changed since `{name}` ran; re-run `{name}`", f.path)));
            }
        }
        for f in &m.artifacts {
            let producer = Stage::producing(&f.path).ok_or_else(|| {
                CliError::Stale(format!("`{name}` manifest names unknown artifact {}", f.path))
            })?;
            self.verify(producer)?;
            if sha256_file(&self.dir.join(&f.path))? != f.sha256 {
                return Err(CliError::Stale(format!(
                    "`{name}` consumed an older {}; re-run `{name}`",
                    f.path
                )));
            }
        }
        self.verified.borrow_mut().insert(name);
        Ok(())
    }

    /// Path of an upstream artifact after validating its chain. Records the
    /// artifact as an input of the running stage.
    pub fn need(&self, artifact: &str) -> Result<PathBuf> {
        let stage = Stage::producing(artifact).expect("artifact has a producer");
        let path = self.dir.join(artifact);
        if !path.exists() || !self.manifest_path(stage).exists() {
            return Err(CliError::MissingUpstream {
                artifact: artifact.to_string(),
                stage: stage.name(),
            });
        }
        self.verify(stage)?;
        self.artifacts.borrow_mut().push(FileHash {
            path: artifact.to_string(),
            sha256: sha256_file(&path)?,
        });
        Ok(path)
    }

    pub fn read_artifact(&self, artifact: &str) -> Result<String> {
        let path = self.need(artifact)?;
        std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))
    }

    /// Contents of an external input, recorded with its digest.
    pub fn read_input(&self, path: &Path) -> Result<String> {
        let raw = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.borrow_mut().push(FileHash {
            path: path.display().to_string(),
            sha256: sha256_bytes(&raw),
        });
        String::from_utf8(raw).map_err(|e| CliError::Config(format!("{} is not UTF-8: {e}", path.display())))
    }

    /// Writes the outputs and then the manifest of `stage`.
    pub fn finish(&self, stage: Stage, outputs: Vec<(&str, String)>) -> Result<()> {
        let declared = stage.outputs();
        debug_assert_eq!(declared.len(), outputs.len());
        let mut hashes = Vec::with_capacity(outputs.len());
        for (name, body) in &outputs {
            debug_assert!(declared.contains(name));
            let path = self.dir.join(name);
            write(&path, body.as_bytes())?;
            log::info!("wrote {}", path.display());
            hashes.push(FileHash {
                path: name.to_string(),
                sha256: sha256_bytes(body.as_bytes()),
            });
        }
        let param_hash = (self.hashes)(stage);
        let inputs = self.inputs.take();
        let artifacts = self.artifacts.take();
        let mut h = Sha256::new();
        h.update(param_hash.as_bytes());
        for f in inputs.iter().chain(&artifacts) {
            h.update(f.sha256.as_bytes());
        }
        let manifest = Manifest {
            format: MANIFEST_FORMAT,
            stage: stage.name().to_string(),
            seed: self.seed,
            param_hash,
            input_hash: hex::encode(h.finalize()),
            inputs,
            artifacts,
            outputs: hashes,
        };
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        write(&self.manifest_path(stage), body.as_bytes())
    }
}
