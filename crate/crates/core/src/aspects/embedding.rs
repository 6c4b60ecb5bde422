use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::text::clean_tokens;

/// Word vectors in the plain text interchange format, one `token v1 .. vd`
/// per line. A leading `count dim` header line is tolerated.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable<T> {
    dim: usize,
    vectors: HashMap<String, Vec<T>>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(entries: impl IntoIterator<Item = (String, Vec<T>)>) -> Result<Self> {
        let mut dim = None;
        let mut vectors = HashMap::new();
        for (tok, v) in entries {
            let d = *dim.get_or_insert(v.len());
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
            if d == 0 {
                return Err(Error::param("embedding vectors must be non-empty"));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::param(format!("non-finite embedding for token {tok:?}")));
            }
            vectors.insert(tok.to_lowercase(), v);
        }
        match dim {
            Some(dim) => Ok(EmbeddingTable { dim, vectors }),
            None => Err(Error::InsufficientData("embedding table has no tokens".into())),
        }
    }

    pub fn parse(raw: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in raw.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if i == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                continue;
            }
            let vals: std::result::Result<Vec<f64>, _> = fields[1..].iter().map(|f| f.parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::Parse {
                path: "<embeddings>".into(),
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.push((fields[0].to_string(), vals.into_iter().map(T::lit).collect()));
        }
        Self::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&raw).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: path.display().to_string(),
                line,
                message,
            },
            other => other,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[T]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Mean vector of the in-vocabulary tokens; `None` when all are OOV.
    pub fn mean_vector(&self, text: &str) -> Option<Vec<T>> {
        let mut acc = vec![T::zero(); self.dim];
        let mut hits = 0usize;
        for tok in clean_tokens(text) {
            if let Some(v) = self.vectors.get(&tok) {
                for (a, &x) in acc.iter_mut().zip(v) {
                    *a += x;
                }
                hits += 1;
            }
        }
        if hits == 0 {
            return None;
        }
        let n = T::from_count(hits);
        acc.iter_mut().for_each(|a| *a /= n);
        Some(acc)
    }

    pub fn to_text(&self) -> String {
        let mut toks: Vec<&String> = self.vectors.keys().collect();
        toks.sort();
        let mut out = String::new();
        for t in toks {
            out.push_str(t);
            for x in &self.vectors[t] {
                out.push(' ');
                out.push_str(&format!("{:.6}", x.as_f64()));
            }
            out.push('\n');
        }
        out
    }
}
