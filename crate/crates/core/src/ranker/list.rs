use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::logstore::Day;
use crate::scalar::Scalar;

/// Aspects by descending score, ties in lexicographic order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RankedList<T> {
    pub entries: Vec<(String, T)>,
}

fn by_score_then_text<T: Scalar>(a: &(String, T), b: &(String, T)) -> Ordering {
    b.1.as_f64()
        .total_cmp(&a.1.as_f64())
        .then_with(|| a.0.cmp(&b.0))
}

impl<T: Scalar> RankedList<T> {
    /// Sorts scored aspects; a repeated aspect keeps its best score.
    pub fn from_scores(scores: Vec<(String, T)>) -> Self {
        let mut best: HashMap<String, T> = HashMap::new();
        for (a, s) in scores {
            best.entry(a)
                .and_modify(|b| {
                    if s.as_f64().total_cmp(&b.as_f64()) == Ordering::Greater {
                        *b = s;
                    }
                })
                .or_insert(s);
        }
        let mut entries: Vec<(String, T)> = best.into_iter().collect();
        entries.sort_by(by_score_then_text);
        RankedList { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn aspects(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(a, _)| a.as_str())
    }
}

/// One line of a run file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunEntry {
    pub entity: String,
    pub day: Day,
    pub aspect: String,
    /// 1-based.
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

pub fn run_entries<T: Scalar>(entity: &str, day: Day, list: &RankedList<T>, tag: &str) -> Vec<RunEntry> {
    list.entries
        .iter()
        .enumerate()
        .map(|(i, (a, s))| RunEntry {
            entity: entity.to_string(),
            day,
            aspect: a.clone(),
            rank: i + 1,
            score: s.as_f64(),
            tag: tag.to_string(),
        })
        .collect()
}

/// Tab separated `entity day aspect rank score tag`.
pub fn runs_to_tsv(entries: &[RunEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out += &format!("{}\t{}\t{}\t{}\t{}\t{}\n", e.entity, e.day, e.aspect, e.rank, e.score, e.tag);
    }
    out
}

pub fn runs_from_tsv(raw: &str, origin: &str) -> Result<Vec<RunEntry>> {
    let mut out = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse {
            path: origin.to_string(),
            line: i + 1,
            message,
        };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(perr(format!("expected 6 fields, got {}", f.len())));
        }
        out.push(RunEntry {
            entity: f[0].to_string(),
            day: f[1].parse().map_err(|_| perr(format!("bad day {:?}", f[1])))?,
            aspect: f[2].to_string(),
            rank: f[3].parse().map_err(|_| perr(format!("bad rank {:?}", f[3])))?,
            score: f[4].parse().map_err(|_| perr(format!("bad score {:?}", f[4])))?,
            tag: f[5].to_string(),
        });
    }
    Ok(out)
}

pub fn load_runs(path: impl AsRef<Path>) -> Result<Vec<RunEntry>> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    runs_from_tsv(&raw, &path.display().to_string())
}
