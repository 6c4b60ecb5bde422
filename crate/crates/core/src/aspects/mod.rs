//! Aspect extraction: cluster RWR candidates on blended lexical and semantic
//! similarity and keep one representative per cluster.

mod ap;
mod embedding;
mod similarity;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use ap::{affinity_propagation, ApParams, Clustering};
pub use embedding::EmbeddingTable;
pub use similarity::{lexical_sim, semantic_sim, SemanticScore, SimWeights, SimilarityMatrix};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::text::strip_phrase;

/// A related query as it comes out of the random walk.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedCandidate<T> {
    pub text: String,
    pub rwr_score: T,
    /// Total log count of the query.
    pub frequency: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AspectCandidate<T> {
    pub text: String,
    pub rwr_score: T,
    pub cluster_id: usize,
    pub is_representative: bool,
    pub frequency: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AspectParams {
    pub weights: SimWeights,
    pub ap: ApParams,
}

/// Clusters every candidate. Duplicate texts share the cluster of their
/// first occurrence. `entity_phrases` are removed from each text before
/// similarities are computed so the shared entity name does not dominate.
pub fn cluster_candidates<T: Scalar>(
    candidates: &[RankedCandidate<T>],
    emb: Option<&EmbeddingTable<T>>,
    params: &AspectParams,
    entity_phrases: &[String],
) -> Result<Vec<AspectCandidate<T>>> {
    if candidates.is_empty() {
        return Ok(vec![]);
    }
    let mut unique: Vec<String> = Vec::new();
    let mut slot = Vec::with_capacity(candidates.len());
    for c in candidates {
        match unique.iter().position(|u| *u == c.text) {
            Some(p) => slot.push(p),
            None => {
                slot.push(unique.len());
                unique.push(c.text.clone());
            }
        }
    }
    let stripped: Vec<String> = unique
        .iter()
        .map(|t| entity_phrases.iter().fold(t.clone(), |acc, p| strip_phrase(&acc, p)))
        .collect();
    let sim = SimilarityMatrix::build(&stripped, emb, params.weights)?;
    let clustering = affinity_propagation(&sim, &params.ap)?;

    let mut out: Vec<AspectCandidate<T>> = candidates
        .iter()
        .zip(&slot)
        .map(|(c, &u)| AspectCandidate {
            text: c.text.clone(),
            rwr_score: c.rwr_score,
            cluster_id: clustering.labels[u],
            is_representative: false,
            frequency: c.frequency,
        })
        .collect();
    for cluster in 0..clustering.num_clusters() {
        let best = (0..out.len())
            .filter(|&i| out[i].cluster_id == cluster)
            .min_by(|&i, &j| representative_order(&out[i], &out[j]));
        if let Some(b) = best {
            out[b].is_representative = true;
        }
    }
    Ok(out)
}

// Highest frequency, then higher rwr score, then lexicographic text.
fn representative_order<T: Scalar>(a: &AspectCandidate<T>, b: &AspectCandidate<T>) -> Ordering {
    b.frequency
        .cmp(&a.frequency)
        .then_with(|| b.rwr_score.partial_cmp(&a.rwr_score).unwrap_or(Ordering::Equal))
        .then_with(|| a.text.cmp(&b.text))
}

/// Top-`k` cluster representatives ordered by RWR score.
pub fn extract_aspects<T: Scalar>(
    candidates: &[RankedCandidate<T>],
    emb: Option<&EmbeddingTable<T>>,
    k: usize,
    params: &AspectParams,
    entity_phrases: &[String],
) -> Result<Vec<AspectCandidate<T>>> {
    if k == 0 {
        return Err(Error::param("k must be positive"));
    }
    let mut reps: Vec<AspectCandidate<T>> = cluster_candidates(candidates, emb, params, entity_phrases)?
        .into_iter()
        .filter(|c| c.is_representative)
        .collect();
    reps.sort_by(|a, b| {
        b.rwr_score
            .partial_cmp(&a.rwr_score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.text.cmp(&b.text))
    });
    reps.truncate(k);
    Ok(reps)
}

#[derive(Serialize)]
struct AspectLine<'a> {
    entity: &'a str,
    aspect: &'a str,
    rwr_score: f64,
    cluster_id: usize,
}

/// JSON lines `{entity, aspect, rwr_score, cluster_id}`.
pub fn aspects_to_jsonl<T: Scalar>(entity: &str, aspects: &[AspectCandidate<T>]) -> String {
    let mut out = String::new();
    for a in aspects {
        let line = AspectLine {
            entity,
            aspect: &a.text,
            rwr_score: a.rwr_score.as_f64(),
            cluster_id: a.cluster_id,
        };
        out.push_str(&serde_json::to_string(&line).expect("plain struct serializes"));
        out.push('\n');
    }
    out
}
