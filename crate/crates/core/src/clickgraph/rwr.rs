use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::VecDeque;

use super::graph::ClickGraph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RwrParams {
    /// Probability of jumping back to the source at each step.
    pub restart: f64,
    /// L1 change between iterates that counts as converged.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RwrParams {
    fn default() -> Self {
        RwrParams {
            restart: 0.15,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

impl RwrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.restart > 0.0 && self.restart < 1.0) {
            return Err(Error::param(format!("restart must lie in (0,1), got {}", self.restart)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("rwr tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("rwr max_iter must be positive"));
        }
        Ok(())
    }
}

/// Stationary scores of a walk restarting at one query node.
#[derive(Clone, Debug)]
pub struct RwrResult<T> {
    pub source: String,
    /// Query-side scores excluding the source, sorted descending with
    /// lexicographic tie-break. Unreachable queries are omitted.
    pub scores: Vec<(String, T)>,
    /// Score of every node (queries then urls), summing to one.
    pub node_scores: Vec<T>,
    pub iterations: usize,
    pub residual: T,
}

impl<T: Scalar> RwrResult<T> {
    pub fn score_of(&self, query: &str) -> T {
        self.scores
            .iter()
            .find(|(q, _)| q == query)
            .map(|(_, s)| *s)
            .unwrap_or_else(T::zero)
    }
}

pub(crate) fn by_score_then_text<T: Scalar>(a: &(String, T), b: &(String, T)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0))
}

/// Random walk with restart from `source`, iterating
/// `pi = (1 - c) P^T pi + c e_source` until the L1 change drops below `tol`.
///
/// Iteration is confined to the source's connected component; every other
/// node has score zero.
pub fn rwr<T: Scalar>(graph: &ClickGraph<T>, source: &str, params: &RwrParams) -> Result<RwrResult<T>> {
    params.validate()?;
    let src = graph
        .query_node(source)
        .ok_or_else(|| Error::UnknownNode(source.to_string()))?;
    let n = graph.num_nodes();
    let nq = graph.num_queries();

    // local numbering of the component
    let mut local = vec![usize::MAX; n];
    let mut members = vec![src];
    local[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        for (w, _) in graph.transitions(v) {
            if local[w] == usize::MAX {
                local[w] = members.len();
                members.push(w);
                queue.push_back(w);
            }
        }
    }
    let adj: Vec<Vec<(usize, T)>> = members
        .iter()
        .map(|&v| graph.transitions(v).into_iter().map(|(w, p)| (local[w], p)).collect())
        .collect();

    let c = T::lit(params.restart);
    let keep = T::one() - c;
    let tol = T::lit(params.tol);
    let m = members.len();
    let mut pi = vec![T::zero(); m];
    pi[0] = T::one();
    let mut next = vec![T::zero(); m];
    let mut iterations = 0;
    let mut residual = T::infinity();
    while iterations < params.max_iter {
        iterations += 1;
        next.iter_mut().for_each(|x| *x = T::zero());
        let mut dangling = T::zero();
        for (v, out) in adj.iter().enumerate() {
            if out.is_empty() {
                dangling += pi[v];
                continue;
            }
            let mass = keep * pi[v];
            for &(w, p) in out {
                next[w] += mass * p;
            }
        }
        next[0] += c + keep * dangling;
        residual = pi.iter().zip(&next).map(|(a, b)| (*a - *b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if residual < tol {
            break;
        }
    }
    if !(residual < tol) {
        return Err(Error::NotConverged {
            iterations,
            residual: residual.as_f64(),
        });
    }

    let mut node_scores = vec![T::zero(); n];
    for (i, &v) in members.iter().enumerate() {
        node_scores[v] = pi[i];
    }
    let mut scores: Vec<(String, T)> = members
        .iter()
        .zip(&pi)
        .filter(|(&v, s)| v < nq && v != src && **s > T::zero())
        .map(|(&v, &s)| (graph.queries()[v].clone(), s))
        .collect();
    scores.sort_by(by_score_then_text);
    Ok(RwrResult {
        source: source.to_string(),
        scores,
        node_scores,
        iterations,
        residual,
    })
}

/// Top-`k` related queries of `source` by walk score.
pub fn candidates<T: Scalar>(
    graph: &ClickGraph<T>,
    source: &str,
    k: usize,
    params: &RwrParams,
) -> Result<Vec<(String, T)>> {
    if k == 0 {
        return Err(Error::param("candidate count k must be positive"));
    }
    let mut scores = rwr(graph, source, params)?.scores;
    scores.truncate(k);
    Ok(scores)
}
