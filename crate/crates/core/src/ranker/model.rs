use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::list::RankedList;
use crate::error::{Error, Result};
use crate::eventclf::{TimeTypeDistribution, NUM_CELLS};
use crate::features::FeatureRow;
use crate::logstore::Day;
use crate::scalar::Scalar;
use crate::standardize::{check_rows, Standardizer};

/// Row `better` should rank above row `worse` for `entity` at `day`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairwisePreference {
    pub entity: String,
    pub day: Day,
    pub better: usize,
    pub worse: usize,
}

/// Time/type distribution per (entity, hitting day).
pub type DistributionMap<T> = HashMap<(String, Day), TimeTypeDistribution<T>>;

/// Every strictly ordered pair of graded rows sharing an (entity, day).
/// Rows without a grade or with grade 0 take no part.
pub fn preferences_from_rows<T>(rows: &[FeatureRow<T>]) -> Vec<PairwisePreference> {
    let mut groups: BTreeMap<(&str, Day), Vec<(usize, u8)>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        if let Some(g) = r.grade.filter(|&g| g > 0) {
            groups.entry((r.entity.as_str(), r.day)).or_default().push((i, g));
        }
    }
    let mut out = Vec::new();
    for ((entity, day), members) in groups {
        for &(i, gi) in &members {
            for &(j, gj) in &members {
                if gi > gj {
                    out.push(PairwisePreference {
                        entity: entity.to_string(),
                        day,
                        better: i,
                        worse: j,
                    });
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankParams {
    /// Trade-off between margin violations and weight norm.
    pub c: f64,
    pub epochs: usize,
    pub eta0: f64,
    pub seed: u64,
}

impl Default for RankParams {
    fn default() -> Self {
        RankParams {
            c: 20.0,
            epochs: 50,
            eta0: 0.1,
            seed: 42,
        }
    }
}

impl RankParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(Error::param("trade-off C must be finite and non-negative"));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs must be positive"));
        }
        if !(self.eta0 > 0.0) {
            return Err(Error::param("initial step eta0 must be positive"));
        }
        Ok(())
    }
}

pub const RANK_MODEL_VERSION: u32 = 1;

/// Six linear scorers, one per (type, time) cell, over shared scaled features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSet<T> {
    pub version: u32,
    /// Width of raw feature vectors.
    pub input_dim: usize,
    /// Input columns fed to the scorers.
    pub columns: Vec<usize>,
    pub standardization: Standardizer<T>,
    /// Indexed by cell.
    pub weights: Vec<Vec<T>>,
    pub c: f64,
    pub seed: u64,
    /// Objective of the returned weights, then per epoch.
    pub objective: T,
    pub history: Vec<T>,
}

/// A single linear scorer over a feature subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleModel<T> {
    pub version: u32,
    pub input_dim: usize,
    pub columns: Vec<usize>,
    pub standardization: Standardizer<T>,
    pub weights: Vec<T>,
    pub c: f64,
    pub objective: T,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn select<T: Scalar>(x: &[T], columns: &[usize], dim: usize) -> Result<Vec<T>> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x.len(),
        });
    }
    Ok(columns.iter().map(|&j| x[j]).collect())
}

fn hinge<T: Scalar>(margin: T) -> T {
    (T::one() - margin).max(T::zero())
}

/// `sum_k ||w_k||^2 / 2 + C sum_pairs hinge(1 - sum_k p_k w_k . d)`.
fn objective<T: Scalar>(w: &[Vec<T>], diffs: &[Vec<T>], probs: &[Vec<T>], c: T) -> T {
    let reg: T = w.iter().map(|wk| dot(wk, wk)).sum::<T>() * T::lit(0.5);
    let loss: T = diffs.iter().zip(probs).map(|(d, p)| hinge(margin(w, d, p))).sum();
    reg + c * loss
}

fn margin<T: Scalar>(w: &[Vec<T>], d: &[T], p: &[T]) -> T {
    w.iter().zip(p).map(|(wk, &pk)| pk * dot(wk, d)).sum()
}

struct Prepared<T> {
    input_dim: usize,
    columns: Vec<usize>,
    standardization: Standardizer<T>,
    diffs: Vec<Vec<T>>,
}

/// Validates the preferences and builds scaled `better - worse` differences.
fn prepare<T: Scalar>(prefs: &[PairwisePreference], features: &[Vec<T>], columns: Vec<usize>) -> Result<Prepared<T>> {
    if prefs.is_empty() {
        return Err(Error::InsufficientData("no pairwise preferences".into()));
    }
    if columns.is_empty() {
        return Err(Error::param("feature mask selects no columns"));
    }
    let dim = features.first().map_or(0, Vec::len);
    check_rows(features, dim)?;
    if let Some(&bad) = columns.iter().find(|&&j| j >= dim) {
        return Err(Error::param(format!("feature column {bad} out of range for width {dim}")));
    }
    for p in prefs {
        if p.better >= features.len() || p.worse >= features.len() || p.better == p.worse {
            return Err(Error::param(format!(
                "preference ({}, {}) does not name two distinct feature rows",
                p.better, p.worse
            )));
        }
    }
    let mut used: Vec<usize> = prefs.iter().flat_map(|p| [p.better, p.worse]).collect();
    used.sort_unstable();
    used.dedup();
    let sub: Vec<Vec<T>> = used
        .iter()
        .map(|&i| columns.iter().map(|&j| features[i][j]).collect())
        .collect();
    let standardization = Standardizer::fit(&sub)?;
    let scaled: HashMap<usize, Vec<T>> = used
        .iter()
        .zip(&sub)
        .map(|(&i, r)| standardization.scale(r).map(|z| (i, z)))
        .collect::<Result<_>>()?;
    let diffs = prefs
        .iter()
        .map(|p| scaled[&p.better].iter().zip(&scaled[&p.worse]).map(|(&a, &b)| a - b).collect())
        .collect();
    Ok(Prepared {
        input_dim: dim,
        columns,
        standardization,
        diffs,
    })
}

/// Averaged stochastic subgradient descent on the per-pair objective
/// `lambda/2 sum ||w||^2 + hinge`, `lambda = 1/(C n)`, step `eta0/(1+lambda t)`.
/// Returns averaged weights and the full objective after each epoch.
fn fit<T: Scalar>(diffs: &[Vec<T>], probs: &[Vec<T>], k: usize, params: &RankParams) -> (Vec<Vec<T>>, Vec<T>) {
    let d = diffs.first().map_or(0, Vec::len);
    let n = diffs.len();
    let c = T::lit(params.c);
    if params.c == 0.0 {
        let w = vec![vec![T::zero(); d]; k];
        let h = vec![T::zero(); params.epochs];
        return (w, h);
    }
    let lambda = T::one() / (c * T::from_count(n));
    let eta0 = T::lit(params.eta0);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w = vec![vec![T::zero(); d]; k];
    let mut avg = w.clone();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(params.epochs);
    let mut t = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = eta0 / (T::one() + lambda * T::from_count(t));
            let m = margin(&w, &diffs[i], &probs[i]);
            let shrink = T::one() - eta * lambda;
            for wk in w.iter_mut() {
                wk.iter_mut().for_each(|v| *v *= shrink);
            }
            if m < T::one() {
                for (wk, &pk) in w.iter_mut().zip(&probs[i]) {
                    if pk != T::zero() {
                        for (v, &x) in wk.iter_mut().zip(&diffs[i]) {
                            *v += eta * pk * x;
                        }
                    }
                }
            }
            t += 1;
            let rate = T::one() / T::from_count(t);
            for (ak, wk) in avg.iter_mut().zip(&w) {
                for (a, &v) in ak.iter_mut().zip(wk) {
                    *a += (v - *a) * rate;
                }
            }
        }
        history.push(objective(&avg, diffs, probs, c));
    }
    (avg, history)
}

fn lookup<T: Scalar>(dists: &DistributionMap<T>, p: &PairwisePreference) -> Result<Vec<T>> {
    let dist = dists
        .get(&(p.entity.clone(), p.day))
        .ok_or_else(|| Error::UnknownEntity(format!("no time/type distribution for {} at {}", p.entity, p.day)))?;
    if dist.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: p.better,
            context: format!("distribution of {} at {}", p.entity, p.day),
        });
    }
    Ok(dist.to_vec())
}

/// Trains the six cell models jointly; each pair's margin is the
/// distribution-weighted sum of the cell scores.
pub fn train_ensemble<T: Scalar>(
    prefs: &[PairwisePreference],
    features: &[Vec<T>],
    dists: &DistributionMap<T>,
    params: &RankParams,
) -> Result<ModelSet<T>> {
    params.validate()?;
    let dim = features.first().map_or(0, Vec::len);
    let prep = prepare(prefs, features, (0..dim).collect())?;
    let probs: Vec<Vec<T>> = prefs.iter().map(|p| lookup(dists, p)).collect::<Result<_>>()?;
    let (weights, history) = fit(&prep.diffs, &probs, NUM_CELLS, params);
    let objective = objective(&weights, &prep.diffs, &probs, T::lit(params.c));
    log::debug!("ensemble trained on {} pairs, objective {}", prefs.len(), objective);
    Ok(ModelSet {
        version: RANK_MODEL_VERSION,
        input_dim: prep.input_dim,
        columns: prep.columns,
        standardization: prep.standardization,
        weights,
        c: params.c,
        seed: params.seed,
        objective,
        history,
    })
}

/// Plain pairwise hinge ranking on the masked columns.
pub fn train_single<T: Scalar>(
    prefs: &[PairwisePreference],
    features: &[Vec<T>],
    columns: &[usize],
    params: &RankParams,
) -> Result<SingleModel<T>> {
    params.validate()?;
    let prep = prepare(prefs, features, columns.to_vec())?;
    let probs = vec![vec![T::one()]; prefs.len()];
    let (mut weights, _) = fit(&prep.diffs, &probs, 1, params);
    let weights = weights.pop().expect("one model");
    let objective = objective(std::slice::from_ref(&weights), &prep.diffs, &probs, T::lit(params.c));
    Ok(SingleModel {
        version: RANK_MODEL_VERSION,
        input_dim: prep.input_dim,
        columns: prep.columns,
        standardization: prep.standardization,
        weights,
        c: params.c,
        objective,
    })
}

impl<T: Scalar> ModelSet<T> {
    fn features(&self, x: &[T]) -> Result<Vec<T>> {
        self.standardization.scale(&select(x, &self.columns, self.input_dim)?)
    }

    /// Cell scores `w_k . x`.
    pub fn cell_scores(&self, x: &[T]) -> Result<Vec<T>> {
        let z = self.features(x)?;
        Ok(self.weights.iter().map(|w| dot(w, &z)).collect())
    }

    /// Objective of these weights on `prefs`.
    pub fn objective_on(
        &self,
        prefs: &[PairwisePreference],
        features: &[Vec<T>],
        dists: &DistributionMap<T>,
    ) -> Result<T> {
        let diffs = scaled_diffs(prefs, features, |x| self.features(x))?;
        let probs: Vec<Vec<T>> = prefs.iter().map(|p| lookup(dists, p)).collect::<Result<_>>()?;
        Ok(objective(&self.weights, &diffs, &probs, T::lit(self.c)))
    }

    /// Share of preferences whose better row scores strictly higher.
    pub fn pairwise_accuracy(
        &self,
        prefs: &[PairwisePreference],
        features: &[Vec<T>],
        dists: &DistributionMap<T>,
    ) -> Result<f64> {
        let mut ok = 0usize;
        for p in prefs {
            let dist = lookup(dists, p)?;
            let dist: TimeTypeDistribution<T> = std::array::from_fn(|k| dist[k]);
            let a = ensemble_score(self, &features[p.better], &dist)?;
            let b = ensemble_score(self, &features[p.worse], &dist)?;
            ok += usize::from(a > b);
        }
        Ok(ok as f64 / prefs.len().max(1) as f64)
    }
}

impl<T: Scalar> SingleModel<T> {
    fn features(&self, x: &[T]) -> Result<Vec<T>> {
        self.standardization.scale(&select(x, &self.columns, self.input_dim)?)
    }

    pub fn score(&self, x: &[T]) -> Result<T> {
        Ok(dot(&self.weights, &self.features(x)?))
    }

    pub fn objective_on(&self, prefs: &[PairwisePreference], features: &[Vec<T>]) -> Result<T> {
        let diffs = scaled_diffs(prefs, features, |x| self.features(x))?;
        let probs = vec![vec![T::one()]; prefs.len()];
        Ok(objective(std::slice::from_ref(&self.weights), &diffs, &probs, T::lit(self.c)))
    }

    pub fn pairwise_accuracy(&self, prefs: &[PairwisePreference], features: &[Vec<T>]) -> Result<f64> {
        let mut ok = 0usize;
        for p in prefs {
            ok += usize::from(self.score(&features[p.better])? > self.score(&features[p.worse])?);
        }
        Ok(ok as f64 / prefs.len().max(1) as f64)
    }

    pub fn rank(&self, candidates: &[(String, Vec<T>)]) -> Result<RankedList<T>> {
        let scored = candidates
            .iter()
            .map(|(a, x)| self.score(x).map(|s| (a.clone(), s)))
            .collect::<Result<Vec<_>>>()?;
        Ok(RankedList::from_scores(scored))
    }
}

fn scaled_diffs<T: Scalar>(
    prefs: &[PairwisePreference],
    features: &[Vec<T>],
    f: impl Fn(&[T]) -> Result<Vec<T>>,
) -> Result<Vec<Vec<T>>> {
    prefs
        .iter()
        .map(|p| {
            let (a, b) = match (features.get(p.better), features.get(p.worse)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::param("preference row out of range")),
            };
            let (za, zb) = (f(a)?, f(b)?);
            Ok(za.iter().zip(&zb).map(|(&x, &y)| x - y).collect())
        })
        .collect()
}

/// `sum_k P(cell k) w_k . x`.
pub fn ensemble_score<T: Scalar>(models: &ModelSet<T>, x: &[T], dist: &TimeTypeDistribution<T>) -> Result<T> {
    let scores = models.cell_scores(x)?;
    Ok(scores.iter().zip(dist).map(|(&s, &p)| s * p).sum())
}

/// Candidates ordered by ensemble score; ties by aspect text.
pub fn rank<T: Scalar>(
    models: &ModelSet<T>,
    candidates: &[(String, Vec<T>)],
    dist: &TimeTypeDistribution<T>,
) -> Result<RankedList<T>> {
    let scored = candidates
        .iter()
        .map(|(a, x)| ensemble_score(models, x, dist).map(|s| (a.clone(), s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedList::from_scores(scored))
}

macro_rules! json_io {
    ($ty:ident) => {
        impl<T: Scalar + Serialize + for<'de> Deserialize<'de>> $ty<T> {
            pub fn to_json(&self) -> String {
                serde_json::to_string_pretty(self).expect("model serializes")
            }

            pub fn from_json(raw: &str) -> Result<Self> {
                let m: $ty<T> = serde_json::from_str(raw)?;
                if m.version != RANK_MODEL_VERSION {
                    return Err(Error::Version {
                        expected: RANK_MODEL_VERSION,
                        found: m.version,
                    });
                }
                Ok(m)
            }

            pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
                let path = path.as_ref();
                std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
            }

            pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
                let path = path.as_ref();
                let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Self::from_json(&raw)
            }
        }
    };
}

json_io!(ModelSet);
json_io!(SingleModel);
