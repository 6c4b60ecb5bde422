use serde::{Deserialize, Serialize};
use super::similarity::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApParams {
    pub damping: f64,
    pub max_iter: usize,
    /// Iterations with an unchanged, non-empty exemplar set before stopping.
    pub convergence_iter: usize,
}

impl Default for ApParams {
    fn default() -> Self {
        ApParams {
            damping: 0.7,
            max_iter: 200,
            convergence_iter: 15,
        }
    }
}

impl ApParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..1.0).contains(&self.damping) {
            return Err(Error::param(format!("damping must lie in [0.5,1), got {}", self.damping)));
        }
        if self.max_iter == 0 || self.convergence_iter == 0 {
            return Err(Error::param("affinity propagation iteration limits must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    /// Cluster id per point, numbered by exemplar index order.
    pub labels: Vec<usize>,
    /// Exemplar point of each cluster.
    pub exemplars: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

impl Clustering {
    pub fn num_clusters(&self) -> usize {
        self.exemplars.len()
    }

    fn singletons(n: usize, iterations: usize, converged: bool) -> Self {
        Clustering {
            labels: (0..n).collect(),
            exemplars: (0..n).collect(),
            iterations,
            converged,
        }
    }
}

pub fn affinity_propagation<T: Scalar>(sim: &SimilarityMatrix<T>, params: &ApParams) -> Result<Clustering> {
    params.validate()?;
    let n = sim.len();
    if n == 0 {
        return Ok(Clustering {
            labels: vec![],
            exemplars: vec![],
            iterations: 0,
            converged: true,
        });
    }
    if n == 1 {
        return Ok(Clustering::singletons(1, 0, true));
    }

    // Exact ties leave the messages symmetric and the exemplar choice
    // undecided; a bias far below any real similarity gap favours
    // earlier points as exemplars.
    let unit = T::epsilon() * T::lit(64.0);
    let s: Vec<T> = sim
        .values()
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            let k = idx % n;
            v + unit * v.abs().max(T::one()) * T::from_count(n - k) / T::from_count(n)
        })
        .collect();

    let lam = T::lit(params.damping);
    let keep = T::one() - lam;
    let mut r = vec![T::zero(); n * n];
    let mut a = vec![T::zero(); n * n];
    let mut exemplars: Vec<usize> = Vec::new();
    let mut stable = 0usize;
    let mut iterations = 0;
    let mut converged = false;

    for it in 1..=params.max_iter {
        iterations = it;
        for i in 0..n {
            let row = i * n;
            let (mut best, mut second, mut arg) = (T::neg_infinity(), T::neg_infinity(), 0);
            for k in 0..n {
                let v = a[row + k] + s[row + k];
                if v > best {
                    second = best;
                    best = v;
                    arg = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let other = if k == arg { second } else { best };
                let fresh = s[row + k] - other;
                r[row + k] = lam * r[row + k] + keep * fresh;
            }
        }
        for k in 0..n {
            let mut pos_sum = T::zero();
            for i in 0..n {
                if i != k {
                    pos_sum += r[i * n + k].max(T::zero());
                }
            }
            for i in 0..n {
                let fresh = if i == k {
                    pos_sum
                } else {
                    (r[k * n + k] + pos_sum - r[i * n + k].max(T::zero())).min(T::zero())
                };
                a[i * n + k] = lam * a[i * n + k] + keep * fresh;
            }
        }

        let now: Vec<usize> = (0..n).filter(|&k| r[k * n + k] + a[k * n + k] > T::zero()).collect();
        if now == exemplars {
            stable += 1;
        } else {
            stable = 1;
            exemplars = now;
        }
        if stable >= params.convergence_iter && !exemplars.is_empty() {
            converged = true;
            break;
        }
    }

    if exemplars.is_empty() {
        log::warn!("affinity propagation found no exemplar; every point becomes its own cluster");
        return Ok(Clustering::singletons(n, iterations, converged));
    }
    if !converged {
        log::warn!("affinity propagation stopped after {iterations} iterations without a stable exemplar set");
    }

    let labels = (0..n)
        .map(|i| {
            if let Some(c) = exemplars.iter().position(|&e| e == i) {
                return c;
            }
            let mut best = 0;
            for (c, &e) in exemplars.iter().enumerate() {
                if sim.get(i, e) > sim.get(i, exemplars[best]) {
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(Clustering {
        labels,
        exemplars,
        iterations,
        converged,
    })
}
