use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::label::NUM_CELLS;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::standardize::{check_rows, Standardizer};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureParams {
    pub max_iter: usize,
    pub tol: f64,
    pub ridge: f64,
    pub seed: u64,
}

impl Default for MixtureParams {
    fn default() -> Self {
        MixtureParams {
            max_iter: 100,
            tol: 1e-6,
            ridge: 1e-6,
            seed: 42,
        }
    }
}

/// Spherical Gaussian mixture with one centroid per (type, time) cell, in
/// standardized and importance-scaled feature space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel<T> {
    pub standardization: Standardizer<T>,
    /// Scale per raw input column.
    pub importance: Vec<T>,
    /// Indexed by cell.
    pub centroids: Vec<Vec<T>>,
}

/// P over the six (type, time) cells.
pub type TimeTypeDistribution<T> = [T; NUM_CELLS];

impl<T: Scalar> MixtureModel<T> {
    pub fn project(&self, x: &[T]) -> Result<Vec<T>> {
        let z = self.standardization.transform(x)?;
        Ok(z
            .iter()
            .zip(self.standardization.kept())
            .map(|(&v, &j)| v * self.importance[j])
            .collect())
    }
}

/// `raw_k = 1 - d2_k / max d2`, normalized; uniform when every raw is 0.
pub fn distribution_from_sq_dists<T: Scalar>(d2: &[T]) -> Vec<T> {
    let k = d2.len();
    let max = d2.iter().copied().fold(T::zero(), T::max);
    let uniform = || vec![T::one() / T::from_count(k); k];
    if max <= T::zero() {
        return uniform();
    }
    let raw: Vec<T> = d2.iter().map(|&d| (T::one() - d / max).max(T::zero())).collect();
    let s: T = raw.iter().copied().sum();
    if s <= T::zero() {
        return uniform();
    }
    raw.into_iter().map(|r| r / s).collect()
}

pub fn soft_assign<T: Scalar>(model: &MixtureModel<T>, x: &[T]) -> Result<TimeTypeDistribution<T>> {
    let z = model.project(x)?;
    let d2: Vec<T> = model.centroids.iter().map(|c| sq_dist(c, &z)).collect();
    let dist = distribution_from_sq_dists(&d2);
    let mut out = [T::zero(); NUM_CELLS];
    out.copy_from_slice(&dist);
    Ok(out)
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Fits the k=6 mixture by EM from a seeded k-means++ start and maps each
/// component to a distinct cell, largest label overlap first.
pub fn fit_mixture<T: Scalar>(
    rows: &[Vec<T>],
    cells: &[usize],
    importance: &[T],
    params: &MixtureParams,
) -> Result<MixtureModel<T>> {
    if rows.len() < NUM_CELLS {
        return Err(Error::InsufficientData(format!(
            "mixture needs at least {NUM_CELLS} vectors, got {}",
            rows.len()
        )));
    }
    if rows.len() != cells.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            found: cells.len(),
        });
    }
    if cells.iter().any(|&c| c >= NUM_CELLS) {
        return Err(Error::param("cell index out of range"));
    }
    let dim = rows[0].len();
    check_rows(rows, dim)?;
    if importance.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: importance.len(),
        });
    }
    if importance.iter().any(|w| !w.is_finite() || *w < T::zero()) {
        return Err(Error::param("importance weights must be finite and non-negative"));
    }
    let standardization = Standardizer::fit(rows)?;
    let mut model = MixtureModel {
        standardization,
        importance: importance.to_vec(),
        centroids: vec![],
    };
    if model.standardization.kept().iter().all(|&j| importance[j] == T::zero()) {
        return Err(Error::Degenerate("degenerate scaling: all importance weights are zero".into()));
    }
    let z: Vec<Vec<T>> = rows.iter().map(|r| model.project(r)).collect::<Result<_>>()?;
    let (means, resp) = em(&z, params);

    let mut counts = vec![[0usize; NUM_CELLS]; NUM_CELLS];
    let mut freq = [0usize; NUM_CELLS];
    for (r, &c) in resp.iter().zip(cells) {
        counts[super::softmax::argmax(r)][c] += 1;
        freq[c] += 1;
    }
    let mut comp_of_cell = [usize::MAX; NUM_CELLS];
    let mut comp_used = [false; NUM_CELLS];
    for _ in 0..NUM_CELLS {
        let mut best: Option<(usize, usize)> = None;
        for comp in (0..NUM_CELLS).filter(|&c| !comp_used[c]) {
            for cell in (0..NUM_CELLS).filter(|&c| comp_of_cell[c] == usize::MAX) {
                let better = match best {
                    None => true,
                    Some((bc, bl)) => (counts[comp][cell], freq[cell]) > (counts[bc][bl], freq[bl]),
                };
                if better {
                    best = Some((comp, cell));
                }
            }
        }
        let (comp, cell) = best.expect("an unmatched pair remains");
        comp_used[comp] = true;
        comp_of_cell[cell] = comp;
    }
    model.centroids = comp_of_cell.iter().map(|&c| means[c].clone()).collect();
    Ok(model)
}

fn kmeans_pp<T: Scalar>(z: &[Vec<T>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let mut centres = vec![z[rng.gen_range(0..z.len())].clone()];
    while centres.len() < k {
        let d2: Vec<f64> = z
            .iter()
            .map(|x| {
                centres
                    .iter()
                    .map(|c| sq_dist(c, x))
                    .fold(T::infinity(), T::min)
                    .as_f64()
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total <= 0.0 {
            rng.gen_range(0..z.len())
        } else {
            let mut u = rng.gen::<f64>() * total;
            let mut idx = z.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    idx = i;
                    break;
                }
                u -= d;
            }
            idx
        };
        centres.push(z[pick].clone());
    }
    centres
}

// Returns component means and per-row responsibilities.
fn em<T: Scalar>(z: &[Vec<T>], params: &MixtureParams) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let n = z.len();
    let d = z[0].len();
    let k = NUM_CELLS;
    let df = T::from_count(d.max(1));
    let ridge = T::lit(params.ridge);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut means = kmeans_pp(z, k, &mut rng);
    let spread = z
        .iter()
        .map(|x| means.iter().map(|c| sq_dist(c, x)).fold(T::infinity(), T::min))
        .sum::<T>()
        / (T::from_count(n) * df);
    let mut var = vec![spread + ridge; k];
    let mut mix = vec![T::one() / T::from_count(k); k];
    let mut resp = vec![vec![T::zero(); k]; n];
    let mut prev_ll = T::neg_infinity();
    let half = T::lit(0.5);
    let log_2pi = (T::TAU()).ln();

    for _ in 0..params.max_iter {
        let mut ll = T::zero();
        for (x, r) in z.iter().zip(resp.iter_mut()) {
            for c in 0..k {
                r[c] = mix[c].max(T::min_positive_value()).ln()
                    - half * df * (log_2pi + var[c].ln())
                    - sq_dist(&means[c], x) / (T::lit(2.0) * var[c]);
            }
            let m = r.iter().copied().fold(T::neg_infinity(), T::max);
            let s: T = r.iter().map(|&v| (v - m).exp()).sum();
            let lse = m + s.ln();
            ll += lse;
            r.iter_mut().for_each(|v| *v = (*v - lse).exp());
        }
        for c in 0..k {
            let nk: T = resp.iter().map(|r| r[c]).sum();
            mix[c] = nk / T::from_count(n);
            if nk <= T::lit(1e-10) {
                continue;
            }
            let mut mu = vec![T::zero(); d];
            for (x, r) in z.iter().zip(&resp) {
                for j in 0..d {
                    mu[j] += r[c] * x[j];
                }
            }
            mu.iter_mut().for_each(|v| *v /= nk);
            let ss: T = z.iter().zip(&resp).map(|(x, r)| r[c] * sq_dist(&mu, x)).sum();
            var[c] = ss / (df * nk) + ridge;
            means[c] = mu;
        }
        if (ll - prev_ll).abs() < T::lit(params.tol) {
            break;
        }
        prev_ll = ll;
    }
    (means, resp)
}
