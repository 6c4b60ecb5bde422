use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::standardize::{check_rows, Standardizer};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoftmaxParams {
    pub l2: f64,
    pub epochs: usize,
}

impl Default for SoftmaxParams {
    fn default() -> Self {
        SoftmaxParams { l2: 1e-3, epochs: 500 }
    }
}

/// Multinomial logistic regression over standardized features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxClassifier<T> {
    pub standardization: Standardizer<T>,
    /// One weight row per class.
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<T>,
}

impl<T: Scalar> SoftmaxClassifier<T> {
    pub fn num_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn predict_proba(&self, x: &[T]) -> Result<Vec<T>> {
        let z = self.standardization.transform(x)?;
        Ok(softmax_row(&self.weights, &self.bias, &z))
    }

    pub fn predict(&self, x: &[T]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }
}

pub(crate) fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn softmax_row<T: Scalar>(w: &[Vec<T>], b: &[T], z: &[T]) -> Vec<T> {
    let logits: Vec<T> = w
        .iter()
        .zip(b)
        .map(|(row, &bias)| row.iter().zip(z).map(|(&a, &x)| a * x).sum::<T>() + bias)
        .collect();
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&l| (l - m).exp()).collect();
    let s: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / s).collect()
}

// Largest eigenvalue of (1/n) sum [z, 1][z, 1]^T by power iteration, padded
// by 5% since the Rayleigh quotient approaches it from below.
fn gram_top_eigenvalue<T: Scalar>(z: &[Vec<T>]) -> T {
    let d = z.first().map_or(0, Vec::len) + 1;
    let n = T::from_count(z.len());
    let mut g = vec![T::zero(); d * d];
    for row in z {
        let x: Vec<T> = row.iter().copied().chain(std::iter::once(T::one())).collect();
        for i in 0..d {
            for j in 0..d {
                g[i * d + j] += x[i] * x[j] / n;
            }
        }
    }
    let mut v: Vec<T> = (0..d).map(|i| T::one() + T::lit(i as f64 * 1e-3)).collect();
    let mut lambda = T::zero();
    for _ in 0..200 {
        let gv: Vec<T> = (0..d).map(|i| (0..d).map(|j| g[i * d + j] * v[j]).sum()).collect();
        let norm = gv.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm <= T::zero() {
            break;
        }
        lambda = norm / v.iter().map(|&x| x * x).sum::<T>().sqrt();
        v = gv.into_iter().map(|x| x / norm).collect();
    }
    (lambda * T::lit(1.05)).max(T::lit(1e-6))
}

/// Full-batch gradient descent on mean cross-entropy plus `l2/2 |W|^2`.
/// The step is the inverse of a curvature bound, so no tuning is needed.
pub fn train_softmax<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[usize],
    classes: usize,
    params: &SoftmaxParams,
) -> Result<SoftmaxClassifier<T>> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            found: labels.len(),
        });
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("no training rows".into()));
    }
    if classes < 2 {
        return Err(Error::param("need at least two classes"));
    }
    for c in 0..classes {
        if !labels.contains(&c) {
            return Err(Error::InsufficientData(format!("class {c} missing from training labels")));
        }
    }
    if labels.iter().any(|&l| l >= classes) {
        return Err(Error::param("label out of range"));
    }
    if params.epochs == 0 || params.l2 < 0.0 {
        return Err(Error::param("softmax training needs epochs > 0 and l2 >= 0"));
    }
    check_rows(rows, rows[0].len())?;
    let standardization = Standardizer::fit(rows)?;
    let z = standardization.transform_all(rows)?;
    let d = standardization.output_dim();
    let n = T::from_count(rows.len());
    let l2 = T::lit(params.l2);
    // the cross-entropy Hessian is below half the Gram matrix of [z, 1]
    let step = T::one() / (T::lit(0.5) * gram_top_eigenvalue(&z) + l2);

    let mut w = vec![vec![T::zero(); d]; classes];
    let mut b = vec![T::zero(); classes];
    for _ in 0..params.epochs {
        let mut gw = vec![vec![T::zero(); d]; classes];
        let mut gb = vec![T::zero(); classes];
        for (zi, &yi) in z.iter().zip(labels) {
            let p = softmax_row(&w, &b, zi);
            for c in 0..classes {
                let err = p[c] - if c == yi { T::one() } else { T::zero() };
                gb[c] += err;
                for j in 0..d {
                    gw[c][j] += err * zi[j];
                }
            }
        }
        for c in 0..classes {
            b[c] -= step * gb[c] / n;
            for j in 0..d {
                let cur = w[c][j];
                w[c][j] = cur - step * (gw[c][j] / n + l2 * cur);
            }
        }
    }
    Ok(SoftmaxClassifier {
        standardization,
        weights: w,
        bias: b,
    })
}
