use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::standardize::{check_rows, Standardizer};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HingeParams {
    pub lambda: f64,
    pub epochs: usize,
    /// Share of rows held out for the calibration sigmoid.
    pub holdout: f64,
    pub seed: u64,
}

impl Default for HingeParams {
    fn default() -> Self {
        HingeParams {
            lambda: 1e-3,
            epochs: 200,
            holdout: 0.2,
            seed: 42,
        }
    }
}

/// Binary max-margin classifier with a Platt sigmoid on its decision value.
/// Class 1 is the positive side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HingeClassifier<T> {
    pub standardization: Standardizer<T>,
    pub weights: Vec<T>,
    pub bias: T,
    /// `P(class 1) = 1 / (1 + exp(-(a * f + b)))`.
    pub calibration: (T, T),
}

impl<T: Scalar> HingeClassifier<T> {
    pub fn decision(&self, x: &[T]) -> Result<T> {
        let z = self.standardization.transform(x)?;
        Ok(dot(&self.weights, &z) + self.bias)
    }

    /// Calibrated `[P(class 0), P(class 1)]`.
    pub fn predict_proba(&self, x: &[T]) -> Result<[T; 2]> {
        let f = self.decision(x)?;
        let p1 = sigmoid(self.calibration.0 * f + self.calibration.1);
        Ok([T::one() - p1, p1])
    }

    pub fn predict(&self, x: &[T]) -> Result<usize> {
        Ok(usize::from(self.decision(x)? > T::zero()))
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Pegasos subgradient descent on the L2-regularized hinge loss, step
/// `1/(lambda t)`, followed by Platt calibration on a held-out slice.
pub fn train_hinge<T: Scalar>(rows: &[Vec<T>], labels: &[usize], params: &HingeParams) -> Result<HingeClassifier<T>> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            found: labels.len(),
        });
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("no training rows".into()));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::param("binary labels must be 0 or 1"));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::InsufficientData("both classes must be present".into()));
    }
    if !(params.lambda > 0.0) || params.epochs == 0 || !(0.0..1.0).contains(&params.holdout) {
        return Err(Error::param("hinge training needs lambda > 0, epochs > 0, holdout in [0,1)"));
    }
    check_rows(rows, rows[0].len())?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (train, calib) = stratified_split(labels, params.holdout, &mut rng);

    let train_rows: Vec<Vec<T>> = train.iter().map(|&i| rows[i].clone()).collect();
    let standardization = Standardizer::fit(&train_rows)?;
    let z: Vec<Vec<T>> = standardization.transform_all(&train_rows)?;
    let y: Vec<T> = train.iter().map(|&i| if labels[i] == 1 { T::one() } else { -T::one() }).collect();

    let d = standardization.output_dim();
    let lambda = T::lit(params.lambda);
    let radius = T::one() / lambda.sqrt();
    // bias rides along as a constant feature
    let mut w = vec![T::zero(); d + 1];
    let mut order: Vec<usize> = (0..z.len()).collect();
    let mut t = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = T::one() / (lambda * T::from_count(t));
            let margin = y[i] * (dot(&w[..d], &z[i]) + w[d]);
            let shrink = T::one() - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < T::one() {
                for j in 0..d {
                    w[j] += eta * y[i] * z[i][j];
                }
                w[d] += eta * y[i];
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
    let bias = w[d];
    w.truncate(d);
    let mut model = HingeClassifier {
        standardization,
        weights: w,
        bias,
        calibration: (T::one(), T::zero()),
    };

    let calib_ok = {
        let pos = calib.iter().filter(|&&i| labels[i] == 1).count();
        pos > 0 && pos < calib.len()
    };
    let slice = if calib_ok {
        calib
    } else {
        log::warn!("calibration slice lacks a class; calibrating on training rows");
        train
    };
    let f: Vec<T> = slice.iter().map(|&i| model.decision(&rows[i])).collect::<Result<_>>()?;
    let yl: Vec<bool> = slice.iter().map(|&i| labels[i] == 1).collect();
    model.calibration = platt(&f, &yl);
    Ok(model)
}

/// Seeded split keeping class proportions; returns (train, held out).
fn stratified_split(labels: &[usize], share: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut held = Vec::new();
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(rng);
        let k = ((idx.len() as f64) * share).round() as usize;
        // never starve training of a class
        let k = k.min(idx.len().saturating_sub(1));
        held.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    held.sort_unstable();
    (train, held)
}

/// Platt's sigmoid fit with smoothed targets, by damped Newton iterations.
pub fn platt<T: Scalar>(f: &[T], y: &[bool]) -> (T, T) {
    let np = y.iter().filter(|&&b| b).count() as f64;
    let nn = y.len() as f64 - np;
    let hi = T::lit((np + 1.0) / (np + 2.0));
    let lo = T::lit(1.0 / (nn + 2.0));
    let target: Vec<T> = y.iter().map(|&b| if b { hi } else { lo }).collect();
    let loss = |a: T, b: T| -> T {
        let mut l = T::zero();
        for (&fi, &ti) in f.iter().zip(&target) {
            let z = a * fi + b;
            // log(1 + e^z) - t z, computed stably
            let sp = if z > T::zero() { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            l += sp - ti * z;
        }
        l
    };
    let (mut a, mut b) = (T::one(), T::lit(((np + 1.0) / (nn + 1.0)).ln()));
    let mut cur = loss(a, b);
    for _ in 0..100 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for (&fi, &ti) in f.iter().zip(&target) {
            let p = sigmoid(a * fi + b);
            let d = p - ti;
            let w = p * (T::one() - p);
            ga += d * fi;
            gb += d;
            haa += w * fi * fi;
            hab += w * fi;
            hbb += w;
        }
        let ridge = T::lit(1e-12);
        haa += ridge;
        hbb += ridge;
        let det = haa * hbb - hab * hab;
        if det.abs() <= T::min_positive_value() {
            break;
        }
        let da = -(hbb * ga - hab * gb) / det;
        let db = -(haa * gb - hab * ga) / det;
        let mut step = T::one();
        let mut moved = false;
        while step >= T::lit(1e-10) {
            let (na, nb) = (a + step * da, b + step * db);
            let nl = loss(na, nb);
            if nl < cur + T::lit(1e-4) * step * (ga * da + gb * db) {
                a = na;
                b = nb;
                moved = (cur - nl).abs() > T::lit(1e-12) * cur.abs().max(T::one());
                cur = nl;
                break;
            }
            step /= T::lit(2.0);
        }
        if !moved {
            break;
        }
    }
    (a, b)
}
