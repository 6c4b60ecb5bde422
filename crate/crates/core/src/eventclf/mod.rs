//! Event type and time identification: a cascaded supervised classifier and
//! the ranking-side soft clustering over (type, time) cells.

mod hinge;
mod label;
mod metrics;
mod mixture;
mod softmax;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use hinge::{platt, train_hinge, HingeClassifier, HingeParams};
pub use label::{EventLabel, EventTime, EventType, NUM_CELLS};
pub use metrics::{accuracy, weighted_f1};
pub use mixture::{distribution_from_sq_dists, fit_mixture, soft_assign, MixtureModel, MixtureParams, TimeTypeDistribution};
pub use softmax::{train_softmax, SoftmaxClassifier, SoftmaxParams};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Stage 1: event type, class 1 = anticipated.
pub fn train_stage1<T: Scalar>(rows: &[Vec<T>], types: &[EventType], params: &HingeParams) -> Result<HingeClassifier<T>> {
    let y: Vec<usize> = types.iter().map(|t| t.index()).collect();
    train_hinge(rows, &y, params)
}

/// Signal vector followed by the calibrated stage-1 type probabilities.
pub fn stage2_features<T: Scalar>(stage1: &HingeClassifier<T>, x: &[T]) -> Result<Vec<T>> {
    let p = stage1.predict_proba(x)?;
    let mut v = x.to_vec();
    v.extend_from_slice(&p);
    Ok(v)
}

/// Stage 2: event time from signals plus stage-1 probabilities.
pub fn train_stage2<T: Scalar>(
    rows: &[Vec<T>],
    stage1: &HingeClassifier<T>,
    times: &[EventTime],
    params: &SoftmaxParams,
) -> Result<SoftmaxClassifier<T>> {
    let aug: Vec<Vec<T>> = rows.iter().map(|r| stage2_features(stage1, r)).collect::<Result<_>>()?;
    let y: Vec<usize> = times.iter().map(|t| t.index()).collect();
    train_softmax(&aug, &y, EventTime::ALL.len(), params)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeParams {
    pub hinge: HingeParams,
    pub softmax: SoftmaxParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadedClassifier<T> {
    pub stage1: HingeClassifier<T>,
    pub stage2: SoftmaxClassifier<T>,
}

impl<T: Scalar> CascadedClassifier<T> {
    pub fn train(rows: &[Vec<T>], labels: &[EventLabel], params: &CascadeParams) -> Result<Self> {
        let types: Vec<EventType> = labels.iter().map(|l| l.kind).collect();
        let times: Vec<EventTime> = labels.iter().map(|l| l.time).collect();
        let stage1 = train_stage1(rows, &types, &params.hinge)?;
        let stage2 = train_stage2(rows, &stage1, &times, &params.softmax)?;
        Ok(CascadedClassifier { stage1, stage2 })
    }

    pub fn predict(&self, x: &[T]) -> Result<EventLabel> {
        let kind = EventType::from_index(self.stage1.predict(x)?);
        let time = EventTime::from_index(self.stage2.predict(&stage2_features(&self.stage1, x)?)?);
        Ok(EventLabel { kind, time })
    }

    /// Relative weight of each input column in both stages, max 1.
    pub fn importance(&self) -> Vec<T> {
        let dim = self.stage1.standardization.input_dim();
        let mut s1 = vec![T::zero(); dim];
        for (&j, &w) in self.stage1.standardization.kept().iter().zip(&self.stage1.weights) {
            s1[j] = w.abs();
        }
        let mut s2 = vec![T::zero(); dim];
        for (pos, &j) in self.stage2.standardization.kept().iter().enumerate() {
            if j < dim {
                s2[j] = self.stage2.weights.iter().map(|row| row[pos].abs()).sum();
            }
        }
        let norm = |v: &mut Vec<T>| {
            let m = v.iter().copied().fold(T::zero(), T::max);
            if m > T::zero() {
                v.iter_mut().for_each(|x| *x /= m);
            }
        };
        norm(&mut s1);
        norm(&mut s2);
        let mut out: Vec<T> = s1.iter().zip(&s2).map(|(&a, &b)| a + b).collect();
        norm(&mut out);
        out
    }
}

pub const EVENT_MODEL_VERSION: u32 = 1;

/// Persisted classifier bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventModel<T> {
    pub version: u32,
    pub cascade: CascadedClassifier<T>,
    pub mixture: MixtureModel<T>,
}

impl<T: Scalar + Serialize + for<'de> Deserialize<'de>> EventModel<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let m: EventModel<T> = serde_json::from_str(raw)?;
        if m.version != EVENT_MODEL_VERSION {
            return Err(Error::Version {
                expected: EVENT_MODEL_VERSION,
                found: m.version,
            });
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&raw)
    }
}
