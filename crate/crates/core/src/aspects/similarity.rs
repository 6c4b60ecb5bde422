use serde::{Deserialize, Serialize};
use rayon::prelude::*;

use super::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::text::term_set;

/// Half stemmed-term Jaccard, half normalized Levenshtein similarity.
/// Queries made only of stop-words keep their stemmed tokens as terms.
pub fn lexical_sim<T: Scalar>(a: &str, b: &str) -> T {
    let ta = term_set(a);
    let tb = term_set(b);
    let union = ta.union(&tb).count();
    let jac = if union == 0 {
        if a == b {
            1.0
        } else {
            0.0
        }
    } else {
        ta.intersection(&tb).count() as f64 / union as f64
    };
    let lev = strsim::normalized_levenshtein(a, b);
    T::lit(0.5 * jac + 0.5 * lev)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SemanticScore<T> {
    pub value: T,
    /// Set when either side had no in-vocabulary token.
    pub oov: bool,
}

/// Cosine of mean word vectors mapped from [-1,1] onto [0,1].
pub fn semantic_sim<T: Scalar>(a: &str, b: &str, emb: &EmbeddingTable<T>) -> SemanticScore<T> {
    let neutral = SemanticScore {
        value: T::lit(0.5),
        oov: true,
    };
    let (Some(va), Some(vb)) = (emb.mean_vector(a), emb.mean_vector(b)) else {
        return neutral;
    };
    let value = rescaled_cosine(&va, &vb).unwrap_or(T::lit(0.5));
    SemanticScore { value, oov: false }
}

fn rescaled_cosine<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    let dot: T = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na: T = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let nb: T = b.iter().map(|&x| x * x).sum::<T>().sqrt();
    if na <= T::zero() || nb <= T::zero() {
        return None;
    }
    let cos = (dot / (na * nb)).max(-T::one()).min(T::one());
    Some((cos + T::one()) / T::lit(2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimWeights {
    pub lexical: f64,
    pub semantic: f64,
}

impl Default for SimWeights {
    fn default() -> Self {
        SimWeights {
            lexical: 0.5,
            semantic: 0.5,
        }
    }
}

impl SimWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lexical >= 0.0 && self.semantic >= 0.0 && (self.lexical + self.semantic - 1.0).abs() < 1e-9;
        if !ok {
            return Err(Error::param("similarity weights must be non-negative and sum to 1"));
        }
        Ok(())
    }
}

/// Symmetric candidate similarity matrix. The diagonal holds the AP
/// preference; off-diagonal entries lie in [0,1].
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix<T> {
    n: usize,
    values: Vec<T>,
    weights: SimWeights,
    preference: T,
    oov_pairs: usize,
}

impl<T: Scalar> SimilarityMatrix<T> {
    /// Builds the blended matrix over `texts`. Without embeddings every
    /// pair gets the neutral semantic value.
    pub fn build(texts: &[String], emb: Option<&EmbeddingTable<T>>, weights: SimWeights) -> Result<Self> {
        weights.validate()?;
        let n = texts.len();
        let (wl, ws) = (T::lit(weights.lexical), T::lit(weights.semantic));
        let rows: Vec<Vec<(T, bool)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (i + 1..n)
                    .map(|j| {
                        let lex = lexical_sim::<T>(&texts[i], &texts[j]);
                        let sem = match emb {
                            Some(e) => semantic_sim(&texts[i], &texts[j], e),
                            None => SemanticScore {
                                value: T::lit(0.5),
                                oov: true,
                            },
                        };
                        (wl * lex + ws * sem.value, sem.oov)
                    })
                    .collect()
            })
            .collect();
        let mut values = vec![T::one(); n * n];
        let mut oov_pairs = 0;
        for (i, row) in rows.into_iter().enumerate() {
            for (off, (v, oov)) in row.into_iter().enumerate() {
                let j = i + 1 + off;
                values[i * n + j] = v;
                values[j * n + i] = v;
                oov_pairs += oov as usize;
            }
        }
        let mut m = SimilarityMatrix {
            n,
            values,
            weights,
            preference: T::one(),
            oov_pairs,
        };
        m.set_preference(m.median_off_diagonal());
        Ok(m)
    }

    /// Wraps a precomputed row-major matrix; the diagonal is replaced by the
    /// median off-diagonal similarity.
    pub fn from_values(n: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: values.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        row: i,
                        context: "similarity".into(),
                    });
                }
                if (v - values[j * n + i]).abs() > T::lit(1e-12) {
                    return Err(Error::param("similarity matrix must be symmetric"));
                }
            }
        }
        let mut m = SimilarityMatrix {
            n,
            values,
            weights: SimWeights::default(),
            preference: T::one(),
            oov_pairs: 0,
        };
        m.set_preference(m.median_off_diagonal());
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn weights(&self) -> SimWeights {
        self.weights
    }

    pub fn preference(&self) -> T {
        self.preference
    }

    /// Pairs whose semantic side fell back to the neutral value.
    pub fn oov_pairs(&self) -> usize {
        self.oov_pairs
    }

    pub fn set_preference(&mut self, p: T) {
        self.preference = p;
        for i in 0..self.n {
            self.values[i * self.n + i] = p;
        }
    }

    pub fn median_off_diagonal(&self) -> T {
        let mut off: Vec<T> = Vec::with_capacity(self.n * self.n.saturating_sub(1));
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    off.push(self.values[i * self.n + j]);
                }
            }
        }
        if off.is_empty() {
            return T::one();
        }
        off.sort_by(|a, b| a.partial_cmp(b).expect("finite similarities"));
        let m = off.len();
        if m % 2 == 1 {
            off[m / 2]
        } else {
            (off[m / 2 - 1] + off[m / 2]) / T::lit(2.0)
        }
    }
}
