//! Z-score standardization with zero-variance columns dropped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<T> {
    dim: usize,
    mean: Vec<T>,
    std: Vec<T>,
    /// Input columns that survive, in order.
    keep: Vec<usize>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(rows: &[Vec<T>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::InsufficientData("no rows to standardize".into()))?;
        let dim = first.len();
        check_rows(rows, dim)?;
        let n = T::from_count(rows.len());
        let mut mean = vec![T::zero(); dim];
        for r in rows {
            for (m, &v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); dim];
        for r in rows {
            for j in 0..dim {
                let d = r[j] - mean[j];
                var[j] += d * d;
            }
        }
        let std: Vec<T> = var.into_iter().map(|v| (v / n).sqrt()).collect();
        let keep: Vec<usize> = (0..dim)
            .filter(|&j| std[j] > T::lit(1e-12) * mean[j].abs().max(T::one()))
            .collect();
        if keep.len() < dim {
            log::info!("standardizer dropped {} constant column(s)", dim - keep.len());
        }
        Ok(Standardizer { dim, mean, std, keep })
    }

    /// Identity transform over `dim` columns.
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            dim,
            mean: vec![T::zero(); dim],
            std: vec![T::one(); dim],
            keep: (0..dim).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub fn output_dim(&self) -> usize {
        self.keep.len()
    }

    pub fn kept(&self) -> &[usize] {
        &self.keep
    }

    pub fn dropped(&self) -> Vec<usize> {
        (0..self.dim).filter(|j| !self.keep.contains(j)).collect()
    }

    pub fn transform(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self.keep.iter().map(|&j| (x[j] - self.mean[j]) / self.std[j]).collect())
    }

    /// Kept columns divided by their spread, without centering. Linear in `x`.
    pub fn scale(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self.keep.iter().map(|&j| x[j] / self.std[j]).collect())
    }

    pub fn transform_all(&self, rows: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

/// Rejects ragged or non-finite input, naming the first bad row.
pub(crate) fn check_rows<T: Scalar>(rows: &[Vec<T>], dim: usize) -> Result<()> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i,
                context: "feature row".into(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_constant_columns() {
        let rows = vec![vec![1.0, 5.0, 2.0], vec![3.0, 5.0, 4.0]];
        let s: Standardizer<f64> = Standardizer::fit(&rows).unwrap();
        assert_eq!(s.kept(), &[0, 2]);
        assert_eq!(s.dropped(), vec![1]);
        assert_eq!(s.transform(&[1.0, 5.0, 4.0]).unwrap(), vec![-1.0, 1.0]);
        assert!(s.transform(&[1.0]).is_err());
    }

    #[test]
    fn nan_row_is_named() {
        let rows = vec![vec![1.0], vec![f64::NAN]];
        match Standardizer::fit(&rows) {
            Err(Error::NonFinite { row, .. }) => assert_eq!(row, 1),
            other => panic!("{other:?}"),
        }
    }
}
