//! Scalar abstraction shared by the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Arithmetic mean; zero for an empty slice.
pub fn mean<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    xs.iter().copied().sum::<T>() / T::from_count(xs.len())
}

/// Population variance; zero for fewer than one element.
pub fn variance<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::from_count(xs.len())
}

/// Pearson correlation, `None` when either side has zero variance.
pub fn pearson<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    debug_assert_eq!(a.len(), b.len());
    if a.len() < 2 {
        return None;
    }
    let ma = mean(a);
    let mb = mean(b);
    let mut sab = T::zero();
    let mut saa = T::zero();
    let mut sbb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let tiny = T::epsilon() * T::epsilon();
    if saa <= tiny || sbb <= tiny {
        return None;
    }
    let r = sab / (saa.sqrt() * sbb.sqrt());
    Some(r.max(-T::one()).min(T::one()))
}

/// Solves the dense linear system `a x = b` in place by Gaussian elimination
/// with partial pivoting. `a` is row-major `n x n`. Returns `None` if singular.
pub fn solve_dense<T: Scalar>(mut a: Vec<T>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best <= T::min_positive_value() || !best.is_finite() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[row * n + k] -= f * v;
            }
            let bv = b[col];
            b[row] -= f * bv;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * x[k];
        }
        x[row] = s / a[row * n + row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = vec![2.0, 1.0, 1.0, 3.0];
        let x = solve_dense(a, vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12);
        assert!((x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn singular_system_is_rejected() {
        assert!(solve_dense(vec![1.0f64, 2.0, 2.0, 4.0], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn pearson_handles_constant() {
        assert!(pearson(&[1.0f32, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_none());
        let r = pearson(&[1.0f64, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }
}
