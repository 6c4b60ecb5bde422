use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::scalar::{mean, Scalar};

/// Strength of the seasonal component from a classical additive
/// decomposition: `max(0, 1 - Var(R) / Var(S + R))`.
pub fn seasonality<T: Scalar>(y: &[T], period: usize) -> Result<T> {
    if period < 2 {
        return Err(Error::param("seasonal period must be at least 2"));
    }
    if y.len() < 2 * period {
        return Err(Error::InsufficientData(format!(
            "seasonality needs {} points, got {}",
            2 * period,
            y.len()
        )));
    }
    let trend = centered_moving_average(y, period);
    let mut sums = vec![T::zero(); period];
    let mut counts = vec![0usize; period];
    for (t, tr) in trend.iter().enumerate() {
        if let Some(tr) = tr {
            sums[t % period] += y[t] - *tr;
            counts[t % period] += 1;
        }
    }
    let mut seasonal: Vec<T> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c == 0 { T::zero() } else { s / T::from_count(c) })
        .collect();
    let centre = mean(&seasonal);
    seasonal.iter_mut().for_each(|s| *s -= centre);

    let mut rem = Vec::new();
    let mut sr = Vec::new();
    for (t, tr) in trend.iter().enumerate() {
        if let Some(tr) = tr {
            let s = seasonal[t % period];
            let r = y[t] - *tr - s;
            rem.push(r);
            sr.push(s + r);
        }
    }
    let var_sr = crate::scalar::variance(&sr);
    if var_sr <= T::epsilon() * T::epsilon() {
        return Ok(T::zero());
    }
    let f = T::one() - crate::scalar::variance(&rem) / var_sr;
    Ok(f.max(T::zero()).min(T::one()))
}

// m-point centred moving average; 2xm for even m.
fn centered_moving_average<T: Scalar>(y: &[T], m: usize) -> Vec<Option<T>> {
    let n = y.len();
    let half = m / 2;
    let mut out = vec![None; n];
    for t in half..n.saturating_sub(half) {
        let v = if m % 2 == 1 {
            y[t - half..=t + half].iter().copied().sum::<T>() / T::from_count(m)
        } else {
            let inner: T = y[t + 1 - half..t + half].iter().copied().sum();
            let ends = (y[t - half] + y[t + half]) / T::lit(2.0);
            (inner + ends) / T::from_count(m)
        };
        out[t] = Some(v);
    }
    out
}

/// Lag-1 autocorrelation around the full-series mean.
pub fn autocorr_lag1<T: Scalar>(y: &[T]) -> Result<T> {
    if y.len() < 3 {
        return Err(Error::InsufficientData("autocorrelation needs at least 3 points".into()));
    }
    let m = mean(y);
    let den: T = y.iter().map(|&x| (x - m) * (x - m)).sum();
    if den <= T::zero() {
        return Err(Error::ConstantSeries);
    }
    let num: T = y.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    Ok((num / den).max(-T::one()).min(T::one()))
}

/// Goodman and Kruskal's gamma between two rankings. Items missing from a
/// list share the phantom rank `len + 1` of that list; tied pairs are
/// excluded from both counts.
pub fn rank_gamma<I: Eq + Hash + Clone>(current: &[I], previous: &[I]) -> f64 {
    let ra = ranks(current);
    let rb = ranks(previous);
    let mut items: Vec<&I> = Vec::new();
    for x in current.iter().chain(previous) {
        if !items.contains(&x) {
            items.push(x);
        }
    }
    let pa = current.len() + 1;
    let pb = previous.len() + 1;
    let rank_a: Vec<usize> = items.iter().map(|x| *ra.get(*x).unwrap_or(&pa)).collect();
    let rank_b: Vec<usize> = items.iter().map(|x| *rb.get(*x).unwrap_or(&pb)).collect();
    let (mut nc, mut nd) = (0u64, 0u64);
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            let da = rank_a[i] as i64 - rank_a[j] as i64;
            let db = rank_b[i] as i64 - rank_b[j] as i64;
            match (da * db).signum() {
                1 => nc += 1,
                -1 => nd += 1,
                _ => {}
            }
        }
    }
    if nc + nd == 0 {
        0.0
    } else {
        (nc as f64 - nd as f64) / (nc + nd) as f64
    }
}

fn ranks<I: Eq + Hash + Clone>(list: &[I]) -> HashMap<I, usize> {
    let mut out = HashMap::new();
    for (i, x) in list.iter().enumerate() {
        out.entry(x.clone()).or_insert(i + 1);
    }
    out
}
