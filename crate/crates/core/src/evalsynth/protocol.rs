use std::collections::BTreeSet;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::logstore::Day;

/// One rolling trial: train on earlier bins, test on one later bin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    /// 0-based index of the test bin.
    pub test_bin: usize,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Chronological bins of near-equal size. Entities sharing an event day
/// always fall in the same bin, so no bin straddles a day.
pub fn chronological_bins(entities: &[(String, Day)], n_bins: usize) -> Result<Vec<Vec<String>>> {
    if n_bins == 0 {
        return Err(Error::param("bin count must be positive"));
    }
    if entities.len() < n_bins {
        return Err(Error::InsufficientData(format!(
            "{} entities cannot fill {n_bins} bins",
            entities.len()
        )));
    }
    let mut sorted: Vec<&(String, Day)> = entities.iter().collect();
    sorted.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let n = sorted.len();
    let mut bins = Vec::with_capacity(n_bins);
    let mut start = 0;
    for b in 0..n_bins {
        let mut end = ((b + 1) * n / n_bins).max(start);
        if b + 1 == n_bins {
            end = n;
        }
        // extend over equal days
        while end > start && end < n && sorted[end].1 == sorted[end - 1].1 {
            end += 1;
        }
        bins.push(sorted[start..end].iter().map(|e| e.0.clone()).collect::<Vec<_>>());
        start = end;
    }
    Ok(bins)
}

/// Rolling evaluation: for each of the last `test_bins` bins, train on
/// every earlier bin. Empty test bins are skipped.
pub fn rolling_cv(entities: &[(String, Day)], n_bins: usize, test_bins: usize) -> Result<Vec<Fold>> {
    if test_bins == 0 || test_bins >= n_bins {
        return Err(Error::param("need 0 < test bins < bins"));
    }
    let bins = chronological_bins(entities, n_bins)?;
    let folds = (n_bins - test_bins..n_bins)
        .filter(|&b| !bins[b].is_empty())
        .map(|b| Fold {
            test_bin: b,
            train: bins[..b].concat(),
            test: bins[b].clone(),
        })
        .collect();
    Ok(folds)
}

/// Entities whose event falls in the last calendar month are the test set;
/// all earlier months train.
pub fn split_train_test_by_month(entities: &[(String, Day)]) -> Result<(Vec<String>, Vec<String>)> {
    let months: BTreeSet<(i32, u32)> = entities.iter().map(|(_, d)| d.year_month()).collect();
    let last = *months
        .iter()
        .next_back()
        .ok_or_else(|| Error::InsufficientData("no entities to split".into()))?;
    if months.len() < 2 {
        return Err(Error::InsufficientData("month split needs events in at least two months".into()));
    }
    let (test, train): (Vec<_>, Vec<_>) = entities.iter().partition(|(_, d)| d.year_month() == last);
    Ok((
        train.into_iter().map(|e| e.0.clone()).collect(),
        test.into_iter().map(|e| e.0.clone()).collect(),
    ))
}

/// Two-sided paired t-test p-value. `None` with fewer than two pairs;
/// 1 when every difference is identical to zero.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 {
        return Some(if mean == 0.0 { 1.0 } else { 0.0 });
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).ok()?;
    Some(2.0 * (1.0 - dist.cdf(t.abs())))
}
