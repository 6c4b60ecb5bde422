use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smoothing constants of additive Holt-Winters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HwParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HwFit<T> {
    pub params: HwParams,
    /// Forecasts for steps `1..=horizon` past the last observation.
    pub forecast: Vec<T>,
    /// One-step in-sample residuals, from the second season on.
    pub residuals: Vec<T>,
    pub sse: T,
}

/// The coarse smoothing grid {0.05, 0.20, ..., 0.95}.
pub fn hw_grid() -> Vec<f64> {
    (0..7).map(|i| 0.05 + 0.15 * i as f64).collect()
}

struct Pass<T> {
    level: T,
    trend: T,
    seasonal: Vec<T>,
    residuals: Vec<T>,
    sse: T,
}

fn run<T: Scalar>(y: &[T], m: usize, p: HwParams) -> Pass<T> {
    let mf = T::from_count(m);
    let mean1 = y[..m].iter().copied().sum::<T>() / mf;
    let mean2 = y[m..2 * m].iter().copied().sum::<T>() / mf;
    let mut trend = (mean2 - mean1) / mf;
    let half = T::from_count(m - 1) / T::lit(2.0);
    // level and trend at the end of the first season
    let mut level = mean1 + trend * half;
    let mut seasonal: Vec<T> = (0..m).map(|i| y[i] - (mean1 + trend * (T::from_count(i) - half))).collect();

    let (a, b, g) = (T::lit(p.alpha), T::lit(p.beta), T::lit(p.gamma));
    let one = T::one();
    let mut residuals = Vec::with_capacity(y.len() - m);
    let mut sse = T::zero();
    for (t, &obs) in y.iter().enumerate().skip(m) {
        let s_old = seasonal[t % m];
        let pred = level + trend + s_old;
        let e = obs - pred;
        residuals.push(e);
        sse += e * e;
        let prev = level;
        level = a * (obs - s_old) + (one - a) * (level + trend);
        trend = b * (level - prev) + (one - b) * trend;
        seasonal[t % m] = g * (obs - level) + (one - g) * s_old;
    }
    Pass {
        level,
        trend,
        seasonal,
        residuals,
        sse,
    }
}

/// Fits additive Holt-Winters by grid search on in-sample one-step SSE and
/// forecasts `horizon` steps. Ties keep the first grid point.
pub fn holt_winters_fit_forecast<T: Scalar>(y: &[T], period: usize, horizon: usize) -> Result<HwFit<T>> {
    if period < 1 {
        return Err(Error::param("period must be positive"));
    }
    if y.len() < 2 * period {
        return Err(Error::InsufficientData(format!(
            "Holt-Winters needs {} points, got {}",
            2 * period,
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: 0,
            context: "holt-winters input".into(),
        });
    }
    let grid = hw_grid();
    let mut best: Option<(HwParams, Pass<T>)> = None;
    for &alpha in &grid {
        for &beta in &grid {
            for &gamma in &grid {
                let p = HwParams { alpha, beta, gamma };
                let pass = run(y, period, p);
                let better = match &best {
                    None => true,
                    Some((_, b)) => pass.sse < b.sse,
                };
                if better {
                    best = Some((p, pass));
                }
            }
        }
    }
    let (params, pass) = best.expect("grid is non-empty");
    let n = y.len();
    let forecast = (1..=horizon)
        .map(|h| pass.level + T::from_count(h) * pass.trend + pass.seasonal[(n + h - 1) % period])
        .collect();
    Ok(HwFit {
        params,
        forecast,
        residuals: pass.residuals,
        sse: pass.sse,
    })
}

/// Normalized error of the one-step forecast of the last observation, made
/// from everything before it.
pub fn surprise<T: Scalar>(y: &[T], period: usize) -> Result<T> {
    if y.len() < 2 * period + 1 {
        return Err(Error::InsufficientData(format!(
            "surprise needs {} points, got {}",
            2 * period + 1,
            y.len()
        )));
    }
    let (hist, last) = y.split_at(y.len() - 1);
    let fit = holt_winters_fit_forecast(hist, period, 1)?;
    let sigma = crate::scalar::variance(&fit.residuals).sqrt();
    Ok((last[0] - fit.forecast[0]).abs() / (sigma + T::lit(1e-9)))
}
