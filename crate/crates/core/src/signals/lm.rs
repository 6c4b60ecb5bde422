//! Levenberg-Marquardt on a residual function with a central-difference
//! Jacobian.

use serde::{Deserialize, Serialize};
use crate::scalar::{solve_dense, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmParams {
    pub lambda0: f64,
    pub max_iter: usize,
    /// Stop once an accepted step lowers the SSE by less than this fraction.
    pub rel_tol: f64,
}

impl Default for LmParams {
    fn default() -> Self {
        LmParams {
            lambda0: 1e-3,
            max_iter: 500,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmReport<T> {
    pub x: Vec<T>,
    pub sse: T,
    pub iterations: usize,
    pub converged: bool,
    /// SSE after every accepted step, starting with the initial point.
    pub history: Vec<T>,
}

fn sse<T: Scalar>(r: &[T]) -> T {
    r.iter().map(|&v| v * v).sum()
}

/// Minimizes `sum(residual(x)^2)` from `x0`. Non-finite residuals count as
/// rejected steps.
pub fn levenberg_marquardt<T, F>(residual: F, x0: &[T], params: &LmParams) -> LmReport<T>
where
    T: Scalar,
    F: Fn(&[T]) -> Vec<T>,
{
    let p = x0.len();
    let mut x = x0.to_vec();
    let mut r = residual(&x);
    let mut cost = sse(&r);
    let mut history = vec![cost];
    if !cost.is_finite() {
        return LmReport {
            x,
            sse: cost,
            iterations: 0,
            converged: false,
            history,
        };
    }
    let mut lambda = T::lit(params.lambda0);
    let h_unit = T::epsilon().cbrt();
    let max_lambda = T::lit(1e12);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        if cost <= T::min_positive_value() {
            converged = true;
            break;
        }
        let n = r.len();
        let mut jac = vec![T::zero(); n * p];
        for k in 0..p {
            let h = h_unit * x[k].abs().max(T::one());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let rp = residual(&xp);
            let rm = residual(&xm);
            for i in 0..n {
                let d = (rp[i] - rm[i]) / (h + h);
                jac[i * p + k] = if d.is_finite() { d } else { T::zero() };
            }
        }
        let mut jtj = vec![T::zero(); p * p];
        let mut jtr = vec![T::zero(); p];
        for i in 0..n {
            let row = &jac[i * p..(i + 1) * p];
            for a in 0..p {
                jtr[a] += row[a] * r[i];
                for b in a..p {
                    jtj[a * p + b] += row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                jtj[a * p + b] = jtj[b * p + a];
            }
        }
        let grad_norm = jtr.iter().map(|g| g.abs()).fold(T::zero(), T::max);
        if grad_norm <= T::epsilon() * cost.max(T::one()) {
            converged = true;
            break;
        }

        let mut accepted = false;
        while lambda <= max_lambda {
            let mut a = jtj.clone();
            for d in 0..p {
                let diag = jtj[d * p + d];
                a[d * p + d] = diag + lambda * (diag + T::lit(1e-12));
            }
            let neg: Vec<T> = jtr.iter().map(|&g| -g).collect();
            if let Some(step) = solve_dense(a, neg) {
                let trial: Vec<T> = x.iter().zip(&step).map(|(&xi, &s)| xi + s).collect();
                let rt = residual(&trial);
                let ct = sse(&rt);
                if ct.is_finite() && ct < cost {
                    let gain = (cost - ct) / cost;
                    x = trial;
                    r = rt;
                    cost = ct;
                    history.push(cost);
                    lambda = (lambda / T::lit(10.0)).max(T::lit(1e-15));
                    accepted = true;
                    if gain < T::lit(params.rel_tol) {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= T::lit(10.0);
        }
        if !accepted {
            // no downhill step at any damping: a local minimum to working precision
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    LmReport {
        x,
        sse: cost,
        iterations,
        converged,
        history,
    }
}
