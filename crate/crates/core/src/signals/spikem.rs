use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LmParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tail length of the power-law decay kernel.
pub const SPIKEM_KERNEL_DAYS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeMParams<T> {
    pub n_pop: T,
    pub beta: T,
    /// Shock day, zero-based.
    pub n_b: usize,
    pub s_b: T,
    pub epsilon: T,
    pub p_a: T,
    pub p_p: T,
    pub p_s: T,
}

impl<T: Scalar> SpikeMParams<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [self.n_pop, self.beta, self.s_b, self.epsilon, self.p_a, self.p_p, self.p_s];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("SpikeM parameters must be finite"));
        }
        if self.n_pop <= T::zero() {
            return Err(Error::param("SpikeM population must be positive"));
        }
        if self.beta < T::zero() || self.s_b < T::zero() || self.epsilon < T::zero() {
            return Err(Error::param("SpikeM beta, shock size and background must be non-negative"));
        }
        if self.p_a < T::zero() || self.p_a >= T::one() {
            return Err(Error::param("SpikeM periodicity amplitude must lie in [0,1)"));
        }
        if self.p_p <= T::zero() {
            return Err(Error::param("SpikeM period must be positive"));
        }
        Ok(())
    }

    /// The 8 parameters as reals in declaration order.
    pub fn to_array(&self) -> [T; 8] {
        [
            self.n_pop,
            self.beta,
            T::from_count(self.n_b),
            self.s_b,
            self.epsilon,
            self.p_a,
            self.p_p,
            self.p_s,
        ]
    }

    fn periodicity(&self, n: usize) -> T {
        let phase = T::TAU() * (T::from_count(n) + self.p_s) / self.p_p;
        T::one() + self.p_a * phase.sin().abs()
    }
}

/// Daily new adopters ΔB(0..n_days). Nothing happens up to the shock day.
pub fn spikem_simulate<T: Scalar>(p: &SpikeMParams<T>, n_days: usize) -> Result<Vec<T>> {
    p.validate()?;
    if n_days <= p.n_b {
        return Err(Error::param(format!("n_days ({n_days}) must exceed the shock day ({})", p.n_b)));
    }
    Ok(simulate_unchecked(p, n_days))
}

fn simulate_unchecked<T: Scalar>(p: &SpikeMParams<T>, n_days: usize) -> Vec<T> {
    let kernel: Vec<T> = (0..=SPIKEM_KERNEL_DAYS)
        .map(|tau| {
            if tau == 0 {
                T::zero()
            } else {
                p.beta * T::from_count(tau).powf(T::lit(-1.5))
            }
        })
        .collect();
    let mut db = vec![T::zero(); n_days];
    let mut unaware = p.n_pop;
    for n in p.n_b..n_days - 1 {
        let lo = p.n_b.max((n + 1).saturating_sub(SPIKEM_KERNEL_DAYS));
        let mut acc = T::zero();
        for t in lo..=n {
            let shock = if t == p.n_b { p.s_b } else { T::zero() };
            acc += (db[t] + shock) * kernel[n + 1 - t];
        }
        let raw = p.periodicity(n + 1) * (unaware * acc + p.epsilon);
        let v = raw.max(T::zero()).min(unaware);
        db[n + 1] = v;
        unaware -= v;
    }
    db
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpikeFitParams {
    pub starts: usize,
    pub seed: u64,
    pub lm: LmParams,
    /// LM iterations spent on each shock day during the grid screen.
    pub screen_iter: usize,
    /// Shock days kept from the screen for full multi-start fits.
    pub refine: usize,
    /// Ridge on the unconstrained coordinates, pulling toward the default
    /// start, relative to the squared series peak. Keeps weakly identified
    /// directions from drifting off on short noisy windows.
    pub prior: f64,
}

impl Default for SpikeFitParams {
    fn default() -> Self {
        SpikeFitParams {
            starts: 5,
            seed: 42,
            lm: LmParams::default(),
            screen_iter: 12,
            refine: 3,
            prior: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpikeMFit<T> {
    pub params: SpikeMParams<T>,
    pub sse: T,
    pub converged: bool,
}

const LOG_CLAMP: f64 = 50.0;

// Unconstrained coordinates: logs of the positive parameters, a logistic
// for the amplitude, the phase as is.
fn decode<T: Scalar>(z: &[T], n_b: usize) -> SpikeMParams<T> {
    let c = T::lit(LOG_CLAMP);
    let ex = |v: T| v.max(-c).min(c).exp();
    let sig = T::one() / (T::one() + (-z[4].max(-c).min(c)).exp());
    SpikeMParams {
        n_pop: ex(z[0]),
        beta: ex(z[1]),
        n_b,
        s_b: ex(z[2]),
        epsilon: ex(z[3]),
        p_a: sig.min(T::one() - T::epsilon()),
        p_p: ex(z[5]),
        p_s: z[6],
    }
}

fn encode<T: Scalar>(p: &SpikeMParams<T>) -> Vec<T> {
    let tiny = T::lit(1e-12);
    let pa = p.p_a.max(tiny).min(T::one() - tiny);
    vec![
        p.n_pop.max(tiny).ln(),
        p.beta.max(tiny).ln(),
        p.s_b.max(tiny).ln(),
        p.epsilon.max(tiny).ln(),
        (pa / (T::one() - pa)).ln(),
        p.p_p.max(tiny).ln(),
        p.p_s,
    ]
}

fn starting_points<T: Scalar>(y: &[T], params: &SpikeFitParams) -> Vec<Vec<T>> {
    let total: T = y.iter().copied().sum();
    let peak = y.iter().copied().fold(T::zero(), T::max);
    let avg = total / T::from_count(y.len());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    (0..params.starts.max(1))
        .map(|i| {
            let (pop_mul, shock_frac, beta_mul, eps_frac, p_a, p_p, p_s) = if i == 0 {
                (2.0, 0.5, 1.0, 0.01, 0.1, 7.0, 0.0)
            } else {
                (
                    rng.gen_range(1.1..4.0),
                    rng.gen_range(0.05..1.0),
                    rng.gen_range(0.2..3.0),
                    rng.gen_range(0.001..0.3),
                    rng.gen_range(0.0..0.6),
                    rng.gen_range(5.0..9.0),
                    rng.gen_range(0.0..7.0),
                )
            };
            let n_pop = total * T::lit(pop_mul) + T::one();
            let p = SpikeMParams {
                n_pop,
                beta: T::lit(beta_mul) / n_pop,
                n_b: 0,
                s_b: peak * T::lit(shock_frac) + T::lit(1e-3),
                epsilon: avg * T::lit(eps_frac) + T::lit(1e-6),
                p_a: T::lit(p_a),
                p_p: T::lit(p_p),
                p_s: T::lit(p_s),
            };
            encode(&p)
        })
        .collect()
}

/// Least-squares SpikeM fit: the shock day by integer grid search, the
/// continuous parameters by multi-start Levenberg-Marquardt.
pub fn spikem_fit<T: Scalar>(y: &[T], params: &SpikeFitParams) -> Result<SpikeMFit<T>> {
    if y.len() < 14 {
        return Err(Error::InsufficientData(format!("SpikeM fit needs 14 points, got {}", y.len())));
    }
    if y.iter().any(|v| !v.is_finite() || *v < T::zero()) {
        return Err(Error::param("SpikeM fit needs finite non-negative values"));
    }
    if params.starts == 0 || params.refine == 0 {
        return Err(Error::param("SpikeM fit needs at least one start and one refined shock day"));
    }
    if y.iter().all(|v| *v == T::zero()) {
        return Ok(SpikeMFit {
            params: SpikeMParams {
                n_pop: T::one(),
                beta: T::zero(),
                n_b: 0,
                s_b: T::zero(),
                epsilon: T::zero(),
                p_a: T::zero(),
                p_p: T::lit(7.0),
                p_s: T::zero(),
            },
            sse: T::zero(),
            converged: true,
        });
    }
    if !(params.prior >= 0.0 && params.prior.is_finite()) {
        return Err(Error::param("SpikeM prior weight must be finite and non-negative"));
    }
    let n = y.len();
    let starts = starting_points(y, params);
    let peak = y.iter().copied().fold(T::zero(), T::max);
    let ridge = T::lit(params.prior.sqrt()) * peak;
    let anchor = &starts[0];
    let residual = |n_b: usize| {
        move |z: &[T]| -> Vec<T> {
            let p = decode(z, n_b);
            let mut r: Vec<T> = simulate_unchecked(&p, n).iter().zip(y).map(|(&m, &o)| m - o).collect();
            if ridge > T::zero() {
                r.extend(z.iter().zip(anchor).map(|(&a, &b)| ridge * (a - b)));
            }
            r
        }
    };
    let data_sse = |p: &SpikeMParams<T>| -> T {
        simulate_unchecked(p, n).iter().zip(y).map(|(&m, &o)| (m - o) * (m - o)).sum()
    };

    let screen_lm = LmParams {
        max_iter: params.screen_iter.max(1),
        ..params.lm
    };
    let mut screened: Vec<(usize, T)> = (0..n - 1)
        .map(|n_b| {
            let rep = levenberg_marquardt(residual(n_b), &starts[0], &screen_lm);
            (n_b, rep.sse)
        })
        .collect();
    screened.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));

    let mut best: Option<SpikeMFit<T>> = None;
    for &(n_b, _) in screened.iter().take(params.refine) {
        for z0 in &starts {
            let rep = levenberg_marquardt(residual(n_b), z0, &params.lm);
            if !rep.sse.is_finite() {
                continue;
            }
            let better = best.as_ref().map_or(true, |b| rep.sse < b.sse);
            if better {
                best = Some(SpikeMFit {
                    params: decode(&rep.x, n_b),
                    sse: rep.sse,
                    converged: rep.converged,
                });
            }
        }
    }
    match best.map(|mut fit| {
        fit.sse = data_sse(&fit.params);
        fit
    }) {
        Some(fit) => Ok(fit),
        None => {
            log::warn!("every SpikeM start diverged; returning the first start");
            let p = decode(&starts[0], screened[0].0);
            let sse = data_sse(&p);
            Ok(SpikeMFit {
                params: p,
                sse,
                converged: false,
            })
        }
    }
}
