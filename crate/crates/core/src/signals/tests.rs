use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::*;

fn reference() -> SpikeMParams<f64> {
    SpikeMParams {
        n_pop: 1000.0,
        beta: 1.0,
        n_b: 5,
        s_b: 10.0,
        epsilon: 0.1,
        p_a: 0.0,
        p_p: 7.0,
        p_s: 0.0,
    }
}

fn weekly(n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| 10.0 + 5.0 * (2.0 * std::f64::consts::PI * t as f64 / 7.0).sin())
        .collect()
}

fn noisy_weekly(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    weekly(n).into_iter().map(|v| v + rng.gen_range(-0.5..0.5)).collect()
}

#[test]
fn seasonality_of_sinusoid_noise_and_constant() {
    let f: f64 = seasonality(&weekly(28), 7).unwrap();
    assert!(f > 0.99, "{f}");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise: Vec<f64> = (0..84).map(|_| rng.gen_range(0.0..10.0)).collect();
    let g: f64 = seasonality(&noise, 7).unwrap();
    assert!(g < 0.3, "{g}");
    assert_eq!(seasonality(&[3.0f64; 28], 7).unwrap(), 0.0);
    assert!(matches!(seasonality(&[1.0f64; 13], 7), Err(crate::Error::InsufficientData(_))));
}

#[test]
fn autocorr_hand_values() {
    let a: f64 = autocorr_lag1(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    assert!((a - 0.4).abs() < 1e-15);
    let b: f64 = autocorr_lag1(&[1.0, -1.0, 1.0, -1.0]).unwrap();
    assert!((b + 0.75).abs() < 1e-15);
    assert!(matches!(autocorr_lag1(&[2.0f64; 5]), Err(crate::Error::ConstantSeries)));
}

#[test]
fn gamma_hand_values() {
    assert_eq!(rank_gamma(&["a", "b", "c"], &["a", "b", "c"]), 1.0);
    assert_eq!(rank_gamma(&["a", "b", "c"], &["c", "b", "a"]), -1.0);
    assert!((rank_gamma(&["a", "b", "c"], &["b", "a", "c"]) - 1.0 / 3.0).abs() < 1e-15);
    // d appears only now, c only before: both phantom-ranked
    let g = rank_gamma(&["a", "b", "d"], &["a", "b", "c"]);
    // pairs: ab C, ad C, ac C, bd C, bc C, dc discordant -> (5-1)/6
    assert!((g - 4.0 / 6.0).abs() < 1e-15);
    let empty: [&str; 0] = [];
    assert_eq!(rank_gamma(&["a"], &empty), 0.0);
}

#[test]
fn holt_winters_constant_periodic_and_trend() {
    let c = holt_winters_fit_forecast(&[4.0f64; 21], 7, 5).unwrap();
    assert!(c.forecast.iter().all(|&f| (f - 4.0).abs() < 1e-12));

    let y = weekly(42);
    let fit = holt_winters_fit_forecast(&y, 7, 7).unwrap();
    assert!(fit.residuals.iter().all(|r| r.abs() < 1e-6));
    for (h, f) in fit.forecast.iter().enumerate() {
        let truth = 10.0 + 5.0 * (2.0 * std::f64::consts::PI * (42 + h) as f64 / 7.0).sin();
        assert!((f - truth).abs() < 1e-6);
    }

    let lin: Vec<f64> = (0..30).map(|t| 2.0 * t as f64).collect();
    let fit = holt_winters_fit_forecast(&lin, 7, 6).unwrap();
    for (h, f) in fit.forecast.iter().enumerate() {
        let want = 58.0 + 2.0 * (h + 1) as f64;
        assert!(((f - want) / want).abs() < 0.05);
    }
    assert!(holt_winters_fit_forecast(&[1.0f64; 13], 7, 1).is_err());
}

#[test]
fn surprise_cases() {
    let mut y = noisy_weekly(35, 3);
    let fit = holt_winters_fit_forecast(&y[..34], 7, 1).unwrap();
    y[34] = fit.forecast[0];
    assert!(surprise(&y, 7).unwrap().abs() < 1e-12);

    let mut spiked = noisy_weekly(35, 4);
    spiked[34] *= 10.0;
    assert!(surprise(&spiked, 7).unwrap() > 5.0);

    let mut zeros = vec![0.0f64; 21];
    zeros[20] = 1.0;
    let s = surprise(&zeros, 7).unwrap();
    assert!(s.is_finite() && s > 1e6);
}

#[test]
fn spikem_without_propagation_is_silent() {
    let p = SpikeMParams {
        beta: 0.0,
        epsilon: 0.0,
        ..reference()
    };
    assert!(spikem_simulate(&p, 30).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn spikem_zero_amplitude_ignores_phase() {
    let p = SpikeMParams {
        n_pop: 5000.0,
        beta: 1e-4,
        s_b: 40.0,
        epsilon: 0.5,
        ..reference()
    };
    let q = SpikeMParams { p_s: 3.3, p_p: 5.0, ..p };
    assert_eq!(spikem_simulate(&p, 40).unwrap(), spikem_simulate(&q, 40).unwrap());
}

#[test]
fn spikem_reference_fixture() {
    let y = spikem_simulate(&reference(), 30).unwrap();
    let argmax = (0..y.len()).max_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap()).unwrap();
    // frozen: the shock saturates the whole population the day after n_b
    assert_eq!(argmax, 6);
    assert_eq!(y[6], 1000.0);
    assert!(y[..6].iter().all(|&v| v == 0.0));
    assert!(y[7..].iter().all(|&v| v == 0.0));
    assert!(spikem_simulate(&reference(), 5).is_err());
}

#[test]
fn spikem_gradual_curve_rises_and_falls() {
    let p = SpikeMParams {
        n_pop: 3000.0,
        beta: 2e-4,
        n_b: 3,
        s_b: 50.0,
        epsilon: 0.0,
        p_a: 0.0,
        p_p: 7.0,
        p_s: 0.0,
    };
    let y = spikem_simulate(&p, 60).unwrap();
    let argmax = (0..y.len()).max_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap()).unwrap();
    assert!(argmax > 4 && argmax < 59, "{argmax} {y:?}");
    assert!(y[59] < y[argmax]);
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}

#[test]
fn spikem_fit_reconstructs_reference() {
    let y = spikem_simulate(&reference(), 30).unwrap();
    let fit = spikem_fit(&y, &SpikeFitParams::default()).unwrap();
    let back = spikem_simulate(&fit.params, 30).unwrap();
    assert!(rmse(&back, &y) < 0.01 * 1000.0, "{:?}", fit);
}

#[test]
fn spikem_fit_with_noise() {
    let y = spikem_simulate(&reference(), 30).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.05 * 1000.0).unwrap();
    let noisy: Vec<f64> = y.iter().map(|&v| (v + noise.sample(&mut rng)).max(0.0)).collect();
    let fit = spikem_fit(&noisy, &SpikeFitParams::default()).unwrap();
    let back = spikem_simulate(&fit.params, 30).unwrap();
    assert!(rmse(&back, &noisy) < 0.1 * 1000.0);
}

#[test]
fn spikem_fit_gradual_curve() {
    let p = SpikeMParams {
        n_pop: 3000.0,
        beta: 2e-4,
        n_b: 3,
        s_b: 50.0,
        epsilon: 0.5,
        p_a: 0.2,
        p_p: 7.0,
        p_s: 1.0,
    };
    let y = spikem_simulate(&p, 40).unwrap();
    let peak = y.iter().copied().fold(0.0, f64::max);
    let fit = spikem_fit(&y, &SpikeFitParams::default()).unwrap();
    let back = spikem_simulate(&fit.params, 40).unwrap();
    assert!(rmse(&back, &y) < 0.05 * peak, "rmse {} peak {peak} {:?}", rmse(&back, &y), fit);
}

#[test]
fn spikem_fit_all_zero() {
    let fit = spikem_fit(&[0.0f64; 20], &SpikeFitParams::default()).unwrap();
    assert_eq!(fit.sse, 0.0);
    assert_eq!(fit.params.beta, 0.0);
    assert_eq!(fit.params.epsilon, 0.0);
    assert!(spikem_fit(&[1.0f64; 10], &SpikeFitParams::default()).is_err());
}

#[test]
fn lm_solves_exponential_decay() {
    let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (-0.7 * x).exp()).collect();
    let rep = levenberg_marquardt(
        |p: &[f64]| xs.iter().zip(&ys).map(|(x, y)| p[0] * (-p[1] * x).exp() - y).collect(),
        &[1.0, 0.1],
        &LmParams::default(),
    );
    assert!(rep.converged);
    assert!((rep.x[0] - 3.0).abs() < 1e-6 && (rep.x[1] - 0.7).abs() < 1e-6);
    assert!(rep.history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn signal_vector_roundtrip_and_csv() {
    let y = noisy_weekly(28, 9);
    let v = compute_signals(&y, Some(&weekly(28)), 0.5, &SignalParams::default()).unwrap();
    assert!(v.to_vec().iter().all(|x| x.is_finite()));
    assert!(v.seasonality_we > 0.99);
    assert_eq!(SignalVector::from_slice(&v.to_vec()).unwrap(), v);
    let rows = vec![SignalRow {
        entity: "e1".to_string(),
        day: crate::logstore::Day::from_ymd(2006, 3, 10).unwrap(),
        signals: v,
    }];
    let csv = signals_to_csv(&rows);
    assert!(csv.starts_with("entity,day,seasonality_q,seasonality_we,autocorr_lag1,rank_gamma,surprise,n_pop"));
    let back: Vec<SignalRow<f64>> = signals_from_csv(&csv, "mem").unwrap();
    assert_eq!(back, rows);
}

#[test]
fn constant_history_gets_total_features() {
    let v = compute_signals(&[5.0f64; 21], None, 0.0, &SignalParams::default()).unwrap();
    assert_eq!(v.autocorr_lag1, 0.0);
    assert_eq!(v.seasonality_q, 0.0);
    assert_eq!(v.seasonality_we, 0.0);
}

fn brute_gamma(a: &[u8], b: &[u8]) -> f64 {
    let mut items: Vec<u8> = a.to_vec();
    for x in b {
        if !items.contains(x) {
            items.push(*x);
        }
    }
    let rank = |l: &[u8], x: u8| l.iter().position(|&y| y == x).map(|p| p + 1).unwrap_or(l.len() + 1) as f64;
    let (mut c, mut d) = (0.0, 0.0);
    for x in &items {
        for y in &items {
            if x < y {
                let s = (rank(a, *x) - rank(a, *y)) * (rank(b, *x) - rank(b, *y));
                if s > 0.0 {
                    c += 1.0;
                } else if s < 0.0 {
                    d += 1.0;
                }
            }
        }
    }
    if c + d == 0.0 {
        0.0
    } else {
        (c - d) / (c + d)
    }
}

proptest! {
    #[test]
    fn autocorr_shift_scale_invariant(y in prop::collection::vec(0.0f64..100.0, 3..60), a in 0.01f64..50.0, b in -100.0f64..100.0) {
        prop_assume!(crate::scalar::variance(&y) > 1e-6);
        let r = autocorr_lag1(&y).unwrap();
        let z: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        prop_assert!((autocorr_lag1(&z).unwrap() - r).abs() < 1e-9);
    }

    #[test]
    fn gamma_matches_brute_force(a in prop::collection::hash_set(0u8..12, 1..8), b in prop::collection::hash_set(0u8..12, 1..8)) {
        let a: Vec<u8> = a.into_iter().collect();
        let b: Vec<u8> = b.into_iter().collect();
        prop_assert_eq!(rank_gamma(&a, &b), brute_gamma(&a, &b));
        let rev: Vec<u8> = a.iter().rev().copied().collect();
        if a.len() > 1 {
            prop_assert_eq!(rank_gamma(&a, &rev), -1.0);
        }
    }

    #[test]
    fn holt_winters_stays_finite(y in prop::collection::vec(0.0f64..1e6, 14..50)) {
        let fit = holt_winters_fit_forecast(&y, 7, 3).unwrap();
        prop_assert!(fit.forecast.iter().chain(&fit.residuals).all(|v| v.is_finite()));
    }

    #[test]
    fn spikem_conserves_population(
        n_pop in 1.0f64..1e5, beta in 0.0f64..2.0, n_b in 0usize..20, s_b in 0.0f64..500.0,
        eps in 0.0f64..50.0, p_a in 0.0f64..0.99, p_p in 1.0f64..30.0, p_s in -10.0f64..10.0,
    ) {
        let p = SpikeMParams { n_pop, beta, n_b, s_b, epsilon: eps, p_a, p_p, p_s };
        let y = spikem_simulate(&p, 60).unwrap();
        prop_assert!(y.iter().all(|&v| v >= 0.0));
        prop_assert!(y.iter().sum::<f64>() <= n_pop * (1.0 + 1e-12));
    }
}
