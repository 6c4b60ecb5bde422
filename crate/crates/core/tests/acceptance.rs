//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; exits non-zero if any fails.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use aspect_rank::clickgraph::{cf_iqf, rwr, ClickGraph, RwrParams, MIN_EDGE_WEIGHT};
use aspect_rank::evalsynth::{generate, ndcg_at_k, recall_at_k, SynthSpec};
use aspect_rank::eventclf::{distribution_from_sq_dists, fit_mixture, soft_assign, EventTime, EventType, MixtureParams};
use aspect_rank::features::{features_to_csv, AspectFeatureVector, FeatureRow};
use aspect_rank::logstore::{Day, FilterParams};
use aspect_rank::pipeline::{
    classification_cv, compute_signal_rows, distributions_to_csv, extract_candidates, query_metrics_to_csv,
    run_experiment, slice_report, studied_days, with_seed, Experiment, ExperimentInputs, PipelineConfig,
};
use aspect_rank::ranker::{preferences_from_rows, runs_to_tsv, train_ensemble, DistributionMap, RankParams};
use aspect_rank::signals::{
    autocorr_lag1, holt_winters_fit_forecast, rank_gamma, signals_to_csv, spikem_fit, spikem_simulate,
    SpikeFitParams, SpikeMParams,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SEED: u64 = 42;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

// 1. RWR against dense power iteration ------------------------------------

type Clicks = Vec<(String, String, u64)>;

/// Personalized PageRank by plain power iteration over a dense matrix built
/// from the click triples.
fn dense_rwr(queries: &[String], clicks: &Clicks, source: &str, restart: f64) -> HashMap<String, f64> {
    let mut nodes: Vec<String> = queries.iter().map(|q| format!("q:{q}")).collect();
    let n_queries = nodes.len() as f64;
    for (_, u, _) in clicks {
        let k = format!("u:{u}");
        if !nodes.contains(&k) {
            nodes.push(k);
        }
    }
    let idx = |k: &str| nodes.iter().position(|x| x == k).unwrap();
    let n = nodes.len();
    let mut cf: HashMap<(String, String), u64> = HashMap::new();
    for (q, u, c) in clicks {
        *cf.entry((q.clone(), u.clone())).or_default() += c;
    }
    let mut w = vec![vec![0.0f64; n]; n];
    for ((q, u), c) in &cf {
        let qf = cf.keys().filter(|(_, v)| v == u).count() as f64;
        let mut weight = *c as f64 * (n_queries / (qf + 1.0)).ln();
        if weight <= 0.0 {
            weight = 1e-9;
        }
        let (a, b) = (idx(&format!("q:{q}")), idx(&format!("u:{u}")));
        w[a][b] = weight;
        w[b][a] = weight;
    }
    let s = idx(&format!("q:{source}"));
    let mut pi = vec![0.0; n];
    pi[s] = 1.0;
    for _ in 0..100_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let row: f64 = w[i].iter().sum();
            if row == 0.0 {
                next[s] += (1.0 - restart) * pi[i];
            } else {
                for j in 0..n {
                    next[j] += (1.0 - restart) * pi[i] * w[i][j] / row;
                }
            }
        }
        next[s] += restart;
        let diff: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if diff < 1e-15 {
            break;
        }
    }
    nodes
        .iter()
        .zip(pi)
        .filter_map(|(k, p)| k.strip_prefix("q:").map(|q| (q.to_string(), p)))
        .collect()
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut walk_time = Duration::ZERO;
    for _ in 0..100 {
        let nq = rng.gen_range(2..=25);
        let nu = rng.gen_range(1..=50 - nq);
        let queries: Vec<String> = (0..nq).map(|i| format!("q{i}")).collect();
        let clicks: Clicks = (0..rng.gen_range(1..=3 * (nq + nu)))
            .map(|_| {
                (
                    format!("q{}", rng.gen_range(0..nq)),
                    format!("u{}", rng.gen_range(0..nu)),
                    rng.gen_range(1..20),
                )
            })
            .collect();
        let g: ClickGraph<f64> = ClickGraph::from_clicks(queries.clone(), &clicks).map_err(|e| e.to_string())?;
        let source = queries.choose(&mut rng).unwrap();
        let t = Instant::now();
        let r = rwr(&g, source, &RwrParams::default()).map_err(|e| e.to_string())?;
        walk_time += t.elapsed();
        let oracle = dense_rwr(&queries, &clicks, source, 0.15);
        for q in &queries {
            worst = worst.max((r.node_scores[g.query_node(q).unwrap()] - oracle[q]).abs());
        }
    }
    ensure(
        worst < 1e-8 && walk_time < Duration::from_secs(5),
        format!(
            "max |rwr - dense| = {worst:.2e} over 100 graphs of <= 50 nodes; walks took {:.3} s",
            secs(walk_time)
        ),
    )
}

// 2. CF-IQF -----------------------------------------------------------------

fn criterion_2() -> Check {
    let w: f64 = cf_iqf(10, 4, 100).map_err(|e| e.to_string())?;
    let exact = (w - 10.0 * 20.0f64.ln()).abs();
    let clamped: f64 = cf_iqf(1, 99, 100).map_err(|e| e.to_string())?;
    let no_click = cf_iqf::<f64>(0, 4, 100).is_err();
    ensure(
        exact < 1e-12 && (w - 29.9573).abs() < 1e-4 && clamped == MIN_EDGE_WEIGHT && MIN_EDGE_WEIGHT == 1e-9 && no_click,
        format!("cf=10,qf=4,N=100 -> {w:.10} (err {exact:.1e}); qf=N-1 -> {clamped:e}; cf=0 rejected: {no_click}"),
    )
}

// 3. Signal oracles -----------------------------------------------------------

fn autocorr_definitional(y: &[f64]) -> f64 {
    let n = y.len();
    let mut mean = 0.0;
    for &v in y {
        mean += v;
    }
    mean /= n as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        den += (y[i] - mean) * (y[i] - mean);
        for j in 0..n {
            if j == i + 1 {
                num += (y[i] - mean) * (y[j] - mean);
            }
        }
    }
    num / den
}

fn gamma_brute(a: &[u32], b: &[u32]) -> f64 {
    let mut items: Vec<u32> = a.to_vec();
    items.extend(b.iter().filter(|x| !a.contains(x)));
    let rank = |l: &[u32], x: u32| l.iter().position(|&y| y == x).map_or(l.len() + 1, |p| p + 1) as f64;
    let (mut c, mut d) = (0.0, 0.0);
    for (i, &x) in items.iter().enumerate() {
        for &y in &items[i + 1..] {
            let s = (rank(a, x) - rank(a, y)) * (rank(b, x) - rank(b, y));
            if s > 0.0 {
                c += 1.0;
            } else if s < 0.0 {
                d += 1.0;
            }
        }
    }
    if c + d == 0.0 {
        0.0
    } else {
        (c - d) / (c + d)
    }
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ac_err = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(3..120);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
        let got = autocorr_lag1(&y).map_err(|e| e.to_string())?;
        ac_err = ac_err.max((got - autocorr_definitional(&y)).abs());
    }
    let mut gamma_bad = 0;
    for _ in 0..500 {
        let mut pool: Vec<u32> = (0..20).collect();
        pool.shuffle(&mut rng);
        let a: Vec<u32> = pool[..rng.gen_range(1..10)].to_vec();
        pool.shuffle(&mut rng);
        let b: Vec<u32> = pool[..rng.gen_range(1..10)].to_vec();
        if rank_gamma(&a, &b) != gamma_brute(&a, &b) {
            gamma_bad += 1;
        }
    }
    let mut hw_err = 0.0f64;
    for _ in 0..50 {
        let period = 7;
        let pattern: Vec<f64> = (0..period).map(|_| rng.gen_range(0.0..50.0)).collect();
        let n = rng.gen_range(3 * period..12 * period);
        let y: Vec<f64> = (0..n).map(|t| pattern[t % period]).collect();
        let fit = holt_winters_fit_forecast(&y, period, 1).map_err(|e| e.to_string())?;
        for r in &fit.residuals {
            hw_err = hw_err.max(r.abs());
        }
        hw_err = hw_err.max((fit.forecast[0] - pattern[n % period]).abs());
    }
    ensure(
        ac_err < 1e-9 && gamma_bad == 0 && hw_err < 1e-6,
        format!(
            "autocorr max err {ac_err:.1e} on 1000 series; gamma mismatches {gamma_bad}/500; \
             Holt-Winters max one-step err {hw_err:.1e} on 50 periodic series"
        ),
    )
}

// 4. SpikeM closed loop -------------------------------------------------------

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}

fn criterion_4() -> Check {
    let reference = SpikeMParams {
        n_pop: 1000.0,
        beta: 1.0,
        n_b: 5,
        s_b: 10.0,
        epsilon: 0.1,
        p_a: 0.0,
        p_p: 7.0,
        p_s: 0.0,
    };
    let days = 30;
    let err = |e: aspect_rank::Error| e.to_string();
    let y = spikem_simulate(&reference, days).map_err(err)?;
    let peak = y.iter().copied().fold(0.0, f64::max);
    let fit = spikem_fit(&y, &SpikeFitParams::default()).map_err(err)?;
    let clean = rmse(&spikem_simulate(&fit.params, days).map_err(err)?, &y) / peak;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let noise = Normal::new(0.0, 0.05 * peak).unwrap();
    let noisy: Vec<f64> = y.iter().map(|&v| (v + noise.sample(&mut rng)).max(0.0)).collect();
    let fit = spikem_fit(&noisy, &SpikeFitParams::default()).map_err(err)?;
    let dirty = rmse(&spikem_simulate(&fit.params, days).map_err(err)?, &noisy) / peak;

    let mut violations = 0;
    for _ in 0..1000 {
        let n_pop = rng.gen_range(1.0..1e5);
        let p = SpikeMParams {
            n_pop,
            beta: rng.gen_range(0.0..2.0),
            n_b: rng.gen_range(0..20),
            s_b: rng.gen_range(0.0..500.0),
            epsilon: rng.gen_range(0.0..50.0),
            p_a: rng.gen_range(0.0..0.99),
            p_p: rng.gen_range(1.0..30.0),
            p_s: rng.gen_range(-10.0..10.0),
        };
        let s = spikem_simulate(&p, 60).map_err(err)?;
        if s.iter().any(|&v| v < 0.0) || s.iter().sum::<f64>() > n_pop * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    ensure(
        clean < 0.01 && dirty < 0.10 && violations == 0,
        format!(
            "RMSE/peak {:.3}% noise-free, {:.2}% with 5% noise; conservation violations {violations}/1000",
            100.0 * clean,
            100.0 * dirty
        ),
    )
}

// 6. Soft assignment ----------------------------------------------------------

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let dim = 4;
    let mut x = Vec::new();
    let mut cells = Vec::new();
    for c in 0..6 {
        for _ in 0..20 {
            x.push((0..dim).map(|j| if j == c % dim { 4.0 * (1 + c / dim) as f64 } else { 0.0 } + rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>());
            cells.push(c);
        }
    }
    let model = fit_mixture(&x, &cells, &vec![1.0; dim], &MixtureParams::default()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let d = if i % 2 == 0 {
            let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-20.0..20.0)).collect();
            soft_assign(&model, &q).map_err(|e| e.to_string())?.to_vec()
        } else {
            let d2: Vec<f64> = (0..rng.gen_range(1..8)).map(|_| rng.gen_range(0.0..100.0)).collect();
            distribution_from_sq_dists(&d2)
        };
        if d.iter().any(|&p| p < 0.0) {
            return Err(format!("negative probability in {d:?}"));
        }
        worst = worst.max((d.iter().sum::<f64>() - 1.0).abs());
    }
    let a = distribution_from_sq_dists(&[0.0, 4.0]);
    let b = distribution_from_sq_dists(&[1.0, 2.0, 4.0]);
    ensure(
        worst < 1e-9 && a == vec![1.0, 0.0] && b == vec![0.6, 0.4, 0.0],
        format!("max |sum - 1| = {worst:.1e} on 10^4 inputs; toys {a:?} and {b:?}"),
    )
}

// 7. Ranking reduction --------------------------------------------------------

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let day = Day::from_ymd(2006, 3, 1).unwrap();
    let mut rows = Vec::new();
    let mut fr = Vec::new();
    for g in 0..24 {
        for grade in [1u8, 2, 3, 2] {
            rows.push(vec![
                grade as f64 + rng.gen_range(-0.3..0.3),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]);
            fr.push(FeatureRow {
                entity: format!("e{g}"),
                aspect: format!("a{}", rows.len()),
                day,
                features: AspectFeatureVector::<f64>::default(),
                grade: Some(grade),
            });
        }
    }
    let prefs = preferences_from_rows(&fr);
    let cell = |e: &str| e[1..].parse::<usize>().unwrap() % 6;
    let dists: DistributionMap<f64> = prefs
        .iter()
        .map(|p| {
            let mut d = [0.0; 6];
            d[cell(&p.entity)] = 1.0;
            ((p.entity.clone(), p.day), d)
        })
        .collect();
    let params = RankParams::default();
    let m = train_ensemble(&prefs, &rows, &dists, &params).map_err(|e| e.to_string())?;

    // per-cell pairwise SVM objectives summed by hand
    let mut total = 0.0;
    for k in 0..6 {
        let w = &m.weights[k];
        total += 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        for p in prefs.iter().filter(|p| cell(&p.entity) == k) {
            let sb = m.cell_scores(&rows[p.better]).map_err(|e| e.to_string())?[k];
            let sw = m.cell_scores(&rows[p.worse]).map_err(|e| e.to_string())?[k];
            total += params.c * (1.0 - (sb - sw)).max(0.0);
        }
    }
    let joint = m.objective_on(&prefs, &rows, &dists).map_err(|e| e.to_string())?;
    let acc = m.pairwise_accuracy(&prefs, &rows, &dists).map_err(|e| e.to_string())?;
    ensure(
        (joint - total).abs() < 1e-6 && (m.objective - total).abs() < 1e-6 && acc == 1.0,
        format!(
            "ensemble objective {joint:.9} vs per-cell sum {total:.9} (diff {:.1e}); pairwise accuracy {acc}",
            (joint - total).abs()
        ),
    )
}

// 9. Metrics --------------------------------------------------------------------

fn criterion_9() -> Check {
    let want = (3.0 + 7.0 / 3f64.log2()) / (7.0 + 3.0 / 3f64.log2());
    let a = ndcg_at_k(&[2, 3], 2);
    let b = ndcg_at_k(&[1, 1, 0], 3);
    let c = recall_at_k(&[3, 1, 2, 1, 2, 3], 3);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ideal_err = 0.0f64;
    for _ in 0..1000 {
        let mut g: Vec<u8> = (0..rng.gen_range(1..30)).map(|_| rng.gen_range(0..4)).collect();
        if g.iter().all(|&v| v < 2) {
            g[0] = 2;
        }
        g.sort_unstable_by(|x, y| y.cmp(x));
        for k in [1, 3, 10, 30] {
            ideal_err = ideal_err.max((ndcg_at_k(&g, k) - 1.0).abs());
        }
    }
    ensure(
        (a - want).abs() < 1e-15 && (a - 0.8340).abs() < 1e-4 && b == 0.0 && c == 0.5 && ideal_err == 0.0,
        format!("NDCG@2 [2,3] = {a:.6}; all irrelevant = {b}; recall@3 2 of 4 = {c}; ideal-order max err {ideal_err:e}"),
    )
}

// 5, 8, 10. Synthetic closed loop ---------------------------------------------

fn config() -> PipelineConfig {
    with_seed(PipelineConfig::default(), SEED)
}

fn inputs() -> Result<ExperimentInputs, String> {
    let out = generate(&SynthSpec::default()).map_err(|e| e.to_string())?;
    ExperimentInputs::from_synth(&out, FilterParams::default()).map_err(|e| e.to_string())
}

fn criterion_5(inputs: &ExperimentInputs) -> Check {
    let t = Instant::now();
    let cfg = config();
    let span = inputs.index.span().ok_or("empty log")?;
    let studied = studied_days(&inputs.events, span);
    let cands = extract_candidates(&inputs.index, &inputs.aliases, &studied, &cfg).map_err(|e| e.to_string())?;
    let rows = compute_signal_rows(&inputs.index, &inputs.aliases, inputs.edits.as_ref(), &cands, &cfg)
        .map_err(|e| e.to_string())?;
    let folds = classification_cv(&rows, &studied, &cfg).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let entities = inputs.events.len();
    let breaking = inputs.events.iter().filter(|e| e.kind == EventType::Breaking).count();
    let n = folds.len() as f64;
    let acc = folds.iter().map(|f| f.type_accuracy).sum::<f64>() / n;
    let cascade = folds.iter().map(|f| f.cascade_time_f1).sum::<f64>() / n;
    let flat = folds.iter().map(|f| f.flat_time_f1).sum::<f64>() / n;
    ensure(
        entities >= 60
            && breaking > 0
            && breaking < entities
            && studied.len() == 3 * entities
            && acc >= 0.85
            && cascade > flat
            && elapsed < Duration::from_secs(120),
        format!(
            "{entities} entities ({breaking} breaking), {} studied days, {} folds; type accuracy {acc:.4}; \
             time F1 cascaded {cascade:.4} vs flat {flat:.4}; {:.1} s",
            studied.len(),
            folds.len(),
            secs(elapsed)
        ),
    )
}

fn criterion_8(exp: &Experiment, elapsed: Duration) -> Check {
    let ndcg3 = |r: &aspect_rank::evalsynth::Report, m: &str| r.row(m).map(|row| row.mean[0]).ok_or(format!("no {m} row"));
    let all = &exp.report;
    let (ens, svm, rwr, rwr_mle) = (
        ndcg3(all, "Ensemble")?,
        ndcg3(all, "SVM_all")?,
        ndcg3(all, "RWR")?,
        ndcg3(all, "RWR+MLE")?,
    );
    let gain = (ens - rwr) / rwr;
    let slice = |p| -> Result<(f64, f64), String> {
        let r = slice_report(&exp.metrics, EventType::Breaking, p)
            .map_err(|e| e.to_string())?
            .ok_or(format!("no breaking {p} queries"))?;
        Ok((ndcg3(&r, "SVM_salience")?, ndcg3(&r, "SVM_timeliness")?))
    };
    let (bs, bt) = slice(EventTime::Before)?;
    let (as_, at) = slice(EventTime::After)?;
    ensure(
        ens >= svm && svm >= rwr.max(rwr_mle) && gain >= 0.20 && bs > bt && at > as_ && elapsed < Duration::from_secs(600),
        format!(
            "NDCG@3 Ensemble {ens:.4} >= SVM_all {svm:.4} >= max(RWR {rwr:.4}, RWR+MLE {rwr_mle:.4}); \
             gain over RWR {:+.1}%; breaking before salience {bs:.4} vs timeliness {bt:.4}; \
             breaking after timeliness {at:.4} vs salience {as_:.4}; {} test queries; {:.1} s",
            100.0 * gain,
            all.queries,
            secs(elapsed)
        ),
    )
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializes")
}

/// Every artifact of a run in its on-disk form.
fn serialized(exp: &Experiment) -> Vec<(&'static str, String)> {
    vec![
        ("studied", json(&exp.studied)),
        ("split", json(&exp.split)),
        ("candidates", json(&exp.candidates)),
        ("aspects", json(&exp.aspects)),
        ("signals", signals_to_csv(&exp.signals)),
        ("folds", json(&exp.folds)),
        ("event model", exp.event_model.to_json()),
        ("distributions", distributions_to_csv(&exp.dists)),
        ("features", features_to_csv(&exp.features)),
        ("models", json(&exp.models)),
        ("runs", runs_to_tsv(&exp.runs)),
        ("metrics", query_metrics_to_csv(&exp.metrics)),
        ("report", exp.report.to_text()),
    ]
}

fn criterion_10(first: &Experiment) -> Check {
    let again = inputs()?;
    let second = run_experiment(&again, &config()).map_err(|e| e.to_string())?;
    let a = generate(&SynthSpec::default()).map_err(|e| e.to_string())?;
    let b = generate(&SynthSpec::default()).map_err(|e| e.to_string())?;
    let mut differing: Vec<&str> = serialized(first)
        .into_iter()
        .zip(serialized(&second))
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| x.0)
        .collect();
    if a != b {
        differing.push("synthetic data");
    }
    let bytes: usize = serialized(first).iter().map(|(_, s)| s.len()).sum();
    ensure(
        differing.is_empty(),
        if differing.is_empty() {
            format!("generator output and 13 pipeline artifacts ({bytes} bytes) identical across two runs")
        } else {
            format!("artifacts differ between runs: {}", differing.join(", "))
        },
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Check)> = vec![
        (1, "RWR oracle equivalence", criterion_1()),
        (2, "CF-IQF exactness", criterion_2()),
        (3, "signal oracles", criterion_3()),
        (4, "SpikeM closed loop", criterion_4()),
    ];
    let data = inputs();
    match &data {
        Ok(d) => results.push((5, "classification closed loop", criterion_5(d))),
        Err(e) => results.push((5, "classification closed loop", Err(e.clone()))),
    }
    results.push((6, "soft assignment", criterion_6()));
    results.push((7, "ranking reduction", criterion_7()));
    let t = Instant::now();
    let exp = data.and_then(|d| run_experiment(&d, &config()).map_err(|e| e.to_string()));
    let elapsed = t.elapsed();
    match &exp {
        Ok(x) => results.push((8, "directional method comparison", criterion_8(x, elapsed))),
        Err(e) => results.push((8, "directional method comparison", Err(e.clone()))),
    }
    results.push((9, "metric correctness", criterion_9()));
    match &exp {
        Ok(x) => results.push((10, "determinism", criterion_10(x))),
        Err(e) => results.push((10, "determinism", Err(e.clone()))),
    }
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
