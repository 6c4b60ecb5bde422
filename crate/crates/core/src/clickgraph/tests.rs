use std::collections::HashMap;

use proptest::prelude::*;

use super::*;
use crate::error::Error;

type Clicks = Vec<(String, String, u64)>;

fn s(x: &str) -> String {
    x.to_string()
}

/// Dense power iteration built straight from the click triples.
fn dense_oracle(queries: &[String], clicks: &Clicks, source: &str, restart: f64) -> HashMap<String, f64> {
    let mut nodes: Vec<String> = queries.iter().map(|q| format!("q:{q}")).collect();
    for (q, _, _) in clicks {
        let k = format!("q:{q}");
        if !nodes.contains(&k) {
            nodes.push(k);
        }
    }
    let n_queries = nodes.len() as f64;
    for (_, u, _) in clicks {
        let k = format!("u:{u}");
        if !nodes.contains(&k) {
            nodes.push(k);
        }
    }
    let idx = |k: &str| nodes.iter().position(|x| x == k).unwrap();
    let n = nodes.len();
    let mut w = vec![vec![0.0f64; n]; n];
    let mut cf: HashMap<(String, String), u64> = HashMap::new();
    for (q, u, c) in clicks {
        *cf.entry((q.clone(), u.clone())).or_default() += c;
    }
    for ((q, u), c) in &cf {
        let qf = cf.keys().filter(|(_, u2)| u2 == u).count() as f64;
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
    for _ in 0..20_000 {
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
        if diff < 1e-14 {
            break;
        }
    }
    nodes
        .iter()
        .zip(pi)
        .filter_map(|(k, p)| k.strip_prefix("q:").map(|q| (q.to_string(), p)))
        .collect()
}

fn fixture() -> (Vec<String>, Clicks) {
    let queries = vec![s("a"), s("b"), s("c"), s("d"), s("e")];
    let clicks = vec![
        (s("a"), s("x"), 4),
        (s("b"), s("x"), 2),
        (s("b"), s("y"), 3),
        (s("c"), s("y"), 1),
    ];
    (queries, clicks)
}

#[test]
fn cf_iqf_spot_values() {
    let w: f64 = cf_iqf(10, 4, 100).unwrap();
    assert!((w - 10.0 * 20.0f64.ln()).abs() < 1e-12);
    assert!((w - 29.957_322_735_539_91).abs() < 1e-9);
    let clamped: f64 = cf_iqf(1, 99, 100).unwrap();
    assert_eq!(clamped, MIN_EDGE_WEIGHT);
    assert!(matches!(cf_iqf::<f64>(0, 4, 100), Err(Error::InvalidParameter(_))));
}

#[test]
fn single_edge_graph() {
    let g: ClickGraph<f64> = ClickGraph::from_clicks(vec![s("q"), s("other")], &[(s("q"), s("u"), 5)]).unwrap();
    assert_eq!(g.edges().len(), 1);
    assert_eq!(g.query_transitions(0), &[(0, 1.0)]);
    assert_eq!(g.url_transitions(0), &[(0, 1.0)]);
}

#[test]
fn shared_url_splits_evenly() {
    let g: ClickGraph<f64> = ClickGraph::from_clicks(
        vec![s("a"), s("b"), s("c"), s("d")],
        &[(s("a"), s("u"), 3), (s("b"), s("u"), 3)],
    )
    .unwrap();
    for &(_, p) in g.url_transitions(0) {
        assert!((p - 0.5).abs() < 1e-15);
    }
}

#[test]
fn hand_built_transition_matrix() {
    let (queries, clicks) = fixture();
    let g: ClickGraph<f64> = ClickGraph::from_clicks(queries, &clicks).unwrap();
    // weights share the factor ln(5/3), which cancels in every row
    let expect_q: [&[(usize, f64)]; 3] = [&[(0, 1.0)], &[(0, 0.4), (1, 0.6)], &[(1, 1.0)]];
    for (q, want) in expect_q.iter().enumerate() {
        let got = g.query_transitions(q);
        assert_eq!(got.len(), want.len());
        for (a, b) in got.iter().zip(want.iter()) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-12);
        }
    }
    let expect_u: [&[(usize, f64)]; 2] = [&[(0, 4.0 / 6.0), (1, 2.0 / 6.0)], &[(1, 0.75), (2, 0.25)]];
    for (u, want) in expect_u.iter().enumerate() {
        for (a, b) in g.url_transitions(u).iter().zip(want.iter()) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-12);
        }
    }
    for q in 3..5 {
        assert!(g.query_transitions(q).is_empty());
    }
}

#[test]
fn empty_graph_is_an_error() {
    let r = ClickGraph::<f64>::from_clicks(vec![s("a")], &[]);
    assert!(matches!(r, Err(Error::EmptyGraph)));
}

#[test]
fn isolated_source_scores_nothing() {
    let (queries, clicks) = fixture();
    let g: ClickGraph<f64> = ClickGraph::from_clicks(queries, &clicks).unwrap();
    let r = rwr(&g, "d", &RwrParams::default()).unwrap();
    assert!(r.scores.is_empty());
    let total: f64 = r.node_scores.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn rwr_matches_dense_oracle_on_fixture() {
    let (queries, clicks) = fixture();
    let g: ClickGraph<f64> = ClickGraph::from_clicks(queries.clone(), &clicks).unwrap();
    let r = rwr(&g, "a", &RwrParams::default()).unwrap();
    let oracle = dense_oracle(&queries, &clicks, "a", 0.15);
    let total: f64 = r.node_scores.iter().sum();
    assert!((total - 1.0).abs() < 1e-9);
    for q in &queries {
        let got = r.node_scores[g.query_node(q).unwrap()];
        assert!((got - oracle[q]).abs() < 1e-8, "{q}: {got} vs {}", oracle[q]);
    }
    let top = candidates(&g, "a", 1, &RwrParams::default()).unwrap();
    let best = ["b", "c"]
        .into_iter()
        .max_by(|x, y| oracle[*x].partial_cmp(&oracle[*y]).unwrap())
        .unwrap();
    assert_eq!(top.len(), 1);
    assert_eq!(top[0].0, best);
}

#[test]
fn unknown_source_and_bad_params() {
    let (queries, clicks) = fixture();
    let g: ClickGraph<f64> = ClickGraph::from_clicks(queries, &clicks).unwrap();
    assert!(matches!(rwr(&g, "zzz", &RwrParams::default()), Err(Error::UnknownNode(_))));
    let bad = RwrParams {
        restart: 1.0,
        ..RwrParams::default()
    };
    assert!(rwr(&g, "a", &bad).is_err());
    assert!(candidates(&g, "a", 0, &RwrParams::default()).is_err());
}

#[test]
fn non_convergence_reports_residual() {
    let (queries, clicks) = fixture();
    let g: ClickGraph<f64> = ClickGraph::from_clicks(queries, &clicks).unwrap();
    let tight = RwrParams {
        max_iter: 2,
        ..RwrParams::default()
    };
    match rwr(&g, "a", &tight) {
        Err(Error::NotConverged { iterations, residual }) => {
            assert_eq!(iterations, 2);
            assert!(residual > 0.0);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn candidate_list_shorter_than_k_and_ties() {
    // b and c are symmetric around the shared url
    let g: ClickGraph<f64> = ClickGraph::from_clicks(
        vec![s("a"), s("c"), s("b"), s("z1"), s("z2"), s("z3")],
        &[(s("a"), s("u"), 2), (s("c"), s("u"), 2), (s("b"), s("u"), 2)],
    )
    .unwrap();
    let c = candidates(&g, "a", 10, &RwrParams::default()).unwrap();
    assert_eq!(c.len(), 2);
    assert_eq!(c[0].0, "b");
    assert_eq!(c[1].0, "c");
    assert!((c[0].1 - c[1].1).abs() < 1e-15);
}

#[test]
fn edge_tsv_is_sorted() {
    let (queries, clicks) = fixture();
    let g: ClickGraph<f64> = ClickGraph::from_clicks(queries, &clicks).unwrap();
    let tsv = g.to_edge_tsv();
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines[0], "query\turl\tcf\tqf\tweight");
    assert!(lines[1].starts_with("a\tx\t4\t2\t"));
    assert!(lines[4].starts_with("c\ty\t1\t2\t"));
}

#[test]
fn graph_from_index_respects_cutoff() {
    use crate::logstore::{ingest_str, Day, FilterParams};
    let log = "1\tq1\t2006-03-01 10:00:00\t1\tu1\n\
               2\tq2\t2006-03-01 11:00:00\t1\tu1\n\
               3\tq2\t2006-03-02 11:00:00\t1\tu2\n\
               4\tq3\t2006-03-03 11:00:00\t1\tu2\n";
    let params = FilterParams {
        min_qf: 1,
        min_click: 1,
        ..FilterParams::default()
    };
    let idx = ingest_str(log, params).unwrap();
    let all: ClickGraph<f64> = build_graph(&idx).unwrap();
    assert_eq!(all.num_queries(), 3);
    assert_eq!(all.edges().len(), 4);
    let early: ClickGraph<f64> = build_graph_until(&idx, Some(Day::from_ymd(2006, 3, 1).unwrap())).unwrap();
    assert_eq!(early.num_queries(), 2);
    assert_eq!(early.edges().len(), 2);
}

fn arb_graph() -> impl Strategy<Value = (Vec<String>, Clicks)> {
    (2usize..20, 1usize..15).prop_flat_map(|(nq, nu)| {
        let edge = (0..nq, 0..nu, 1u64..20);
        (Just(nq), prop::collection::vec(edge, 1..40)).prop_map(|(nq, es)| {
            let queries: Vec<String> = (0..nq).map(|i| format!("q{i}")).collect();
            let clicks = es.into_iter().map(|(q, u, c)| (format!("q{q}"), format!("u{u}"), c)).collect();
            (queries, clicks)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rwr_agrees_with_dense_power_iteration((queries, clicks) in arb_graph(), src in 0usize..20) {
        let g: ClickGraph<f64> = ClickGraph::from_clicks(queries.clone(), &clicks).unwrap();
        let source = &queries[src % queries.len()];
        let r = rwr(&g, source, &RwrParams::default()).unwrap();
        let total: f64 = r.node_scores.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        let oracle = dense_oracle(&queries, &clicks, source, 0.15);
        for q in &queries {
            let got = r.node_scores[g.query_node(q).unwrap()];
            prop_assert!((got - oracle[q]).abs() < 1e-8);
        }
    }

    #[test]
    fn uniform_cf_scaling_leaves_scores_unchanged((queries, clicks) in arb_graph(), factor in 2u64..9) {
        // the clamp floor does not scale, so only unclamped graphs qualify
        let mut per_url: HashMap<&str, std::collections::HashSet<&str>> = HashMap::new();
        for (q, u, _) in &clicks {
            per_url.entry(u.as_str()).or_default().insert(q.as_str());
        }
        prop_assume!(per_url.values().all(|qs| qs.len() + 1 < queries.len()));
        let g: ClickGraph<f64> = ClickGraph::from_clicks(queries.clone(), &clicks).unwrap();
        let scaled: Clicks = clicks.iter().map(|(q, u, c)| (q.clone(), u.clone(), c * factor)).collect();
        let h: ClickGraph<f64> = ClickGraph::from_clicks(queries.clone(), &scaled).unwrap();
        let a = rwr(&g, &queries[0], &RwrParams::default()).unwrap();
        let b = rwr(&h, &queries[0], &RwrParams::default()).unwrap();
        for (x, y) in a.node_scores.iter().zip(&b.node_scores) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}
