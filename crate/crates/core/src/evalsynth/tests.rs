use proptest::prelude::*;

use super::*;
use crate::eventclf::{EventTime, EventType};
use crate::logstore::{ingest_str, series_for, Day, DaySpan, EntityAliasTable, FilterParams};
use crate::signals::seasonality;

fn day(m: u32, d: u32) -> Day {
    Day::from_ymd(2006, m, d).unwrap()
}

#[test]
fn ndcg_hand_values() {
    assert_eq!(ndcg_at_k(&[3, 3, 2, 1, 0], 3), 1.0);
    let v = ndcg_at_k(&[2, 3], 2);
    let dcg = 3.0 + 7.0 / 3f64.log2();
    let idcg = 7.0 + 3.0 / 3f64.log2();
    assert!((dcg - 7.4165).abs() < 1e-4 && (idcg - 8.8928).abs() < 1e-4);
    assert!((v - dcg / idcg).abs() < 1e-12);
    assert!((v - 0.8340).abs() < 1e-4);
    assert_eq!(ndcg_at_k(&[1, 1, 0], 3), 0.0);
    assert_eq!(ndcg_at_k(&[], 3), 0.0);
}

#[test]
fn recall_hand_values() {
    assert_eq!(recall_at_k(&[3, 2, 1, 1], 3), 1.0);
    assert_eq!(recall_at_k(&[3, 1, 1, 2, 2, 3], 3), 0.25);
    assert_eq!(recall_at_k(&[2, 1, 3, 1, 2, 3], 3), 0.5);
    assert_eq!(recall_at_k(&[1, 0, 1], 3), 0.0);
}

#[test]
fn rolling_cv_on_single_entity_bins() {
    let ents: Vec<(String, Day)> = (1..=10).map(|i| (format!("e{i}"), day(3, i))).collect();
    let folds = rolling_cv(&ents, 10, 4).unwrap();
    assert_eq!(folds.len(), 4);
    assert!(folds.iter().all(|f| f.test.len() == 1));
    let last = folds.last().unwrap();
    assert_eq!(last.test, vec!["e10".to_string()]);
    assert_eq!(last.train.len(), 9);
    assert_eq!(folds[0].test_bin, 6);
    assert!(rolling_cv(&ents[..9], 10, 4).is_err());
    assert!(rolling_cv(&ents, 10, 10).is_err());
}

#[test]
fn equal_days_share_a_bin() {
    let mut ents: Vec<(String, Day)> = (1..=20).map(|i| (format!("e{i:02}"), day(3, 1 + i / 4))).collect();
    ents.reverse();
    let bins = chronological_bins(&ents, 5).unwrap();
    let day_of = |n: &str| ents.iter().find(|e| e.0 == n).unwrap().1;
    for w in bins.windows(2) {
        if let (Some(a), Some(b)) = (w[0].last(), w[1].first()) {
            assert!(day_of(a) < day_of(b));
        }
    }
    assert_eq!(bins.iter().map(Vec::len).sum::<usize>(), 20);
}

#[test]
fn averaged_metric_is_mean_of_trials() {
    let ents: Vec<(String, Day)> = (0..20).map(|i| (format!("e{i:02}"), day(4, 1 + i))).collect();
    let folds = rolling_cv(&ents, 10, 4).unwrap();
    // toy metric: share of test entities with an even index
    let per: Vec<f64> = folds
        .iter()
        .map(|f| {
            let even = f.test.iter().filter(|n| n[1..].parse::<u32>().unwrap() % 2 == 0).count();
            even as f64 / f.test.len() as f64
        })
        .collect();
    assert_eq!(per, vec![0.5; 4]);
    assert_eq!(crate::scalar::mean(&per), 0.5);
}

#[test]
fn month_split_boundaries() {
    let ents = vec![
        ("a".to_string(), day(3, 15)),
        ("b".to_string(), day(4, 30)),
        ("c".to_string(), day(5, 1)),
        ("d".to_string(), day(5, 31)),
    ];
    let (train, test) = split_train_test_by_month(&ents).unwrap();
    assert_eq!(train, vec!["a", "b"]);
    assert_eq!(test, vec!["c", "d"]);
    assert_eq!(train.len() + test.len(), ents.len());
    assert!(split_train_test_by_month(&ents[2..]).is_err());
}

#[test]
fn paired_t_test_known_value() {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [0.0; 5];
    let p = paired_t_test(&a, &b).unwrap();
    assert!((p - 0.013236).abs() < 1e-5, "{p}");
    assert_eq!(paired_t_test(&a, &a), Some(1.0));
    assert_eq!(paired_t_test(&a[..1], &b[..1]), None);
}

#[test]
fn report_deltas_against_baseline() {
    let methods = vec![
        MethodEval {
            method: "RWR".into(),
            queries: vec![[0.5, 0.5, 0.5, 0.5], [0.3, 0.5, 0.5, 0.5]],
        },
        MethodEval {
            method: "Ensemble".into(),
            queries: vec![[0.8, 0.5, 1.0, 0.5], [0.6, 0.5, 1.0, 0.5]],
        },
    ];
    let r = build_report(&methods, "RWR").unwrap();
    let e = r.row("Ensemble").unwrap();
    assert!((e.delta_pct[0].unwrap() - 75.0).abs() < 1e-9);
    assert_eq!(e.delta_pct[1], Some(0.0));
    assert_eq!(r.row("RWR").unwrap().delta_pct[0], None);
    let text = r.to_text();
    assert!(text.starts_with("Method"));
    assert!(text.contains("+75.00%"));
    assert_eq!(r.to_csv().lines().count(), 1 + 2 * 4);
    assert!(build_report(&methods, "MLE").is_err());
}

#[test]
fn label_and_event_files_roundtrip() {
    let mut l = GradedLabelSet::new();
    l.insert("e1", "derby results", [1, 3, 3]).unwrap();
    l.insert("e1", "derby tickets", [3, 2, 1]).unwrap();
    assert!(l.insert("e1", "x", [4, 0, 0]).is_err());
    let back = GradedLabelSet::from_csv(&l.to_csv(), "mem").unwrap();
    assert_eq!(back, l);
    assert_eq!(back.grade("e1", "derby results", EventTime::During), 3);
    assert_eq!(back.grade("e1", "unknown", EventTime::During), 0);
    let ev = vec![EventRecord {
        entity: "e1".into(),
        kind: EventType::Anticipated,
        day: day(5, 6),
    }];
    assert_eq!(events_from_csv(&events_to_csv(&ev), "mem").unwrap(), ev);
    assert_eq!(ev[0].studied_day(EventTime::Before), day(5, 1));
    assert_eq!(ev[0].studied_day(EventTime::After), day(5, 11));
}

fn small_spec() -> SynthSpec {
    SynthSpec {
        breaking: 6,
        anticipated: 6,
        ..SynthSpec::default()
    }
}

#[test]
fn generator_is_deterministic() {
    let a = generate(&small_spec()).unwrap();
    let b = generate(&small_spec()).unwrap();
    assert_eq!(a, b);
    let c = generate(&SynthSpec {
        seed: 7,
        ..small_spec()
    })
    .unwrap();
    assert_ne!(a.log_tsv, c.log_tsv);
}

#[test]
fn generator_rejects_inconsistent_specs() {
    let bad = SynthSpec {
        event_offsets: vec![91; 12],
        ..small_spec()
    };
    assert!(generate(&bad).is_err());
    let short = SynthSpec {
        days: 20,
        ..small_spec()
    };
    assert!(generate(&short).is_err());
}

#[test]
fn generated_world_has_planted_structure() {
    let spec = small_spec();
    let out = generate(&spec).unwrap();
    let idx = ingest_str(&out.log_tsv, FilterParams::default()).unwrap();
    let aliases = EntityAliasTable::from_json(&out.aliases_json).unwrap();
    let span = DaySpan::new(spec.start, spec.start.offset(spec.days as i64 - 1)).unwrap();
    let mut season = [vec![], vec![]];
    for ev in &out.events {
        assert!(span.contains(ev.studied_day(EventTime::Before)));
        assert!(span.contains(ev.studied_day(EventTime::After)));
        let alias = aliases.primary(&ev.entity).unwrap().to_string();
        let vol: crate::logstore::TimeSeries<f64> = series_for(&idx, &aliases, &ev.entity, span).unwrap();
        season[ev.kind.index()].push(seasonality(vol.values(), 7).unwrap());
        if ev.kind == EventType::Anticipated {
            // tickets is the planted before-only aspect
            let q = idx.query_id(&format!("{alias} tickets")).unwrap();
            let before = idx.count_between(q, spec.start, ev.day.offset(-1)) as f64;
            assert!(before / idx.total(q) as f64 > 0.8, "{}", ev.entity);
        }
        assert_eq!(out.labels.grade(&ev.entity, &format!("{alias} biography"), EventTime::Before), if ev.kind == EventType::Breaking { 3 } else { 0 });
    }
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&season[1]) > mean(&season[0]), "{season:?}");
    assert!(out.corpus_jsonl.lines().count() >= 12);
    let emb = crate::aspects::EmbeddingTable::<f64>::parse(&out.embeddings_txt).unwrap();
    assert_eq!(emb.dim(), 16);
}

proptest! {
    #[test]
    fn ideal_ordering_scores_one(mut g in prop::collection::vec(0u8..4, 1..30)) {
        g.sort_unstable_by(|a, b| gain(*b).total_cmp(&gain(*a)));
        let any = g.iter().any(|&x| x >= 2);
        for k in [1, 3, 10] {
            prop_assert_eq!(ndcg_at_k(&g, k), if any { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn metrics_are_bounded_and_recall_monotone(g in prop::collection::vec(0u8..4, 1..30)) {
        let mut prev = 0.0;
        for k in 1..=g.len() {
            let n = ndcg_at_k(&g, k);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&n));
            let r = recall_at_k(&g, k);
            prop_assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn rolling_cv_never_leaks(days in prop::collection::vec(0i64..60, 10..50)) {
        let ents: Vec<(String, Day)> = days.iter().enumerate().map(|(i, &d)| (format!("e{i}"), day(3, 1).offset(d))).collect();
        let day_of = |n: &String| ents.iter().find(|e| &e.0 == n).unwrap().1;
        for f in rolling_cv(&ents, 10, 4).unwrap() {
            if let (Some(tr), Some(te)) = (f.train.iter().map(day_of).max(), f.test.iter().map(day_of).min()) {
                prop_assert!(tr < te);
            }
        }
    }
}
