use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const STAGES: [&str; 10] = [
    "ingest", "graph", "aspects", "signals", "classify", "features", "train", "rank", "evaluate", "report",
];

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_aspect-rank"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    let o = run(&[
        "synth",
        "--data-dir",
        data.to_str().unwrap(),
        "--breaking",
        "16",
        "--anticipated",
        "16",
    ]);
    assert!(o.status.success(), "synth failed: {}", stderr(&o));
    data.join("config.json")
}

fn chain(config: &Path, out: &Path, extra: &[&str]) {
    for s in STAGES {
        let mut args = vec![s, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend(extra);
        let o = run(&args);
        assert!(o.status.success(), "{s} failed: {}", stderr(&o));
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let key = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(key, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn full_chain_is_reproducible_and_guards_its_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = synth(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    chain(&config, &a, &[]);
    chain(&config, &b, &[]);

    let report = std::fs::read_to_string(a.join("report.txt")).unwrap();
    for m in ["RWR", "SVM_all", "Ensemble", "breaking entities, before the event"] {
        assert!(report.contains(m), "report lacks {m}:\n{report}");
    }
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (k, v) in &sa {
        assert!(v == &sb[k], "{k} differs between identical runs");
    }
    assert!(sa.contains_key("manifests/rank.json"));

    // re-running one stage in place reproduces its outputs
    let o = run(&["train", "--config", config.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(a.join("models.json")).unwrap(), sb["models.json"]);

    // a parameter change upstream makes downstream artifacts stale
    let o = run(&[
        "rank",
        "--config",
        config.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
        "--set",
        "params.rank.c=5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("parameters changed since `train` ran"), "{}", stderr(&o));

    // so does editing an artifact by hand
    let features = a.join("features.csv");
    let mut body = std::fs::read_to_string(&features).unwrap();
    body.push('\n');
    std::fs::write(&features, body).unwrap();
    let o = run(&["rank", "--config", config.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("features.csv was modified after `features` ran"), "{}", stderr(&o));
}

#[test]
fn evaluate_without_rank_names_the_missing_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let config = synth(tmp.path());
    let out = tmp.path().join("out");
    let o = run(&["evaluate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("run `rank` first"), "{}", stderr(&o));
}

#[test]
fn out_of_range_parameter_cites_the_constraint() {
    let tmp = tempfile::tempdir().unwrap();
    let config = synth(tmp.path());
    let o = run(&["ingest", "--config", config.to_str().unwrap(), "--set", "params.rwr.restart=1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("restart"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = synth(tmp.path());
    let o = run(&["ingest", "--config", config.to_str().unwrap(), "--set", "params.rank.cost=5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown field"), "{}", stderr(&o));
}

#[test]
fn missing_input_path_is_a_user_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["ingest", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("paths.log is not set"), "{}", stderr(&o));
}
