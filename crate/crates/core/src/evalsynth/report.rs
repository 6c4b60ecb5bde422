use serde::{Deserialize, Serialize};

use super::metrics::METRICS;
use super::protocol::paired_t_test;
use crate::error::{Error, Result};

/// Per-query metric vectors of one method; queries align across methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodEval {
    pub method: String,
    pub queries: Vec<[f64; 4]>,
}

impl MethodEval {
    pub fn mean(&self) -> [f64; 4] {
        let n = self.queries.len().max(1) as f64;
        let mut m = [0.0; 4];
        for q in &self.queries {
            for (a, v) in m.iter_mut().zip(q) {
                *a += v;
            }
        }
        m.map(|v| v / n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub mean: [f64; 4],
    /// Relative change against the baseline, in percent.
    pub delta_pct: [Option<f64>; 4],
    pub p_value: [Option<f64>; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub baseline: String,
    pub queries: usize,
    pub rows: Vec<ReportRow>,
}

fn stars(p: Option<f64>) -> &'static str {
    match p {
        Some(p) if p < 0.01 => "***",
        Some(p) if p < 0.05 => "**",
        Some(p) if p < 0.1 => "*",
        _ => "",
    }
}

/// Method-by-metric table with deltas and paired t-tests against `baseline`.
pub fn build_report(methods: &[MethodEval], baseline: &str) -> Result<Report> {
    let base = methods
        .iter()
        .find(|m| m.method == baseline)
        .ok_or_else(|| Error::param(format!("baseline method {baseline:?} not evaluated")))?;
    let n = base.queries.len();
    if let Some(m) = methods.iter().find(|m| m.queries.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.queries.len(),
        });
    }
    let bmean = base.mean();
    let rows = methods
        .iter()
        .map(|m| {
            let mean = m.mean();
            let is_base = m.method == baseline;
            let delta_pct = std::array::from_fn(|k| {
                (!is_base && bmean[k] > 0.0).then(|| 100.0 * (mean[k] - bmean[k]) / bmean[k])
            });
            let p_value = std::array::from_fn(|k| {
                if is_base {
                    return None;
                }
                let a: Vec<f64> = m.queries.iter().map(|q| q[k]).collect();
                let b: Vec<f64> = base.queries.iter().map(|q| q[k]).collect();
                paired_t_test(&a, &b)
            });
            ReportRow {
                method: m.method.clone(),
                mean,
                delta_pct,
                p_value,
            }
        })
        .collect();
    Ok(Report {
        baseline: baseline.to_string(),
        queries: n,
        rows,
    })
}

impl Report {
    pub fn row(&self, method: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
        let mut out = format!("{:<width$}", "Method");
        for m in METRICS {
            out += &format!("  {:>22}", m);
        }
        out += "\n";
        for r in &self.rows {
            out += &format!("{:<width$}", r.method);
            for k in 0..4 {
                let cell = match r.delta_pct[k] {
                    Some(d) => format!("{:.4} ({:+.2}%){}", r.mean[k], d, stars(r.p_value[k])),
                    None => format!("{:.4}", r.mean[k]),
                };
                out += &format!("  {cell:>22}");
            }
            out += "\n";
        }
        out += &format!(
            "{} queries; deltas against {}; paired t-test * p<0.1, ** p<0.05, *** p<0.01\n",
            self.queries, self.baseline
        );
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["method", "metric", "mean", "delta_pct", "p_value"])
            .expect("in-memory write");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            for (k, m) in METRICS.iter().enumerate() {
                w.write_record([
                    r.method.clone(),
                    m.to_string(),
                    r.mean[k].to_string(),
                    opt(r.delta_pct[k]),
                    opt(r.p_value[k]),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }
}
