use std::collections::HashMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::logstore::{Day, LogIndex};
use crate::scalar::Scalar;

/// Floor applied to CF-IQF weights that would otherwise be zero or negative.
pub const MIN_EDGE_WEIGHT: f64 = 1e-9;

/// Click frequency times inverse query frequency: `cf * ln(n / (qf + 1))`.
///
/// `qf` is the number of distinct queries that clicked the url and `n` the
/// number of distinct queries overall. Weights that come out non-positive
/// (`n <= qf + 1`) are clamped to [`MIN_EDGE_WEIGHT`].
pub fn cf_iqf<T: Scalar>(cf: u64, qf: u64, n: u64) -> Result<T> {
    if cf == 0 {
        return Err(Error::param("cf-iqf needs cf >= 1"));
    }
    if qf == 0 {
        return Err(Error::param("cf-iqf needs qf >= 1"));
    }
    let cf_s = T::from_u64(cf).unwrap();
    let ratio = T::from_u64(n).unwrap() / T::from_u64(qf + 1).unwrap();
    let w = cf_s * ratio.ln();
    if w > T::zero() && w.is_finite() {
        Ok(w)
    } else {
        log::warn!("cf-iqf clamped: cf={cf} qf={qf} n={n}");
        Ok(T::lit(MIN_EDGE_WEIGHT))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClickEdge<T> {
    pub query: usize,
    pub url: usize,
    pub cf: u64,
    pub qf: u64,
    pub weight: T,
}

/// Bipartite query/url graph with CF-IQF edge weights and row-normalized
/// transition probabilities in both directions.
#[derive(Clone, Debug)]
pub struct ClickGraph<T> {
    queries: Vec<String>,
    urls: Vec<String>,
    query_ids: HashMap<String, usize>,
    edges: Vec<ClickEdge<T>>,
    query_out: Vec<Vec<(usize, T)>>,
    url_out: Vec<Vec<(usize, T)>>,
    distinct_queries: u64,
}

impl<T: Scalar> ClickGraph<T> {
    /// Builds a graph from explicit `(query, url, cf)` triples. Every query in
    /// `queries` becomes a node even without clicks; `qf` and `n` are derived
    /// from the triples and the query list.
    pub fn from_clicks(queries: Vec<String>, clicks: &[(String, String, u64)]) -> Result<Self> {
        let mut query_ids: HashMap<String, usize> = HashMap::new();
        let mut qlist = Vec::new();
        for q in queries.into_iter().chain(clicks.iter().map(|(q, _, _)| q.clone())) {
            if !query_ids.contains_key(&q) {
                query_ids.insert(q.clone(), qlist.len());
                qlist.push(q);
            }
        }
        let mut url_ids: HashMap<&str, usize> = HashMap::new();
        let mut ulist: Vec<String> = Vec::new();
        let mut merged: HashMap<(usize, usize), u64> = HashMap::new();
        for (q, u, cf) in clicks {
            if *cf == 0 {
                continue;
            }
            let ui = *url_ids.entry(u.as_str()).or_insert_with(|| {
                ulist.push(u.clone());
                ulist.len() - 1
            });
            *merged.entry((query_ids[q], ui)).or_default() += cf;
        }
        let mut triples: Vec<(usize, usize, u64)> = merged.into_iter().map(|((q, u), c)| (q, u, c)).collect();
        triples.sort_unstable();
        let n = qlist.len() as u64;
        Self::assemble(qlist, query_ids, ulist, triples, n)
    }

    fn assemble(
        queries: Vec<String>,
        query_ids: HashMap<String, usize>,
        urls: Vec<String>,
        triples: Vec<(usize, usize, u64)>,
        n: u64,
    ) -> Result<Self> {
        if triples.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut qf = vec![0u64; urls.len()];
        for &(_, u, _) in &triples {
            qf[u] += 1;
        }
        let mut edges = Vec::with_capacity(triples.len());
        for (q, u, cf) in triples {
            edges.push(ClickEdge {
                query: q,
                url: u,
                cf,
                qf: qf[u],
                weight: cf_iqf(cf, qf[u], n)?,
            });
        }
        let mut query_out: Vec<Vec<(usize, T)>> = vec![Vec::new(); queries.len()];
        let mut url_out: Vec<Vec<(usize, T)>> = vec![Vec::new(); urls.len()];
        for e in &edges {
            query_out[e.query].push((e.url, e.weight));
            url_out[e.url].push((e.query, e.weight));
        }
        for row in query_out.iter_mut().chain(url_out.iter_mut()) {
            let total: T = row.iter().map(|(_, w)| *w).sum();
            for (_, w) in row.iter_mut() {
                *w = *w / total;
            }
        }
        Ok(ClickGraph {
            queries,
            urls,
            query_ids,
            edges,
            query_out,
            url_out,
            distinct_queries: n,
        })
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn num_urls(&self) -> usize {
        self.urls.len()
    }

    /// Total node count (queries first, then urls).
    pub fn num_nodes(&self) -> usize {
        self.queries.len() + self.urls.len()
    }

    pub fn queries(&self) -> &[String] {
        &self.queries
    }

    pub fn urls(&self) -> &[String] {
        &self.urls
    }

    pub fn query_node(&self, query: &str) -> Option<usize> {
        self.query_ids.get(query).copied()
    }

    pub fn edges(&self) -> &[ClickEdge<T>] {
        &self.edges
    }

    pub fn distinct_queries(&self) -> u64 {
        self.distinct_queries
    }

    /// Outgoing `(url, probability)` transitions of a query node.
    pub fn query_transitions(&self, query: usize) -> &[(usize, T)] {
        &self.query_out[query]
    }

    /// Outgoing `(query, probability)` transitions of a url node.
    pub fn url_transitions(&self, url: usize) -> &[(usize, T)] {
        &self.url_out[url]
    }

    /// Outgoing transitions of a node in combined numbering (urls offset by
    /// `num_queries`), as combined node ids.
    pub fn transitions(&self, node: usize) -> Vec<(usize, T)> {
        let nq = self.queries.len();
        if node < nq {
            self.query_out[node].iter().map(|&(u, p)| (nq + u, p)).collect()
        } else {
            self.url_out[node - nq].clone()
        }
    }

    /// Edge list as TSV `query, url, cf, qf, weight`, sorted by query then url.
    pub fn to_edge_tsv(&self) -> String {
        let mut rows: Vec<&ClickEdge<T>> = self.edges.iter().collect();
        rows.sort_by(|a, b| {
            (&self.queries[a.query], &self.urls[a.url]).cmp(&(&self.queries[b.query], &self.urls[b.url]))
        });
        let mut out = String::from("query\turl\tcf\tqf\tweight\n");
        for e in rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.12}",
                self.queries[e.query],
                self.urls[e.url],
                e.cf,
                e.qf,
                e.weight.as_f64()
            );
        }
        out
    }
}

/// Click graph over the whole log.
pub fn build_graph<T: Scalar>(index: &LogIndex) -> Result<ClickGraph<T>> {
    build_graph_until(index, None)
}

/// Click graph from clicks on or before `until` (the whole log when `None`).
/// Query nodes are all queries issued in that period.
pub fn build_graph_until<T: Scalar>(index: &LogIndex, until: Option<Day>) -> Result<ClickGraph<T>> {
    let span = index.span().ok_or(Error::EmptyGraph)?;
    let last = until.unwrap_or(span.last);
    let mut node_of = vec![usize::MAX; index.num_queries()];
    let mut queries = Vec::new();
    let mut query_ids = HashMap::new();
    for q in 0..index.num_queries() as u32 {
        if index.count_between(q, span.first, last) > 0 {
            node_of[q as usize] = queries.len();
            query_ids.insert(index.query_text(q).to_string(), queries.len());
            queries.push(index.query_text(q).to_string());
        }
    }
    let mut url_node = vec![usize::MAX; index.urls().len()];
    let mut urls = Vec::new();
    let mut triples = Vec::new();
    for pair in index.click_pairs() {
        let cf = crate::logstore::sum_days(&pair.daily, span.first, last);
        if cf == 0 {
            continue;
        }
        let u = &mut url_node[pair.url as usize];
        if *u == usize::MAX {
            *u = urls.len();
            urls.push(index.url_text(pair.url).to_string());
        }
        triples.push((node_of[pair.query as usize], *u, cf));
    }
    triples.sort_unstable();
    let n = queries.len() as u64;
    ClickGraph::assemble(queries, query_ids, urls, triples, n)
}
