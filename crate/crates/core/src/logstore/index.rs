use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::day::{format_timestamp, Day, DaySpan};
use crate::error::{Error, Result};
use crate::text::{ascii_ratio, contains_phrase};

pub const INDEX_VERSION: u32 = 1;

/// One issued query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryRecord {
    pub user_id: String,
    /// Normalized query string.
    pub terms: String,
    /// UTC unix seconds.
    pub time: i64,
}

/// A click attached to a query submission.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClickRecord {
    pub query: String,
    pub url: String,
    /// 1-based result position.
    pub rank: u32,
    pub time: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Click {
    pub url: u32,
    pub rank: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LogEvent {
    pub time: i64,
    pub query: u32,
    pub user: u32,
    pub click: Option<Click>,
}

impl LogEvent {
    pub fn day(&self) -> Day {
        Day::of_timestamp(self.time)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterParams {
    pub min_qf: u64,
    pub max_qf: u64,
    pub min_click: u64,
    pub english_only: bool,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            min_qf: 5,
            max_qf: 15_000,
            min_click: 3,
            english_only: true,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_qf > self.max_qf {
            return Err(Error::param(format!(
                "min_qf ({}) must not exceed max_qf ({})",
                self.min_qf, self.max_qf
            )));
        }
        Ok(())
    }

    /// Minimum share of ASCII letters, digits and spaces for a query to count as English.
    pub const ENGLISH_ASCII_RATIO: f64 = 0.9;
}

/// Per-(query, url) click statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ClickPair {
    pub query: u32,
    pub url: u32,
    pub daily: Vec<(Day, u64)>,
    pub total: u64,
}

#[derive(Serialize, Deserialize)]
struct StoredIndex {
    version: u32,
    params: FilterParams,
    span: Option<DaySpan>,
    users: Vec<String>,
    queries: Vec<String>,
    urls: Vec<String>,
    events: Vec<LogEvent>,
    rejects: Vec<Reject>,
}

/// Filtered, immutable view of a query log.
#[derive(Clone, Debug)]
pub struct LogIndex {
    params: FilterParams,
    span: Option<DaySpan>,
    users: Vec<String>,
    queries: Vec<String>,
    urls: Vec<String>,
    events: Vec<LogEvent>,
    rejects: Vec<Reject>,
    query_ids: HashMap<String, u32>,
    url_ids: HashMap<String, u32>,
    daily: Vec<Vec<(Day, u64)>>,
    totals: Vec<u64>,
    pairs: Vec<ClickPair>,
    query_pairs: Vec<Vec<usize>>,
}

impl PartialEq for LogIndex {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.span == other.span
            && self.users == other.users
            && self.queries == other.queries
            && self.urls == other.urls
            && self.events == other.events
    }
}

pub(crate) fn sum_days(daily: &[(Day, u64)], from: Day, to: Day) -> u64 {
    if to < from {
        return 0;
    }
    let lo = daily.partition_point(|(d, _)| *d < from);
    let hi = daily.partition_point(|(d, _)| *d <= to);
    daily[lo..hi].iter().map(|(_, c)| c).sum()
}

impl LogIndex {
    /// Builds an index from parsed records, applying the frequency filters.
    /// `rejects` are carried through unchanged.
    pub fn from_records(
        records: Vec<(QueryRecord, Option<ClickRecord>)>,
        params: FilterParams,
        rejects: Vec<Reject>,
    ) -> Result<Self> {
        params.validate()?;
        let records: Vec<_> = records
            .into_iter()
            .filter(|(q, _)| {
                !params.english_only || ascii_ratio(&q.terms) >= FilterParams::ENGLISH_ASCII_RATIO
            })
            .collect();

        let mut qf: HashMap<&str, u64> = HashMap::new();
        for (q, _) in &records {
            *qf.entry(q.terms.as_str()).or_default() += 1;
        }
        let keep_query = |terms: &str| {
            let f = qf.get(terms).copied().unwrap_or(0);
            f >= params.min_qf && f <= params.max_qf
        };

        let mut pair_counts: HashMap<(&str, &str), u64> = HashMap::new();
        for (q, c) in &records {
            if let Some(c) = c {
                if keep_query(&q.terms) {
                    *pair_counts.entry((q.terms.as_str(), c.url.as_str())).or_default() += 1;
                }
            }
        }
        let keep_pair = |q: &str, u: &str| {
            pair_counts.get(&(q, u)).copied().unwrap_or(0) >= params.min_click
        };

        let mut users = BTreeSet::new();
        let mut queries = BTreeSet::new();
        let mut urls = BTreeSet::new();
        let mut kept = Vec::new();
        for (q, c) in &records {
            if !keep_query(&q.terms) {
                continue;
            }
            let click = c.as_ref().filter(|c| keep_pair(&q.terms, &c.url));
            users.insert(q.user_id.as_str());
            queries.insert(q.terms.as_str());
            if let Some(c) = click {
                urls.insert(c.url.as_str());
            }
            kept.push((q, click));
        }
        let users: Vec<String> = users.into_iter().map(String::from).collect();
        let queries: Vec<String> = queries.into_iter().map(String::from).collect();
        let urls: Vec<String> = urls.into_iter().map(String::from).collect();
        let uid: HashMap<&str, u32> = users.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();
        let qid: HashMap<&str, u32> = queries.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();
        let lid: HashMap<&str, u32> = urls.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();

        let mut events: Vec<LogEvent> = kept
            .into_iter()
            .map(|(q, c)| LogEvent {
                time: q.time,
                query: qid[q.terms.as_str()],
                user: uid[q.user_id.as_str()],
                click: c.map(|c| Click {
                    url: lid[c.url.as_str()],
                    rank: c.rank,
                }),
            })
            .collect();
        events.sort();
        let span = match (events.first(), events.last()) {
            (Some(a), Some(b)) => Some(DaySpan {
                first: a.day(),
                last: b.day(),
            }),
            _ => None,
        };
        Ok(Self::assemble(StoredIndex {
            version: INDEX_VERSION,
            params,
            span,
            users,
            queries,
            urls,
            events,
            rejects,
        }))
    }

    fn assemble(stored: StoredIndex) -> Self {
        let nq = stored.queries.len();
        let mut daily_maps: Vec<BTreeMap<Day, u64>> = vec![BTreeMap::new(); nq];
        let mut pair_maps: BTreeMap<(u32, u32), BTreeMap<Day, u64>> = BTreeMap::new();
        for ev in &stored.events {
            let day = ev.day();
            *daily_maps[ev.query as usize].entry(day).or_default() += 1;
            if let Some(c) = ev.click {
                *pair_maps.entry((ev.query, c.url)).or_default().entry(day).or_default() += 1;
            }
        }
        let daily: Vec<Vec<(Day, u64)>> = daily_maps.into_iter().map(|m| m.into_iter().collect()).collect();
        let totals = daily.iter().map(|d| d.iter().map(|(_, c)| c).sum()).collect();
        let mut query_pairs = vec![Vec::new(); nq];
        let pairs: Vec<ClickPair> = pair_maps
            .into_iter()
            .enumerate()
            .map(|(i, ((q, u), m))| {
                query_pairs[q as usize].push(i);
                let daily: Vec<(Day, u64)> = m.into_iter().collect();
                let total = daily.iter().map(|(_, c)| c).sum();
                ClickPair {
                    query: q,
                    url: u,
                    daily,
                    total,
                }
            })
            .collect();
        LogIndex {
            query_ids: stored.queries.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect(),
            url_ids: stored.urls.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect(),
            params: stored.params,
            span: stored.span,
            users: stored.users,
            queries: stored.queries,
            urls: stored.urls,
            events: stored.events,
            rejects: stored.rejects,
            daily,
            totals,
            pairs,
            query_pairs,
        }
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    /// Log span; `None` for an empty log.
    pub fn span(&self) -> Option<DaySpan> {
        self.span
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn rejects(&self) -> &[Reject] {
        &self.rejects
    }

    pub fn events(&self) -> &[LogEvent] {
        &self.events
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn queries(&self) -> &[String] {
        &self.queries
    }

    pub fn query_text(&self, id: u32) -> &str {
        &self.queries[id as usize]
    }

    pub fn query_id(&self, terms: &str) -> Option<u32> {
        self.query_ids.get(terms).copied()
    }

    pub fn urls(&self) -> &[String] {
        &self.urls
    }

    pub fn url_text(&self, id: u32) -> &str {
        &self.urls[id as usize]
    }

    pub fn url_id(&self, url: &str) -> Option<u32> {
        self.url_ids.get(url).copied()
    }

    /// Total frequency of a query over the whole log.
    pub fn total(&self, query: u32) -> u64 {
        self.totals[query as usize]
    }

    /// Sparse `(day, count)` list, sorted by day.
    pub fn daily(&self, query: u32) -> &[(Day, u64)] {
        &self.daily[query as usize]
    }

    /// Frequency of a query on days `from..=to`.
    pub fn count_between(&self, query: u32, from: Day, to: Day) -> u64 {
        sum_days(&self.daily[query as usize], from, to)
    }

    /// Dense daily counts of a query over `span`.
    pub fn daily_counts(&self, query: u32, span: DaySpan) -> Vec<u64> {
        let mut out = vec![0u64; span.len()];
        for &(d, c) in &self.daily[query as usize] {
            if span.contains(d) {
                out[d.since(span.first) as usize] += c;
            }
        }
        out
    }

    pub fn click_pairs(&self) -> &[ClickPair] {
        &self.pairs
    }

    pub fn pairs_for_query(&self, query: u32) -> impl Iterator<Item = &ClickPair> {
        self.query_pairs[query as usize].iter().map(move |&i| &self.pairs[i])
    }

    /// Clicks of `query` on `day`, as `(url, count)` sorted by url id.
    pub fn clicks_on_day(&self, query: u32, day: Day) -> Vec<(u32, u64)> {
        self.pairs_for_query(query)
            .map(|p| (p.url, sum_days(&p.daily, day, day)))
            .filter(|(_, c)| *c > 0)
            .collect()
    }

    /// Query ids whose terms contain any of `phrases` at word boundaries.
    pub fn queries_matching(&self, phrases: &[String]) -> Vec<u32> {
        self.queries
            .iter()
            .enumerate()
            .filter(|(_, q)| phrases.iter().any(|p| contains_phrase(q, p)))
            .map(|(i, _)| i as u32)
            .collect()
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut w, &self.stored())?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.stored()).expect("index serializes")
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let stored: StoredIndex = serde_json::from_str(raw)?;
        if stored.version != INDEX_VERSION {
            return Err(Error::Version {
                expected: INDEX_VERSION,
                found: stored.version,
            });
        }
        Ok(Self::assemble(stored))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&raw)
    }

    fn stored(&self) -> StoredIndex {
        StoredIndex {
            version: INDEX_VERSION,
            params: self.params,
            span: self.span,
            users: self.users.clone(),
            queries: self.queries.clone(),
            urls: self.urls.clone(),
            events: self.events.clone(),
            rejects: self.rejects.clone(),
        }
    }

    /// Re-serializes the retained events as a 5-column TSV log with header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("AnonID\tQuery\tQueryTime\tItemRank\tClickURL\n");
        for ev in &self.events {
            let user = &self.users[ev.user as usize];
            let q = &self.queries[ev.query as usize];
            let t = format_timestamp(ev.time);
            match ev.click {
                Some(c) => out.push_str(&format!("{user}\t{q}\t{t}\t{}\t{}\n", c.rank, self.urls[c.url as usize])),
                None => out.push_str(&format!("{user}\t{q}\t{t}\t\t\n")),
            }
        }
        out
    }
}
