use std::io::{BufRead, BufReader};
use std::path::Path;

use super::day::parse_timestamp;
use super::index::{ClickRecord, FilterParams, LogIndex, QueryRecord, Reject};
use crate::error::{Error, Result};
use crate::text::normalize_query;

/// Reads a 5-column TSV query log (`AnonID, Query, QueryTime, ItemRank,
/// ClickURL`) and builds a filtered index. Malformed lines are skipped and
/// listed in [`LogIndex::rejects`].
pub fn ingest(path: impl AsRef<Path>, params: FilterParams) -> Result<LogIndex> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(file), params).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn ingest_str(log: &str, params: FilterParams) -> Result<LogIndex> {
    ingest_reader(log.as_bytes(), params)
}

pub fn ingest_reader<R: BufRead>(reader: R, params: FilterParams) -> Result<LogIndex> {
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<log>", e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || (line_no == 1 && line.starts_with("AnonID")) {
            continue;
        }
        match parse_line(line) {
            Ok(rec) => records.push(rec),
            Err(reason) => rejects.push(Reject { line: line_no, reason }),
        }
    }
    LogIndex::from_records(records, params, rejects)
}

fn parse_line(line: &str) -> std::result::Result<(QueryRecord, Option<ClickRecord>), String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() < 3 || cols.len() > 5 {
        return Err(format!("expected 3 to 5 tab-separated columns, found {}", cols.len()));
    }
    let user_id = cols[0].trim().to_string();
    let terms = normalize_query(cols[1]);
    if terms.is_empty() {
        return Err("empty query".into());
    }
    let time = parse_timestamp(cols[2]).ok_or_else(|| format!("unparseable timestamp `{}`", cols[2]))?;
    let rank = cols.get(3).map(|s| s.trim()).unwrap_or("");
    let url = cols.get(4).map(|s| s.trim()).unwrap_or("");
    let click = match (rank.is_empty(), url.is_empty()) {
        (true, true) => None,
        (false, false) => {
            let rank: u32 = rank.parse().map_err(|_| format!("bad ItemRank `{rank}`"))?;
            if rank == 0 {
                return Err("ItemRank must be >= 1".into());
            }
            Some(ClickRecord {
                query: terms.clone(),
                url: url.to_string(),
                rank,
                time,
            })
        }
        _ => return Err("ItemRank and ClickURL must both be present or both empty".into()),
    };
    Ok((QueryRecord { user_id, terms, time }, click))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loose() -> FilterParams {
        FilterParams {
            min_qf: 1,
            max_qf: u64::MAX,
            min_click: 1,
            english_only: true,
        }
    }

    #[test]
    fn empty_log_gives_empty_index() {
        let idx = ingest_str("", FilterParams::default()).unwrap();
        assert!(idx.is_empty());
        assert_eq!(idx.span(), None);
        assert_eq!(idx.num_queries(), 0);
    }

    #[test]
    fn rare_queries_are_dropped() {
        let mut log = String::new();
        for i in 0..3 {
            log.push_str(&format!("u{i}\trare query\t2006-03-01 10:00:0{i}\t\t\n"));
        }
        for i in 0..5 {
            log.push_str(&format!("u{i}\tcommon query\t2006-03-01 11:00:0{i}\t\t\n"));
        }
        let idx = ingest_str(&log, FilterParams::default()).unwrap();
        assert!(idx.query_id("rare query").is_none());
        let q = idx.query_id("common query").unwrap();
        assert_eq!(idx.total(q), 5);
    }

    #[test]
    fn frequent_queries_are_dropped() {
        let mut log = String::new();
        for i in 0..6 {
            log.push_str(&format!("u\tgoogle\t2006-03-01 10:00:0{i}\t\t\n"));
        }
        let params = FilterParams {
            max_qf: 5,
            ..loose()
        };
        assert!(ingest_str(&log, params).unwrap().is_empty());
    }

    #[test]
    fn click_pair_threshold() {
        let log = "AnonID\tQuery\tQueryTime\tItemRank\tClickURL\n\
                   1\tKentucky Derby\t2006-05-01 08:00:00\t1\thttp://derby.com\n\
                   2\tkentucky derby\t2006-05-01 09:00:00\t1\thttp://derby.com\n\
                   3\tkentucky   derby\t2006-05-02 09:00:00\t2\thttp://derby.com\n";
        let params = FilterParams {
            min_qf: 1,
            min_click: 3,
            ..FilterParams::default()
        };
        let idx = ingest_str(log, params).unwrap();
        let q = idx.query_id("kentucky derby").unwrap();
        let pairs: Vec<_> = idx.pairs_for_query(q).collect();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].total, 3);

        let strict = FilterParams { min_click: 4, ..params };
        let idx = ingest_str(log, strict).unwrap();
        assert_eq!(idx.click_pairs().len(), 0);
        assert_eq!(idx.total(idx.query_id("kentucky derby").unwrap()), 3);
    }

    #[test]
    fn malformed_lines_are_reported() {
        let log = "1\tok query\t2006-03-01 10:00:00\t\t\n\
                   2\tbad time\tnot-a-time\t\t\n\
                   3\tonly two\n\
                   4\tbad rank\t2006-03-01 10:00:00\tx\thttp://a\n\
                   5\tok query\t2006-03-02 10:00:00\t\t\n";
        let idx = ingest_str(log, loose()).unwrap();
        let lines: Vec<usize> = idx.rejects().iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![2, 3, 4]);
        assert_eq!(idx.total(idx.query_id("ok query").unwrap()), 2);
        assert_eq!(idx.span().unwrap().len(), 2);
    }

    #[test]
    fn non_english_filter_is_flag_gated() {
        let log = "1\tчемпионат мира\t2006-03-01 10:00:00\t\t\n";
        assert!(ingest_str(log, loose()).unwrap().is_empty());
        let off = FilterParams {
            english_only: false,
            ..loose()
        };
        assert_eq!(ingest_str(log, off).unwrap().num_queries(), 1);
    }
}
