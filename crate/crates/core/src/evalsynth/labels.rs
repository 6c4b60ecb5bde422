use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eventclf::{EventTime, EventType};
use crate::logstore::Day;

/// Graded relevance of aspects per event period: 3 very relevant,
/// 2 relevant, 1 irrelevant, 0 unknown.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GradedLabelSet {
    grades: BTreeMap<(String, String), [u8; 3]>,
}

impl GradedLabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Grades for (before, during, after).
    pub fn insert(&mut self, entity: &str, aspect: &str, grades: [u8; 3]) -> Result<()> {
        if let Some(g) = grades.iter().find(|&&g| g > 3) {
            return Err(Error::param(format!("grade {g} outside 0..=3")));
        }
        self.grades.insert((entity.to_string(), aspect.to_string()), grades);
        Ok(())
    }

    /// 0 for unlabelled aspects.
    pub fn grade(&self, entity: &str, aspect: &str, period: EventTime) -> u8 {
        self.grades
            .get(&(entity.to_string(), aspect.to_string()))
            .map_or(0, |g| g[period.index()])
    }

    pub fn len(&self) -> usize {
        self.grades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grades.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, [u8; 3])> {
        self.grades.iter().map(|((e, a), g)| (e.as_str(), a.as_str(), *g))
    }

    pub fn aspects_of<'a>(&'a self, entity: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.grades
            .keys()
            .filter(move |(e, _)| e == entity)
            .map(|(_, a)| a.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["entity", "aspect", "before_grade", "during_grade", "after_grade"])
            .expect("in-memory write");
        for ((e, a), g) in &self.grades {
            let g: Vec<String> = g.iter().map(u8::to_string).collect();
            w.write_record([e.as_str(), a.as_str(), &g[0], &g[1], &g[2]])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }

    pub fn from_csv(raw: &str, origin: &str) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(raw.as_bytes());
        let mut out = Self::new();
        for (i, rec) in rd.records().enumerate() {
            let perr = |message: String| Error::Parse {
                path: origin.to_string(),
                line: i + 2,
                message,
            };
            let rec = rec.map_err(|e| perr(e.to_string()))?;
            if rec.len() != 5 {
                return Err(perr(format!("expected 5 columns, got {}", rec.len())));
            }
            let mut g = [0u8; 3];
            for (k, slot) in g.iter_mut().enumerate() {
                *slot = rec[2 + k].parse().map_err(|_| perr(format!("bad grade {:?}", &rec[2 + k])))?;
            }
            out.insert(&rec[0], &rec[1], g).map_err(|e| perr(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&raw, &path.display().to_string())
    }
}

/// Ground-truth event of an entity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventRecord {
    pub entity: String,
    pub kind: EventType,
    pub day: Day,
}

/// Days either side of the event day studied as "before" and "after".
pub const PERIOD_OFFSET_DAYS: i64 = 5;

impl EventRecord {
    /// The hitting day studied for `period`.
    pub fn studied_day(&self, period: EventTime) -> Day {
        match period {
            EventTime::Before => self.day.offset(-PERIOD_OFFSET_DAYS),
            EventTime::During => self.day,
            EventTime::After => self.day.offset(PERIOD_OFFSET_DAYS),
        }
    }
}

pub fn events_to_csv(events: &[EventRecord]) -> String {
    let mut out = String::from("entity,type,event_day\n");
    for e in events {
        out += &format!("{},{},{}\n", e.entity, e.kind, e.day);
    }
    out
}

pub fn events_from_csv(raw: &str, origin: &str) -> Result<Vec<EventRecord>> {
    let mut rd = csv::Reader::from_reader(raw.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let perr = |message: String| Error::Parse {
            path: origin.to_string(),
            line: i + 2,
            message,
        };
        let rec = rec.map_err(|e| perr(e.to_string()))?;
        if rec.len() != 3 {
            return Err(perr(format!("expected 3 columns, got {}", rec.len())));
        }
        out.push(EventRecord {
            entity: rec[0].to_string(),
            kind: rec[1].parse().map_err(|e: Error| perr(e.to_string()))?,
            day: rec[2].parse().map_err(|_| perr(format!("bad day {:?}", &rec[2])))?,
        });
    }
    Ok(out)
}

pub fn load_events(path: impl AsRef<Path>) -> Result<Vec<EventRecord>> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    events_from_csv(&raw, &path.display().to_string())
}
