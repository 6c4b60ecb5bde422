use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventType {
    Breaking,
    Anticipated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventTime {
    Before,
    During,
    After,
}

impl EventType {
    pub const ALL: [EventType; 2] = [EventType::Breaking, EventType::Anticipated];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

impl EventTime {
    pub const ALL: [EventTime; 3] = [EventTime::Before, EventTime::During, EventTime::After];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

/// Number of (type, time) cells.
pub const NUM_CELLS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventLabel {
    #[serde(rename = "type")]
    pub kind: EventType,
    pub time: EventTime,
}

impl EventLabel {
    pub fn new(kind: EventType, time: EventTime) -> Self {
        EventLabel { kind, time }
    }

    /// Cell index `type * 3 + time`.
    pub fn cell(self) -> usize {
        self.kind.index() * 3 + self.time.index()
    }

    pub fn from_cell(c: usize) -> Self {
        EventLabel {
            kind: EventType::from_index(c / 3),
            time: EventTime::from_index(c % 3),
        }
    }

    pub fn all() -> impl Iterator<Item = EventLabel> {
        (0..NUM_CELLS).map(Self::from_cell)
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventType::Breaking => "breaking",
            EventType::Anticipated => "anticipated",
        })
    }
}

impl fmt::Display for EventTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventTime::Before => "before",
            EventTime::During => "during",
            EventTime::After => "after",
        })
    }
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.kind, self.time)
    }
}

impl FromStr for EventType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "breaking" => Ok(EventType::Breaking),
            "anticipated" => Ok(EventType::Anticipated),
            other => Err(Error::param(format!("unknown event type {other:?}"))),
        }
    }
}

impl FromStr for EventTime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "before" => Ok(EventTime::Before),
            "during" => Ok(EventTime::During),
            "after" => Ok(EventTime::After),
            other => Err(Error::param(format!("unknown event time {other:?}"))),
        }
    }
}
