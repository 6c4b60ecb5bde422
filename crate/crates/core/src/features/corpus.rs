use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::content_terms;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub title: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityDoc {
    pub entity_id: String,
    pub title: String,
    pub sections: Vec<Section>,
    /// Articles that link to this one.
    #[serde(default)]
    pub inlinks: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlDoc {
    pub url: String,
    pub text: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Entity(EntityDoc),
    Url(UrlDoc),
}

/// Entity articles split into sections, plus page text per URL.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusStore {
    entities: BTreeMap<String, EntityDoc>,
    urls: BTreeMap<String, String>,
}

impl CorpusStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_entity(&mut self, doc: EntityDoc) -> Result<()> {
        if doc.sections.is_empty() {
            return Err(Error::param(format!("entity {} has no sections", doc.entity_id)));
        }
        if doc.sections.iter().any(|s| s.text.trim().is_empty()) {
            return Err(Error::param(format!("entity {} has an empty section", doc.entity_id)));
        }
        self.entities.insert(doc.entity_id.clone(), doc);
        Ok(())
    }

    pub fn add_url(&mut self, url: impl Into<String>, text: impl Into<String>) {
        self.urls.insert(url.into(), text.into());
    }

    pub fn entity(&self, id: &str) -> Option<&EntityDoc> {
        self.entities.get(id)
    }

    pub fn url_text(&self, url: &str) -> Option<&str> {
        self.urls.get(url).map(String::as_str)
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.urls.is_empty()
    }

    pub fn parse_jsonl(raw: &str, origin: &str) -> Result<Self> {
        let mut store = CorpusStore::new();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let perr = |message: String| Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                message,
            };
            match serde_json::from_str::<Line>(line).map_err(|e| perr(e.to_string()))? {
                Line::Entity(doc) => store.add_entity(doc).map_err(|e| perr(e.to_string()))?,
                Line::Url(u) => store.add_url(u.url, u.text),
            }
        }
        Ok(store)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_jsonl(&raw, &path.display().to_string())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for doc in self.entities.values() {
            out.push_str(&serde_json::to_string(doc).expect("plain struct serializes"));
            out.push('\n');
        }
        for (url, text) in &self.urls {
            let u = UrlDoc {
                url: url.clone(),
                text: text.clone(),
            };
            out.push_str(&serde_json::to_string(&u).expect("plain struct serializes"));
            out.push('\n');
        }
        out
    }
}

pub(crate) type TermCounts = HashMap<String, u64>;

pub(crate) fn count_terms(text: &str) -> TermCounts {
    let mut m = TermCounts::new();
    for t in content_terms(text) {
        *m.entry(t).or_default() += 1;
    }
    m
}

/// Term statistics for one entity's article collection.
#[derive(Clone, Debug, Default)]
pub struct EntityTerms {
    pub(crate) sections: Vec<TermCounts>,
    pub(crate) df: TermCounts,
    pub(crate) own: TermCounts,
    pub(crate) own_len: u64,
}

/// Precomputed term counts over a [`CorpusStore`].
#[derive(Clone, Debug, Default)]
pub struct CorpusIndex {
    pub(crate) entities: HashMap<String, EntityTerms>,
    pub(crate) urls: HashMap<String, (TermCounts, u64)>,
    pub(crate) background: TermCounts,
    pub(crate) background_len: u64,
}

impl CorpusIndex {
    pub fn build(store: &CorpusStore) -> Self {
        let mut background = TermCounts::new();
        let mut background_len = 0;
        let mut section_counts: HashMap<&str, Vec<TermCounts>> = HashMap::new();
        for (id, doc) in &store.entities {
            let secs: Vec<TermCounts> = doc.sections.iter().map(|s| count_terms(&s.text)).collect();
            for s in &secs {
                for (t, c) in s {
                    *background.entry(t.clone()).or_default() += c;
                    background_len += c;
                }
            }
            section_counts.insert(id.as_str(), secs);
        }
        let mut urls = HashMap::new();
        for (url, text) in &store.urls {
            let counts = count_terms(text);
            let len = counts.values().sum();
            for (t, c) in &counts {
                *background.entry(t.clone()).or_default() += c;
            }
            background_len += len;
            urls.insert(url.clone(), (counts, len));
        }
        let mut entities = HashMap::new();
        for (id, doc) in &store.entities {
            let own_secs = &section_counts[id.as_str()];
            let mut own = TermCounts::new();
            for s in own_secs {
                for (t, c) in s {
                    *own.entry(t.clone()).or_default() += c;
                }
            }
            let own_len = own.values().sum();
            let mut sections: Vec<TermCounts> = own_secs.clone();
            for link in &doc.inlinks {
                if link == id {
                    continue;
                }
                match section_counts.get(link.as_str()) {
                    Some(s) => sections.extend(s.iter().cloned()),
                    None => log::debug!("in-link {link} of {id} is not in the corpus"),
                }
            }
            let mut df = TermCounts::new();
            for s in &sections {
                for t in s.keys() {
                    *df.entry(t.clone()).or_default() += 1;
                }
            }
            entities.insert(
                id.clone(),
                EntityTerms {
                    sections,
                    df,
                    own,
                    own_len,
                },
            );
        }
        CorpusIndex {
            entities,
            urls,
            background,
            background_len,
        }
    }

    pub fn entity(&self, id: &str) -> Result<&EntityTerms> {
        self.entities.get(id).ok_or_else(|| Error::UnknownEntity(id.to_string()))
    }

    pub fn has_url(&self, url: &str) -> bool {
        self.urls.contains_key(url)
    }

    /// Laplace-smoothed background probability.
    pub(crate) fn background_prob(&self, term: &str) -> f64 {
        let cf = self.background.get(term).copied().unwrap_or(0) as f64;
        (cf + 1.0) / (self.background_len as f64 + self.background.len() as f64 + 1.0)
    }
}
