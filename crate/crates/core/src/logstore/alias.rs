use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::normalize_query;

/// Entity id to alias strings, normalized like query terms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityAliasTable {
    entities: BTreeMap<String, Vec<String>>,
}

impl EntityAliasTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert<I, S>(&mut self, entity: impl Into<String>, aliases: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut list: Vec<String> = Vec::new();
        for a in aliases {
            let a = normalize_query(a.as_ref());
            if !a.is_empty() && !list.contains(&a) {
                list.push(a);
            }
        }
        self.entities.insert(entity.into(), list);
    }

    pub fn aliases(&self, entity: &str) -> Result<&[String]> {
        self.entities
            .get(entity)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownEntity(entity.to_string()))
    }

    /// First listed alias, used as the entity's canonical query.
    pub fn primary(&self, entity: &str) -> Result<&str> {
        self.aliases(entity)?
            .first()
            .map(String::as_str)
            .ok_or_else(|| Error::Degenerate(format!("entity `{entity}` has no aliases")))
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.entities.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&raw)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let parsed: BTreeMap<String, Vec<String>> = serde_json::from_str(raw)?;
        let mut table = Self::new();
        for (entity, aliases) in parsed {
            table.insert(entity, aliases);
        }
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entities).expect("alias table serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases_are_normalized() {
        let t = EntityAliasTable::from_json(r#"{"e1": ["NCAA  Tournament", "ncaa"]}"#).unwrap();
        assert_eq!(t.aliases("e1").unwrap(), ["ncaa tournament", "ncaa"]);
        assert_eq!(t.primary("e1").unwrap(), "ncaa tournament");
        assert!(matches!(t.aliases("nope"), Err(Error::UnknownEntity(id)) if id == "nope"));
    }
}
