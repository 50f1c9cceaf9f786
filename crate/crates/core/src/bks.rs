//! Best-known solution costs for published benchmark instances.

use std::collections::BTreeMap;

use crate::instance::Cost;

const BUNDLED: &str = include_str!("../data/bks.tsv");

/// Immutable name → best-known cost table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BksRegistry {
    entries: BTreeMap<String, Cost>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct BksParseError {
    pub line: usize,
    pub msg: String,
}

impl BksRegistry {
    /// The table shipped with the crate (X and Belgium instances).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled BKS table is well-formed")
    }

    /// Parses `name<TAB>cost` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, BksParseError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| BksParseError { line: i + 1, msg };
            let mut parts = line.split_whitespace();
            let (Some(name), Some(cost), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err(format!("expected `name<TAB>cost`, found {line:?}")));
            };
            let cost: Cost = cost.parse().map_err(|_| err(format!("bad cost {cost:?}")))?;
            if cost <= 0 {
                return Err(err(format!("cost must be positive, found {cost}")));
            }
            entries.insert(name.to_string(), cost);
        }
        Ok(Self { entries })
    }

    /// Adds the entries of `other`, overriding existing names.
    pub fn extend(&mut self, other: BksRegistry) {
        self.entries.extend(other.entries);
    }

    pub fn insert(&mut self, name: impl Into<String>, cost: Cost) {
        self.entries.insert(name.into(), cost);
    }

    /// Recorded cost, or `None` for an unknown instance.
    pub fn get(&self, name: &str) -> Option<Cost> {
        self.entries.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_values() {
        let reg = BksRegistry::bundled();
        assert_eq!(reg.get("X-n101-k25"), Some(27591));
        assert_eq!(reg.get("X-n1001-k43"), Some(72359));
        assert_eq!(reg.get("Flanders2"), Some(4373244));
        assert_eq!(reg.get("X-n9999-k1"), None);
        assert_eq!(reg.len(), 110);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(BksRegistry::parse("a\t1\nb\n").is_err());
        assert!(BksRegistry::parse("a\t0\n").is_err());
        let reg = BksRegistry::parse("# header\na\t12 # trailing\n\n").unwrap();
        assert_eq!(reg.get("a"), Some(12));
    }
}
