use std::collections::BTreeSet;

use crate::error::{Error, Result};

const DEFAULT_MAP: &str = include_str!("../../data/default-labels.map");

/// Raw-to-consolidated activity label merges plus the finalised class list.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LabelMap {
    merges: Vec<(String, String)>,
    classes: Vec<String>,
}

impl LabelMap {
    /// Parses `raw -> consolidated` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<LabelMap> {
        let mut merges: Vec<(String, String)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (raw, merged) = line
                .split_once("->")
                .ok_or_else(|| Error::parse(format!("label map line {}", i + 1), "missing '->'"))?;
            let (raw, merged) = (raw.trim(), merged.trim());
            if raw.is_empty() || merged.is_empty() {
                return Err(Error::parse(
                    format!("label map line {}", i + 1),
                    "empty label",
                ));
            }
            if let Some((_, prev)) = merges.iter().find(|(r, _)| r == raw) {
                if prev != merged {
                    return Err(Error::parse(
                        format!("label map line {}", i + 1),
                        format!("{raw:?} already maps to {prev:?}"),
                    ));
                }
                continue;
            }
            merges.push((raw.to_string(), merged.to_string()));
        }
        Ok(LabelMap {
            merges,
            classes: Vec::new(),
        })
    }

    /// The shipped map: three merges of similar activities.
    pub fn default_map() -> LabelMap {
        LabelMap::parse(DEFAULT_MAP).expect("bundled label map parses")
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn consolidate(&self, label: &str) -> String {
        self.merges
            .iter()
            .find(|(raw, _)| raw == label)
            .map(|(_, merged)| merged.clone())
            .unwrap_or_else(|| label.to_string())
    }

    /// Fixes the class list to the sorted, de-duplicated consolidated
    /// labels. Class indices follow that order.
    pub fn finalize<'a>(&mut self, labels: impl IntoIterator<Item = &'a str>) {
        let set: BTreeSet<String> = labels.into_iter().map(|l| self.consolidate(l)).collect();
        self.classes = set.into_iter().collect();
    }

    pub fn with_classes(mut self, classes: Vec<String>) -> LabelMap {
        let set: BTreeSet<String> = classes.into_iter().collect();
        self.classes = set.into_iter().collect();
        self
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_index(&self, class: &str) -> Result<usize> {
        self.classes
            .binary_search_by(|c| c.as_str().cmp(class))
            .map_err(|_| Error::Label(format!("unknown class {class:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_merges() {
        let map = LabelMap::default_map();
        assert_eq!(map.consolidate("talking on the phone"), "talking");
        assert_eq!(map.consolidate("talking on phone"), "talking");
        assert_eq!(map.consolidate("cereal"), "eating");
        assert_eq!(map.consolidate("unstacking"), "stacking");
        assert_eq!(map.consolidate("placing"), "stacking");
        assert_eq!(map.consolidate("brushing teeth"), "brushing teeth");
    }

    #[test]
    fn consolidate_is_idempotent() {
        let map = LabelMap::default_map();
        for l in [
            "talking on the phone",
            "cereal",
            "placing",
            "cooking",
            "stacking",
        ] {
            let once = map.consolidate(l);
            assert_eq!(map.consolidate(&once), once);
        }
    }

    #[test]
    fn parse_rejects_garbage_and_conflicts() {
        assert!(LabelMap::parse("a b\n").is_err());
        assert!(LabelMap::parse("a -> b\na -> c\n").is_err());
        assert!(LabelMap::parse(" -> c\n").is_err());
        let ok = LabelMap::parse("# header\n\na -> b # trailing\n").unwrap();
        assert_eq!(ok.merges(), &[("a".to_string(), "b".to_string())]);
    }

    #[test]
    fn class_indices_are_sorted() {
        let mut map = LabelMap::default_map();
        map.finalize(["placing", "cooking", "talking on phone", "cereal"]);
        assert_eq!(map.classes(), &["cooking", "eating", "stacking", "talking"]);
        assert_eq!(map.class_index("stacking").unwrap(), 2);
        assert!(map.class_index("nope").is_err());
    }
}
