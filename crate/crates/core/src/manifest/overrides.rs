//! User label overrides, applied after adapter parsing.
//!
//! File format: two delimited columns `selector,new_label`, optional header.
//! A selector is `id:<entry_id>`, `subgroup:<name>`, or a bare entry id.

use std::fmt;
use std::path::Path;

use super::{Label, ManifestEntry, ManifestError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    Entry(String),
    Subgroup(String),
}

impl Selector {
    fn matches(&self, e: &ManifestEntry) -> bool {
        match self {
            Selector::Entry(id) => &e.entry_id == id,
            Selector::Subgroup(s) => e.subgroup.as_deref() == Some(s.as_str()),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Entry(id) => write!(f, "id:{id}"),
            Selector::Subgroup(s) => write!(f, "subgroup:{s}"),
        }
    }
}

pub type OverrideRule = (Selector, Label);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OverrideTable {
    rules: Vec<OverrideRule>,
}

impl OverrideTable {
    pub fn from_rules(rules: Vec<OverrideRule>) -> Self {
        OverrideTable { rules }
    }

    pub fn rules(&self) -> &[OverrideRule] {
        &self.rules
    }

    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rules = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| ManifestError::AdapterParse {
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            let (Some(sel), Some(label)) = (record.get(0), record.get(1)) else {
                return Err(ManifestError::AdapterParse {
                    line,
                    message: "override rows need `selector,new_label`".into(),
                });
            };
            if line == 1 && sel == "selector" {
                continue;
            }
            let label = label
                .parse::<Label>()
                .map_err(|message| ManifestError::AdapterParse { line, message })?;
            let selector = if let Some(s) = sel.strip_prefix("subgroup:") {
                Selector::Subgroup(s.to_string())
            } else {
                Selector::Entry(sel.strip_prefix("id:").unwrap_or(sel).to_string())
            };
            rules.push((selector, label));
        }
        Ok(OverrideTable { rules })
    }

    pub fn from_path(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Relabel matching entries in rule order. Only `label` changes.
    pub fn apply(&self, entries: &mut [ManifestEntry]) -> Result<(), ManifestError> {
        for (selector, label) in &self.rules {
            let mut hit = false;
            for e in entries.iter_mut().filter(|e| selector.matches(e)) {
                e.label = *label;
                hit = true;
            }
            if !hit {
                return Err(ManifestError::OverrideTarget(selector.to_string()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_selectors_and_header() {
        let t = OverrideTable::parse("selector,new_label\nsubgroup:A07,bonafide\nid:x,spoof\ny,bonafide\n").unwrap();
        assert_eq!(
            t.rules(),
            [
                (Selector::Subgroup("A07".into()), Label::Bonafide),
                (Selector::Entry("x".into()), Label::Spoof),
                (Selector::Entry("y".into()), Label::Bonafide),
            ]
        );
        assert!(OverrideTable::parse("x,maybe\n").is_err());
    }

    #[test]
    fn unknown_target_is_error() {
        let mut entries = vec![ManifestEntry::new("a", "ds", "a.wav", Label::Spoof)];
        let t = OverrideTable::parse("b,bonafide\n").unwrap();
        assert!(matches!(t.apply(&mut entries), Err(ManifestError::OverrideTarget(s)) if s == "id:b"));
    }

    proptest! {
        #[test]
        fn overrides_change_only_labels(
            labels in proptest::collection::vec(any::<bool>(), 1..30),
            pick in any::<proptest::sample::Index>(),
            to_spoof in any::<bool>(),
        ) {
            let entries: Vec<ManifestEntry> = labels.iter().enumerate().map(|(i, s)| {
                ManifestEntry::new(format!("e{i}"), "ds", format!("{i}.wav"),
                    if *s { Label::Spoof } else { Label::Bonafide })
                    .with_subgroup(Some(format!("g{}", i % 3)))
            }).collect();
            let target = pick.get(&entries);
            let new_label = if to_spoof { Label::Spoof } else { Label::Bonafide };
            let table = OverrideTable::from_rules(vec![
                (Selector::Subgroup(target.subgroup.clone().unwrap()), new_label),
            ]);
            let mut changed = entries.clone();
            table.apply(&mut changed).unwrap();
            prop_assert_eq!(changed.len(), entries.len());
            for (a, b) in entries.iter().zip(&changed) {
                prop_assert_eq!(&a.entry_id, &b.entry_id);
                prop_assert_eq!(&a.relative_path, &b.relative_path);
                prop_assert_eq!(&a.subgroup, &b.subgroup);
                if a.subgroup == target.subgroup {
                    prop_assert_eq!(b.label, new_label);
                } else {
                    prop_assert_eq!(a.label, b.label);
                }
            }
        }
    }
}
