//! Class vocabulary with thing/stuff and known/unknown partitions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, TaxonomyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    Thing,
    Stuff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Known,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassInfo {
    pub name: String,
    pub id: u32,
    pub kind: ClassKind,
    pub split: Split,
}

impl ClassInfo {
    pub fn is_thing(&self) -> bool {
        self.kind == ClassKind::Thing
    }
}

/// Restricts evaluation to a slice of the taxonomy. Both constraints must hold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ClassFilter {
    pub kind: Option<ClassKind>,
    pub split: Option<Split>,
}

impl ClassFilter {
    pub const ALL: ClassFilter = ClassFilter {
        kind: None,
        split: None,
    };
    pub const THING: ClassFilter = ClassFilter {
        kind: Some(ClassKind::Thing),
        split: None,
    };
    pub const STUFF: ClassFilter = ClassFilter {
        kind: Some(ClassKind::Stuff),
        split: None,
    };
    pub const KNOWN: ClassFilter = ClassFilter {
        kind: None,
        split: Some(Split::Known),
    };
    pub const UNKNOWN: ClassFilter = ClassFilter {
        kind: None,
        split: Some(Split::Unknown),
    };

    pub fn accepts(&self, class: &ClassInfo) -> bool {
        self.kind.map_or(true, |k| k == class.kind) && self.split.map_or(true, |s| s == class.split)
    }

    pub fn is_all(&self) -> bool {
        self.kind.is_none() && self.split.is_none()
    }

    /// Conjunction of two filters. Returns `None` when they contradict each other
    /// (e.g. thing and stuff), i.e. no class can pass.
    pub fn and(self, other: ClassFilter) -> Option<ClassFilter> {
        fn merge<T: PartialEq>(a: Option<T>, b: Option<T>) -> Option<Option<T>> {
            match (a, b) {
                (Some(x), Some(y)) if x != y => None,
                (Some(x), _) => Some(Some(x)),
                (None, y) => Some(y),
            }
        }
        Some(ClassFilter {
            kind: merge(self.kind, other.kind)?,
            split: merge(self.split, other.split)?,
        })
    }
}

/// Named subsets selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    #[default]
    All,
    Thing,
    Stuff,
    Known,
    Unknown,
}

impl Subset {
    pub fn filter(self) -> ClassFilter {
        match self {
            Subset::All => ClassFilter::ALL,
            Subset::Thing => ClassFilter::THING,
            Subset::Stuff => ClassFilter::STUFF,
            Subset::Known => ClassFilter::KNOWN,
            Subset::Unknown => ClassFilter::UNKNOWN,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Subset::All => "all",
            Subset::Thing => "thing",
            Subset::Stuff => "stuff",
            Subset::Known => "known",
            Subset::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all" => Ok(Subset::All),
            "thing" => Ok(Subset::Thing),
            "stuff" => Ok(Subset::Stuff),
            "known" => Ok(Subset::Known),
            "unknown" => Ok(Subset::Unknown),
            other => Err(format!("unknown subset `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    classes: Vec<ClassInfo>,
    by_name: HashMap<String, usize>,
    // normalized spelling -> class index; includes canonical names and aliases
    lookup: HashMap<String, usize>,
    aliases: BTreeMap<String, String>,
}

/// Case-folds and collapses whitespace so free-form names compare equal.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaxonomyFile {
    classes: Vec<ClassEntry>,
    #[serde(default)]
    aliases: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassEntry {
    name: String,
    id: u32,
    kind: String,
    split: String,
}

impl Taxonomy {
    pub fn new(
        classes: Vec<ClassInfo>,
        aliases: BTreeMap<String, String>,
    ) -> Result<Self, TaxonomyError> {
        let mut by_name = HashMap::new();
        let mut ids = HashMap::new();
        for (i, c) in classes.iter().enumerate() {
            if by_name.insert(c.name.clone(), i).is_some() {
                return Err(TaxonomyError::DuplicateName(c.name.clone()));
            }
            if ids.insert(c.id, i).is_some() {
                return Err(TaxonomyError::DuplicateId(c.id));
            }
        }
        if !classes.iter().any(|c| c.kind == ClassKind::Thing)
            || !classes.iter().any(|c| c.kind == ClassKind::Stuff)
        {
            return Err(TaxonomyError::MissingKind);
        }

        let mut lookup = HashMap::new();
        for (i, c) in classes.iter().enumerate() {
            lookup.entry(normalize_name(&c.name)).or_insert(i);
        }
        let mut canonical_aliases = BTreeMap::new();
        for (alias, target) in aliases {
            let idx = by_name
                .get(&target)
                .or_else(|| lookup.get(&normalize_name(&target)))
                .copied()
                .ok_or_else(|| TaxonomyError::UnknownAliasTarget {
                    alias: alias.clone(),
                    target: target.clone(),
                })?;
            lookup.entry(normalize_name(&alias)).or_insert(idx);
            canonical_aliases.insert(alias, classes[idx].name.clone());
        }
        let aliases = canonical_aliases;

        Ok(Taxonomy {
            classes,
            by_name,
            lookup,
            aliases,
        })
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let file: TaxonomyFile = serde_json::from_str(text).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut classes = Vec::with_capacity(file.classes.len());
        for entry in file.classes {
            let kind = match entry.kind.as_str() {
                "thing" => ClassKind::Thing,
                "stuff" => ClassKind::Stuff,
                _ => {
                    return Err(TaxonomyError::BadKind {
                        name: entry.name,
                        value: entry.kind,
                    }
                    .into())
                }
            };
            let split = match entry.split.as_str() {
                "known" => Split::Known,
                "unknown" => Split::Unknown,
                _ => {
                    return Err(TaxonomyError::BadSplit {
                        name: entry.name,
                        value: entry.split,
                    }
                    .into())
                }
            };
            classes.push(ClassInfo {
                name: entry.name,
                id: entry.id,
                kind,
                split,
            });
        }
        Ok(Taxonomy::new(classes, file.aliases)?)
    }

    pub fn to_json(&self) -> String {
        let classes: Vec<ClassEntry> = self
            .classes
            .iter()
            .map(|c| ClassEntry {
                name: c.name.clone(),
                id: c.id,
                kind: match c.kind {
                    ClassKind::Thing => "thing".into(),
                    ClassKind::Stuff => "stuff".into(),
                },
                split: match c.split {
                    Split::Known => "known".into(),
                    Split::Unknown => "unknown".into(),
                },
            })
            .collect();
        let value = serde_json::json!({ "classes": classes, "aliases": self.aliases });
        serde_json::to_string_pretty(&value).expect("taxonomy serializes")
    }

    pub fn classes(&self) -> &[ClassInfo] {
        &self.classes
    }

    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }

    /// Exact lookup by canonical name.
    pub fn get(&self, name: &str) -> Option<&ClassInfo> {
        self.by_name.get(name).map(|&i| &self.classes[i])
    }

    pub fn class(&self, name: &str) -> Result<&ClassInfo> {
        self.get(name)
            .ok_or_else(|| Error::UnknownClass(name.to_string()))
    }

    /// Resolve a free-form (e.g. predicted) name: exact canonical name first,
    /// then case/whitespace-normalized canonical names and aliases.
    pub fn resolve(&self, name: &str) -> Option<&ClassInfo> {
        self.get(name)
            .or_else(|| self.lookup.get(&normalize_name(name)).map(|&i| &self.classes[i]))
    }

    pub fn accepts(&self, name: &str, filter: ClassFilter) -> bool {
        self.get(name).map_or(false, |c| filter.accepts(c))
    }

    /// `(known, unknown)` class counts.
    pub fn split_sizes(&self) -> (usize, usize) {
        let known = self
            .classes
            .iter()
            .filter(|c| c.split == Split::Known)
            .count();
        (known, self.classes.len() - known)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

pub fn load_taxonomy(path: impl AsRef<Path>) -> Result<Taxonomy> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Taxonomy::from_json(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Taxonomy> {
        Taxonomy::from_json(text, Path::new("taxonomy.json"))
    }

    const TWO: &str = r#"{"classes": [
        {"name": "person", "id": 1, "kind": "thing", "split": "known"},
        {"name": "wall", "id": 2, "kind": "stuff", "split": "known"}
    ], "aliases": {"Pedestrian": "person"}}"#;

    #[test]
    fn two_class_fixture() {
        let t = parse(TWO).unwrap();
        assert_eq!(t.split_sizes(), (2, 0));
        assert_eq!(t.resolve("pedestrian").unwrap().name, "person");
        assert_eq!(t.resolve("  PERSON ").unwrap().name, "person");
        assert!(t.resolve("chair").is_none());
        assert!(t.get("Pedestrian").is_none());
    }

    #[test]
    fn known_unknown_split_sizes() {
        let mut classes = Vec::new();
        for i in 0..72u32 {
            classes.push(ClassInfo {
                name: format!("class_{i}"),
                id: i,
                kind: if i < 61 { ClassKind::Thing } else { ClassKind::Stuff },
                split: if i < 43 { Split::Known } else { Split::Unknown },
            });
        }
        let t = Taxonomy::new(classes, BTreeMap::new()).unwrap();
        assert_eq!(t.split_sizes(), (43, 29));
        let reparsed = parse(&t.to_json()).unwrap();
        assert_eq!(reparsed, t);
    }

    #[test]
    fn rejects_bad_files() {
        let dup = r#"{"classes": [
            {"name": "a", "id": 1, "kind": "thing", "split": "known"},
            {"name": "a", "id": 2, "kind": "stuff", "split": "known"}]}"#;
        assert!(matches!(parse(dup), Err(Error::Taxonomy(TaxonomyError::DuplicateName(_)))));
        let dup_id = r#"{"classes": [
            {"name": "a", "id": 1, "kind": "thing", "split": "known"},
            {"name": "b", "id": 1, "kind": "stuff", "split": "known"}]}"#;
        assert!(matches!(parse(dup_id), Err(Error::Taxonomy(TaxonomyError::DuplicateId(1)))));
        let kind = r#"{"classes": [{"name": "a", "id": 1, "kind": "blob", "split": "known"}]}"#;
        assert!(matches!(parse(kind), Err(Error::Taxonomy(TaxonomyError::BadKind { .. }))));
        let split = r#"{"classes": [{"name": "a", "id": 1, "kind": "thing", "split": "maybe"}]}"#;
        assert!(matches!(parse(split), Err(Error::Taxonomy(TaxonomyError::BadSplit { .. }))));
        let alias = r#"{"classes": [
            {"name": "a", "id": 1, "kind": "thing", "split": "known"},
            {"name": "b", "id": 2, "kind": "stuff", "split": "known"}],
            "aliases": {"x": "zzz"}}"#;
        assert!(matches!(
            parse(alias),
            Err(Error::Taxonomy(TaxonomyError::UnknownAliasTarget { .. }))
        ));
        let only_things = r#"{"classes": [{"name": "a", "id": 1, "kind": "thing", "split": "known"}]}"#;
        assert!(matches!(parse(only_things), Err(Error::Taxonomy(TaxonomyError::MissingKind))));
        assert!(matches!(parse("{"), Err(Error::Schema { .. })));
    }

    #[test]
    fn filter_conjunction() {
        assert_eq!(
            ClassFilter::THING.and(ClassFilter::KNOWN),
            Some(ClassFilter {
                kind: Some(ClassKind::Thing),
                split: Some(Split::Known)
            })
        );
        assert_eq!(ClassFilter::THING.and(ClassFilter::STUFF), None);
        assert_eq!(ClassFilter::ALL.and(ClassFilter::UNKNOWN), Some(ClassFilter::UNKNOWN));
    }
}
