//! Labeled audio inventory: CSV rows of `path,label,split` plus optional
//! `artist`, `pitch`, and `nuance` metadata columns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use crate::{Result, TrainError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Test => write!(f, "test"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: String,
    pub split: Split,
    pub artist: Option<String>,
    pub pitch: Option<String>,
    pub nuance: Option<String>,
}

/// The dataset inventory. `class_names` is the sorted set of labels;
/// class indices follow that order.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub class_names: Vec<String>,
}

impl DatasetManifest {
    pub fn from_entries(entries: Vec<ManifestEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(TrainError::Manifest("no entries".into()));
        }
        let class_names: Vec<String> = entries
            .iter()
            .map(|e| e.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let manifest = DatasetManifest { entries, class_names };
        manifest.validate()?;
        Ok(manifest)
    }

    /// Leakage guards: a recording must not sit in both splits, and when
    /// artist metadata is present an artist must not either.
    fn validate(&self) -> Result<()> {
        let mut path_splits: BTreeMap<&Path, BTreeSet<&str>> = BTreeMap::new();
        let mut artist_splits: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for e in &self.entries {
            let split = match e.split {
                Split::Train => "train",
                Split::Test => "test",
            };
            path_splits.entry(&e.path).or_default().insert(split);
            if let Some(artist) = &e.artist {
                artist_splits.entry(artist).or_default().insert(split);
            }
        }
        for (path, splits) in path_splits {
            if splits.len() > 1 {
                return Err(TrainError::Manifest(format!(
                    "recording {} appears in both splits",
                    path.display()
                )));
            }
        }
        for (artist, splits) in artist_splits {
            if splits.len() > 1 {
                return Err(TrainError::Manifest(format!(
                    "artist `{artist}` appears in both splits"
                )));
            }
        }
        Ok(())
    }

    /// Errors unless every class has at least one training entry.
    pub fn validate_for_training(&self) -> Result<()> {
        for name in &self.class_names {
            let present = self
                .entries
                .iter()
                .any(|e| e.split == Split::Train && &e.label == name);
            if !present {
                return Err(TrainError::Manifest(format!(
                    "class `{name}` missing from the train split"
                )));
            }
        }
        Ok(())
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == label)
    }

    pub fn train_indices(&self) -> Vec<usize> {
        self.indices_for(Split::Train)
    }

    pub fn test_indices(&self) -> Vec<usize> {
        self.indices_for(Split::Test)
    }

    fn indices_for(&self, split: Split) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| (e.split == split).then_some(i))
            .collect()
    }

    /// Reads `path,label,split[,artist][,pitch][,nuance]` with a header
    /// row. Relative audio paths resolve against the manifest's directory.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TrainError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| TrainError::Manifest("empty manifest".into()))?;
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        let find = |name: &str| columns.iter().position(|c| *c == name);
        let (path_col, label_col, split_col) = match (find("path"), find("label"), find("split")) {
            (Some(p), Some(l), Some(s)) => (p, l, s),
            _ => {
                return Err(TrainError::Manifest(
                    "manifest header must name path, label, and split columns".into(),
                ))
            }
        };
        let artist_col = find("artist");
        let pitch_col = find("pitch");
        let nuance_col = find("nuance");

        let mut entries = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let get = |col: usize| -> Result<&str> {
                fields.get(col).copied().ok_or_else(|| {
                    TrainError::Manifest(format!("line {}: missing column {col}", lineno + 2))
                })
            };
            let split = match get(split_col)? {
                "train" => Split::Train,
                "test" => Split::Test,
                other => {
                    return Err(TrainError::Manifest(format!(
                        "line {}: unknown split `{other}`",
                        lineno + 2
                    )))
                }
            };
            let rel = PathBuf::from(get(path_col)?);
            let resolved = if rel.is_absolute() { rel } else { base.join(rel) };
            let optional = |col: Option<usize>| {
                col.and_then(|c| fields.get(c))
                    .map(|s| s.to_string())
                    .filter(|s| !s.is_empty())
            };
            entries.push(ManifestEntry {
                path: resolved,
                label: get(label_col)?.to_string(),
                split,
                artist: optional(artist_col),
                pitch: optional(pitch_col),
                nuance: optional(nuance_col),
            });
        }
        DatasetManifest::from_entries(entries)
    }
}
