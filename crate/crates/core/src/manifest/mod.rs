//! Unified per-clip manifests.
//!
//! Every dataset, whatever its native label format, is normalized into rows of
//! `entry_id,dataset_id,relative_path,label,subgroup,duration_seconds`.

pub mod adapters;
mod overrides;

pub use adapters::{normalize_labels, AdapterContext, ADAPTER_IDS};
pub use overrides::{OverrideRule, OverrideTable, Selector};

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MANIFEST_FILE_NAME: &str = "manifest.csv";
pub const MANIFEST_HEADER: [&str; 6] = [
    "entry_id",
    "dataset_id",
    "relative_path",
    "label",
    "subgroup",
    "duration_seconds",
];

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("unknown manifest adapter `{0}`; known adapters: {}", ADAPTER_IDS.join(", "))]
    UnknownAdapter(String),
    #[error("adapter parse error at line {line}: {message}")]
    AdapterParse { line: usize, message: String },
    #[error("label override `{0}` matches no manifest entry")]
    OverrideTarget(String),
    #[error("manifest format error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format { line: Option<usize>, message: String },
    #[error("invalid manifest entry `{entry_id}`: {message}")]
    InvalidEntry { entry_id: String, message: String },
    #[error("manifest I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Bonafide,
    Spoof,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Bonafide => "bonafide",
            Label::Spoof => "spoof",
        }
    }

    /// Map the label vocabularies found in dataset distributions onto the
    /// binary label. Case-insensitive.
    pub fn from_alias(word: &str) -> Option<Label> {
        match word.trim().to_ascii_lowercase().as_str() {
            "bonafide" | "bona-fide" | "bona_fide" | "real" | "genuine" | "human" | "original" => Some(Label::Bonafide),
            "spoof" | "spoofed" | "fake" | "synthetic" | "deepfake" | "generated" => Some(Label::Spoof),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bonafide" => Ok(Label::Bonafide),
            "spoof" => Ok(Label::Spoof),
            other => Err(format!("label must be `bonafide` or `spoof`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub entry_id: String,
    pub dataset_id: String,
    pub relative_path: String,
    pub label: Label,
    pub subgroup: Option<String>,
    pub duration_seconds: Option<f64>,
}

impl ManifestEntry {
    pub fn new(
        entry_id: impl Into<String>,
        dataset_id: impl Into<String>,
        relative_path: impl Into<String>,
        label: Label,
    ) -> Self {
        ManifestEntry {
            entry_id: entry_id.into(),
            dataset_id: dataset_id.into(),
            relative_path: relative_path.into(),
            label,
            subgroup: None,
            duration_seconds: None,
        }
    }

    pub fn with_subgroup(mut self, subgroup: Option<String>) -> Self {
        self.subgroup = subgroup.filter(|s| !s.is_empty());
        self
    }

    /// Check the per-entry invariants.
    pub fn check(&self) -> Result<(), ManifestError> {
        let invalid = |message: &str| ManifestError::InvalidEntry {
            entry_id: self.entry_id.clone(),
            message: message.to_string(),
        };
        if self.entry_id.is_empty() {
            return Err(invalid("entry_id is empty"));
        }
        check_relative_path(&self.relative_path).map_err(|m| invalid(&m))?;
        if let Some(d) = self.duration_seconds {
            if !(d.is_finite() && d >= 0.0) {
                return Err(invalid("duration_seconds must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, dataset_root: &Path) -> PathBuf {
        dataset_root.join(&self.relative_path)
    }
}

pub(crate) fn check_relative_path(path: &str) -> Result<(), String> {
    if path.is_empty() {
        return Err("relative_path is empty".into());
    }
    if path.starts_with('/') || path.contains('\\') {
        return Err(format!("relative_path `{path}` must be a relative POSIX path"));
    }
    if path.split('/').any(|seg| seg == "..") {
        return Err(format!("relative_path `{path}` contains `..`"));
    }
    Ok(())
}

/// Serialize a manifest to any writer.
pub fn write_manifest_to<W: Write>(writer: W, entries: &[ManifestEntry]) -> Result<(), ManifestError> {
    let to_err = |e: csv::Error| ManifestError::Format {
        line: None,
        message: e.to_string(),
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(MANIFEST_HEADER).map_err(to_err)?;
    for e in entries {
        e.check()?;
        let duration = e.duration_seconds.map(|d| d.to_string()).unwrap_or_default();
        w.write_record([
            e.entry_id.as_str(),
            e.dataset_id.as_str(),
            e.relative_path.as_str(),
            e.label.as_str(),
            e.subgroup.as_deref().unwrap_or(""),
            duration.as_str(),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|source| ManifestError::Io {
        path: PathBuf::from("<writer>"),
        source,
    })
}

/// Write a manifest file atomically (temp file in the same directory, then rename).
pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), ManifestError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let io = |source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    write_manifest_to(&mut tmp, entries)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn read_manifest_from<R: Read>(reader: R) -> Result<Vec<ManifestEntry>, ManifestError> {
    let mut r = csv::ReaderBuilder::new().from_reader(reader);
    let headers = r
        .headers()
        .map_err(|e| ManifestError::Format {
            line: Some(1),
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| {
        col(name).ok_or_else(|| ManifestError::Format {
            line: Some(1),
            message: format!("missing required column `{name}`"),
        })
    };
    let id_col = required("entry_id")?;
    let ds_col = required("dataset_id")?;
    let path_col = required("relative_path")?;
    let label_col = required("label")?;
    let sub_col = col("subgroup");
    let dur_col = col("duration_seconds");

    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| ManifestError::Format {
            line: e.position().map(|p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("");
        let label = field(label_col)
            .parse::<Label>()
            .map_err(|message| ManifestError::Format { line, message })?;
        let duration_seconds = match dur_col.map(field).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => Some(s.parse::<f64>().map_err(|e| ManifestError::Format {
                line,
                message: format!("duration_seconds `{s}`: {e}"),
            })?),
        };
        let entry = ManifestEntry {
            entry_id: field(id_col).to_string(),
            dataset_id: field(ds_col).to_string(),
            relative_path: field(path_col).to_string(),
            label,
            subgroup: sub_col.map(field).filter(|s| !s.is_empty()).map(str::to_string),
            duration_seconds,
        };
        entry.check()?;
        out.push(entry);
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, ManifestError> {
    let file = std::fs::File::open(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_manifest_from(std::io::BufReader::new(file))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub total: usize,
    pub per_label_counts: BTreeMap<Label, usize>,
    pub missing_files: usize,
    pub duplicate_ids: usize,
    pub passed: bool,
}

/// Count problems in a manifest. Nothing here fails; problems are reported.
pub fn validate_manifest(entries: &[ManifestEntry], dataset_root: &Path) -> ValidationReport {
    let mut per_label_counts = BTreeMap::new();
    let mut seen = HashSet::new();
    let mut duplicate_ids = 0;
    let mut missing_files = 0;
    for e in entries {
        *per_label_counts.entry(e.label).or_insert(0) += 1;
        if !seen.insert(e.entry_id.as_str()) {
            duplicate_ids += 1;
        }
        if !e.resolve(dataset_root).is_file() {
            missing_files += 1;
        }
    }
    let total = entries.len();
    ValidationReport {
        total,
        per_label_counts,
        missing_files,
        duplicate_ids,
        passed: missing_files == 0 && duplicate_ids == 0 && total > 0,
    }
}
