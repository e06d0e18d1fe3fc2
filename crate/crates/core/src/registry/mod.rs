//! Dataset registry: the taxonomy of benchmark datasets and the group
//! vocabulary used to select and aggregate them.
//!
//! The registry is a TOML document with a `[[dataset]]` array. Descriptors are
//! immutable once loaded and are returned sorted by id.

mod fetch;

pub use fetch::{fetch_dataset, sha256_hex, FetchError, FetchOutcome};

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::adapters::is_registered_adapter;

/// The registry shipped with the harness.
pub const DEFAULT_REGISTRY_TOML: &str = include_str!("../../data/registry.toml");

/// Name of the group that selects every dataset.
pub const ALL_GROUP: &str = "all";

/// Taxonomy group names, each resolved by a descriptor predicate.
pub const TAXONOMY_GROUPS: &[&str] = &[
    "perturbation",
    "in_the_wild",
    "accent",
    "vocal_sounds",
    "expressive",
    "vocoded",
    "neural_codec",
    "diffusion_flow",
    "codec_llm",
    "multilingual",
];

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("registry format error{}: {field}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format {
        line: Option<usize>,
        field: String,
        message: String,
    },
    #[error("duplicate dataset id `{id}`{}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    DuplicateDataset { id: String, line: Option<usize> },
    #[error("unknown group `{name}`; valid names: {}", valid.join(", "))]
    UnknownGroup { name: String, valid: Vec<String> },
    #[error("reading registry {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    RealPlusFake,
    RecodedRealPlusFake,
    FakeSingingVoice,
    VocodedReal,
    EnhancedReal,
    ReplayedReal,
    RealOnly,
    FakeOnly,
}

impl Category {
    /// Categories whose "real" samples are processed by a neural component.
    pub fn is_processed_real(self) -> bool {
        matches!(
            self,
            Category::VocodedReal | Category::RecodedRealPlusFake | Category::EnhancedReal
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GenerativeMethod {
    #[serde(rename = "TTS_VC")]
    TtsVc,
    Diffusion,
    DiffFlow,
    CodecLLM,
    VocodersOnly,
    Enhancement,
    #[serde(rename = "SVS_SVC")]
    SvsSvc,
    #[serde(rename = "NA")]
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unpack {
    None,
    Zip,
    Tar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetchSource {
    pub url: String,
    /// Lowercase hex SHA-256 of the downloaded artifact.
    pub checksum: String,
    pub unpack: Unpack,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetchDescriptor {
    #[serde(default)]
    pub sources: Vec<FetchSource>,
    #[serde(default)]
    pub license_note: String,
    #[serde(default)]
    pub approximate_size_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetDescriptor {
    pub id: String,
    pub display_name: String,
    pub category: Category,
    pub in_the_wild: bool,
    pub perturbation: bool,
    pub languages: Vec<String>,
    pub accent: bool,
    pub vocal_sounds: bool,
    pub expressivity: bool,
    pub uses_vocoder: bool,
    pub uses_neural_codec: bool,
    pub generative_method: GenerativeMethod,
    pub adapter_id: String,
    /// Label source file relative to the dataset root. Adapters fall back to
    /// their own default name when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_source: Option<String>,
    /// Adapter-specific options (e.g. `audio_dir`, `extension`).
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub adapter_args: std::collections::BTreeMap<String, String>,
    pub fetch: FetchDescriptor,
    #[serde(default)]
    pub group_exclusions: BTreeSet<String>,
}

impl DatasetDescriptor {
    /// True when the language column names more than one language, either
    /// as several codes or as a count marker.
    pub fn is_multilingual(&self) -> bool {
        if self.languages.len() > 1 {
            return true;
        }
        self.languages.iter().any(|l| {
            if l == "many" {
                return true;
            }
            let digits = l.trim_start_matches(['>', '=', '<']);
            digits.parse::<u32>().map(|n| n >= 2).unwrap_or(false)
        })
    }

    /// Whether this descriptor belongs to the named taxonomy group, ignoring
    /// exclusions. Returns `None` for names outside the taxonomy vocabulary.
    pub fn in_taxonomy_group(&self, group: &str) -> Option<bool> {
        let hit = match group {
            ALL_GROUP => true,
            "perturbation" => self.perturbation,
            "in_the_wild" => self.in_the_wild,
            "accent" => self.accent,
            "vocal_sounds" => self.vocal_sounds,
            "expressive" => self.expressivity,
            "vocoded" => self.uses_vocoder,
            "neural_codec" => self.uses_neural_codec,
            "diffusion_flow" => matches!(
                self.generative_method,
                GenerativeMethod::Diffusion | GenerativeMethod::DiffFlow
            ),
            "codec_llm" => self.generative_method == GenerativeMethod::CodecLLM,
            "multilingual" => self.is_multilingual(),
            _ => return None,
        };
        Some(hit)
    }

    pub fn is_excluded_from(&self, group: &str) -> bool {
        self.group_exclusions.contains(group)
    }
}

impl fmt::Display for DatasetDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.id, self.display_name)
    }
}

/// A loaded registry: descriptors sorted by id plus the default list of
/// groups to summarize in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Registry {
    pub report_groups: Vec<String>,
    #[serde(rename = "dataset")]
    pub datasets: Vec<DatasetDescriptor>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegistry {
    #[serde(default)]
    report_groups: Vec<String>,
    #[serde(default)]
    dataset: Vec<toml::Spanned<DatasetDescriptor>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

/// Parse a registry document.
pub fn load_registry(text: &str) -> Result<Registry, RegistryError> {
    let raw: RawRegistry = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        let field = e.message().split('`').nth(1).unwrap_or("document").to_string();
        RegistryError::Format {
            line,
            field,
            message: e.message().to_string(),
        }
    })?;

    let mut seen = BTreeSet::new();
    let mut datasets = Vec::with_capacity(raw.dataset.len());
    for spanned in raw.dataset {
        let line = Some(line_of(text, spanned.span().start));
        let d = spanned.into_inner();
        let fmt_err = |field: &str, message: String| RegistryError::Format {
            line,
            field: field.to_string(),
            message,
        };
        if !valid_id(&d.id) {
            return Err(fmt_err("id", format!("`{}` must match [a-z0-9_]+", d.id)));
        }
        if d.id == ALL_GROUP || TAXONOMY_GROUPS.contains(&d.id.as_str()) {
            return Err(fmt_err("id", format!("`{}` collides with a group name", d.id)));
        }
        if !seen.insert(d.id.clone()) {
            return Err(RegistryError::DuplicateDataset { id: d.id, line });
        }
        if !is_registered_adapter(&d.adapter_id) {
            return Err(fmt_err(
                "adapter_id",
                format!("`{}` is not a registered manifest adapter", d.adapter_id),
            ));
        }
        if d.category.is_processed_real() && d.group_exclusions.is_empty() {
            return Err(fmt_err(
                "group_exclusions",
                format!(
                    "dataset `{}` of category {:?} must declare group exclusions",
                    d.id, d.category
                ),
            ));
        }
        for g in &d.group_exclusions {
            if d.in_taxonomy_group(g).is_none() {
                return Err(fmt_err("group_exclusions", format!("`{g}` is not a taxonomy group")));
            }
        }
        for s in &d.fetch.sources {
            if s.checksum.is_empty() || !s.checksum.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(fmt_err(
                    "fetch.sources.checksum",
                    format!("source `{}` needs a hex checksum", s.url),
                ));
            }
        }
        datasets.push(d);
    }
    datasets.sort_by(|a, b| a.id.cmp(&b.id));

    let registry = Registry {
        report_groups: raw.report_groups,
        datasets,
    };
    for g in &registry.report_groups {
        if !registry.is_group_name(g) {
            return Err(RegistryError::Format {
                line: None,
                field: "report_groups".into(),
                message: format!("`{g}` is neither a taxonomy group nor a dataset id"),
            });
        }
    }
    Ok(registry)
}

impl Registry {
    pub fn builtin() -> Registry {
        load_registry(DEFAULT_REGISTRY_TOML).expect("shipped registry is valid")
    }

    pub fn from_path(path: &Path) -> Result<Registry, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        load_registry(&text)
    }

    pub fn get(&self, id: &str) -> Option<&DatasetDescriptor> {
        self.datasets
            .binary_search_by(|d| d.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.datasets[i])
    }

    pub fn len(&self) -> usize {
        self.datasets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.datasets.is_empty()
    }

    fn is_group_name(&self, name: &str) -> bool {
        name == ALL_GROUP || TAXONOMY_GROUPS.contains(&name) || self.get(name).is_some()
    }

    /// Every name accepted by [`select_group`]: `all`, the taxonomy groups,
    /// then dataset ids.
    pub fn group_names(&self) -> Vec<String> {
        std::iter::once(ALL_GROUP)
            .chain(TAXONOMY_GROUPS.iter().copied())
            .map(str::to_string)
            .chain(self.datasets.iter().map(|d| d.id.clone()))
            .collect()
    }

    /// Serialize back to the registry file format.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("registry serializes")
    }
}

/// Resolve a group name to its descriptors, in registry order.
///
/// Exclusion flags are not applied here; they only affect aggregation.
pub fn select_group<'r>(group_name: &str, registry: &'r Registry) -> Result<Vec<&'r DatasetDescriptor>, RegistryError> {
    if let Some(d) = registry.get(group_name) {
        return Ok(vec![d]);
    }
    if group_name != ALL_GROUP && !TAXONOMY_GROUPS.contains(&group_name) {
        return Err(RegistryError::UnknownGroup {
            name: group_name.to_string(),
            valid: registry.group_names(),
        });
    }
    Ok(registry
        .datasets
        .iter()
        .filter(|d| d.in_taxonomy_group(group_name).unwrap_or(false))
        .collect())
}
