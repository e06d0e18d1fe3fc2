//! Evaluation config: a YAML document with `model`, `data` and
//! `evaluation_settings` sections.
//!
//! ```yaml
//! model:
//!   path: models/detector_wrapper.py
//!   class_name: AudioDeepfakeDetector
//!   checkpoint: models/CHECKPOINT.pth
//!   device: 'cuda:0'
//!   model_args: {...}            # opaque, passed through to the scorer
//!   scorer: external             # or builtin:energy, builtin:constant:0.5, ...
//! data:
//!   manifest_path: data/
//!   group_name: 'all'
//!   data_args:
//!     target_sample_rate: 16000
//!     target_length: 64000
//! evaluation_settings:
//!   results_dir: results
//!   batch_size: 256
//!   latex_output_path: results/table.tex
//!   threshold: 0.5               # optional
//!   fail_fast: false             # optional
//! ```
//!
//! Unknown keys produce warnings. `model.wrapper_path` and `evaluation` are
//! accepted as aliases of `model.path` and `evaluation_settings`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_yaml::{Mapping, Value};
use thiserror::Error;

use crate::metrics::DEFAULT_THRESHOLD;
use crate::scorer::{BuiltinKind, DEFAULT_HANDSHAKE_TIMEOUT, DEFAULT_REQUEST_TIMEOUT};

pub const DEFAULT_SCORER_COMMAND: &str = "auddt-scorer";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config is not a valid YAML document: {0}")]
    Syntax(String),
    #[error("missing required config key `{0}`")]
    Missing(String),
    #[error("config key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScorerMode {
    External,
    Builtin(BuiltinKind),
}

impl fmt::Display for ScorerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScorerMode::External => f.write_str("external"),
            ScorerMode::Builtin(k) => write!(f, "builtin:{k}"),
        }
    }
}

impl FromStr for ScorerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "external" {
            return Ok(ScorerMode::External);
        }
        match s.strip_prefix("builtin:") {
            Some(kind) => kind.parse().map(ScorerMode::Builtin).map_err(|e| e.to_string()),
            None => Err(format!("`{s}` is neither `external` nor `builtin:<kind>`")),
        }
    }
}

impl Serialize for ScorerMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScorerMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub scorer: ScorerMode,
    pub wrapper_path: Option<String>,
    pub class_name: Option<String>,
    pub checkpoint: Option<PathBuf>,
    pub device: Option<String>,
    pub model_args: serde_json::Value,
    /// Program (and leading arguments) that speaks the scorer protocol.
    pub scorer_command: Vec<String>,
    pub handshake_timeout_s: f64,
    pub request_timeout_s: f64,
}

impl ModelConfig {
    pub fn handshake_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.handshake_timeout_s)
    }

    pub fn request_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.request_timeout_s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub manifest_path: PathBuf,
    pub group_name: String,
    pub target_sample_rate: u32,
    pub target_length: usize,
    pub registry_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub results_dir: PathBuf,
    pub batch_size: usize,
    pub latex_output_path: Option<PathBuf>,
    pub threshold: f64,
    pub fail_fast: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub model: ModelConfig,
    pub data: DataConfig,
    pub evaluation: EvaluationConfig,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl EvalConfig {
    pub fn latex_path(&self) -> PathBuf {
        self.evaluation
            .latex_output_path
            .clone()
            .unwrap_or_else(|| self.evaluation.results_dir.join("table.tex"))
    }
}

/// Walks one YAML mapping, tracking which keys were consumed.
struct Section<'a> {
    prefix: String,
    map: Option<&'a Mapping>,
    used: Vec<String>,
}

impl<'a> Section<'a> {
    fn new(prefix: &str, value: Option<&'a Value>) -> Result<Self, ConfigError> {
        let map = match value {
            None | Some(Value::Null) => None,
            Some(Value::Mapping(m)) => Some(m),
            Some(_) => {
                return Err(ConfigError::Invalid {
                    key: prefix.to_string(),
                    message: "expected a mapping".into(),
                })
            }
        };
        Ok(Section {
            prefix: prefix.to_string(),
            map,
            used: Vec::new(),
        })
    }

    fn key(&self, k: &str) -> String {
        if self.prefix.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.prefix)
        }
    }

    fn get(&mut self, names: &[&str]) -> Option<(String, &'a Value)> {
        let map = self.map?;
        for n in names {
            if let Some(v) = map.get(*n) {
                self.used.push(n.to_string());
                if v.is_null() {
                    return None;
                }
                return Some((self.key(n), v));
            }
        }
        None
    }

    fn string(&mut self, names: &[&str]) -> Result<Option<String>, ConfigError> {
        match self.get(names) {
            None => Ok(None),
            Some((_, Value::String(s))) => Ok(Some(s.clone())),
            Some((_, Value::Number(n))) => Ok(Some(n.to_string())),
            Some((_, Value::Bool(b))) => Ok(Some(b.to_string())),
            Some((key, _)) => Err(ConfigError::Invalid {
                key,
                message: "expected a string".into(),
            }),
        }
    }

    fn positive_int(&mut self, names: &[&str]) -> Result<Option<u64>, ConfigError> {
        match self.get(names) {
            None => Ok(None),
            Some((key, v)) => match v.as_i64() {
                Some(n) if n > 0 => Ok(Some(n as u64)),
                _ => Err(ConfigError::Invalid {
                    key,
                    message: format!("expected a positive integer, got {}", yaml_inline(v)),
                }),
            },
        }
    }

    fn float(&mut self, names: &[&str]) -> Result<Option<f64>, ConfigError> {
        match self.get(names) {
            None => Ok(None),
            Some((key, v)) => v.as_f64().map(Some).ok_or_else(|| ConfigError::Invalid {
                key,
                message: "expected a number".into(),
            }),
        }
    }

    fn boolean(&mut self, names: &[&str]) -> Result<Option<bool>, ConfigError> {
        match self.get(names) {
            None => Ok(None),
            Some((key, v)) => v.as_bool().map(Some).ok_or_else(|| ConfigError::Invalid {
                key,
                message: "expected true or false".into(),
            }),
        }
    }

    fn unknown_keys(&self, warnings: &mut Vec<String>) {
        let Some(map) = self.map else { return };
        for k in map.keys() {
            let name = k.as_str().map(str::to_string).unwrap_or_else(|| yaml_inline(k));
            if !self.used.contains(&name) {
                warnings.push(format!("unknown config key `{}` ignored", self.key(&name)));
            }
        }
    }
}

fn yaml_inline(v: &Value) -> String {
    serde_yaml::to_string(v)
        .map(|s| s.trim().to_string())
        .unwrap_or_default()
}

fn required<T>(v: Option<T>, key: &str) -> Result<T, ConfigError> {
    v.ok_or_else(|| ConfigError::Missing(key.to_string()))
}

pub fn parse_config(text: &str) -> Result<EvalConfig, ConfigError> {
    let doc: Value = serde_yaml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let mut warnings = Vec::new();
    let mut root = Section::new("", Some(&doc))?;

    let mut model = Section::new("model", root.get(&["model"]).map(|(_, v)| v))?;
    let scorer = match model.string(&["scorer"])? {
        None => ScorerMode::External,
        Some(s) => s.parse().map_err(|message| ConfigError::Invalid {
            key: "model.scorer".into(),
            message,
        })?,
    };
    let wrapper_path = model.string(&["path", "wrapper_path"])?;
    let class_name = model.string(&["class_name"])?;
    let checkpoint = model.string(&["checkpoint"])?.map(PathBuf::from);
    let device = model.string(&["device"])?;
    let model_args = match model.get(&["model_args"]) {
        None => serde_json::Value::Null,
        Some((key, v)) => serde_json::to_value(v).map_err(|e| ConfigError::Invalid {
            key,
            message: e.to_string(),
        })?,
    };
    let scorer_command = match model.get(&["scorer_command"]) {
        None => vec![DEFAULT_SCORER_COMMAND.to_string()],
        Some((_, Value::String(s))) => s.split_whitespace().map(str::to_string).collect(),
        Some((key, Value::Sequence(items))) => items
            .iter()
            .map(|i| {
                i.as_str().map(str::to_string).ok_or_else(|| ConfigError::Invalid {
                    key: key.clone(),
                    message: "expected a list of strings".into(),
                })
            })
            .collect::<Result<_, _>>()?,
        Some((key, _)) => {
            return Err(ConfigError::Invalid {
                key,
                message: "expected a string or list of strings".into(),
            })
        }
    };
    if scorer_command.is_empty() {
        return Err(ConfigError::Invalid {
            key: "model.scorer_command".into(),
            message: "is empty".into(),
        });
    }
    let handshake_timeout_s = model
        .float(&["handshake_timeout_s"])?
        .unwrap_or(DEFAULT_HANDSHAKE_TIMEOUT.as_secs_f64());
    let request_timeout_s = model
        .float(&["request_timeout_s"])?
        .unwrap_or(DEFAULT_REQUEST_TIMEOUT.as_secs_f64());
    for (key, t) in [
        ("model.handshake_timeout_s", handshake_timeout_s),
        ("model.request_timeout_s", request_timeout_s),
    ] {
        if !(t.is_finite() && t > 0.0) {
            return Err(ConfigError::Invalid {
                key: key.into(),
                message: "must be a positive number of seconds".into(),
            });
        }
    }
    if scorer == ScorerMode::External {
        if model.map.is_none() {
            return Err(ConfigError::Missing("model".into()));
        }
        required(wrapper_path.as_ref(), "model.path")?;
        required(checkpoint.as_ref(), "model.checkpoint")?;
    }
    model.unknown_keys(&mut warnings);

    let mut data = Section::new("data", root.get(&["data"]).map(|(_, v)| v))?;
    let manifest_path = PathBuf::from(required(data.string(&["manifest_path"])?, "data.manifest_path")?);
    let group_name = data.string(&["group_name"])?.unwrap_or_else(|| "all".to_string());
    let registry_path = data.string(&["registry_path"])?.map(PathBuf::from);
    let mut data_args = Section::new("data.data_args", data.get(&["data_args"]).map(|(_, v)| v))?;
    let target_sample_rate = required(
        data_args.positive_int(&["target_sample_rate"])?,
        "data.data_args.target_sample_rate",
    )?;
    let target_sample_rate = u32::try_from(target_sample_rate).map_err(|_| ConfigError::Invalid {
        key: "data.data_args.target_sample_rate".into(),
        message: "too large".into(),
    })?;
    let target_length = required(
        data_args.positive_int(&["target_length"])?,
        "data.data_args.target_length",
    )? as usize;
    data_args.unknown_keys(&mut warnings);
    data.unknown_keys(&mut warnings);

    let mut eval = Section::new(
        "evaluation_settings",
        root.get(&["evaluation_settings", "evaluation"]).map(|(_, v)| v),
    )?;
    let results_dir = PathBuf::from(required(
        eval.string(&["results_dir"])?,
        "evaluation_settings.results_dir",
    )?);
    let batch_size = match eval.get(&["batch_size"]) {
        None => return Err(ConfigError::Missing("evaluation_settings.batch_size".into())),
        Some((key, v)) => match v.as_i64() {
            Some(n) if n > 0 => n as usize,
            _ => {
                return Err(ConfigError::Invalid {
                    key,
                    message: format!("batch_size must be a positive integer, got {}", yaml_inline(v)),
                })
            }
        },
    };
    let latex_output_path = eval.string(&["latex_output_path"])?.map(PathBuf::from);
    let threshold = eval.float(&["threshold"])?.unwrap_or(DEFAULT_THRESHOLD);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ConfigError::Invalid {
            key: "evaluation_settings.threshold".into(),
            message: format!("{threshold} is outside [0, 1]"),
        });
    }
    let fail_fast = eval.boolean(&["fail_fast"])?.unwrap_or(false);
    eval.unknown_keys(&mut warnings);
    root.unknown_keys(&mut warnings);

    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(EvalConfig {
        model: ModelConfig {
            scorer,
            wrapper_path,
            class_name,
            checkpoint,
            device,
            model_args,
            scorer_command,
            handshake_timeout_s,
            request_timeout_s,
        },
        data: DataConfig {
            manifest_path,
            group_name,
            target_sample_rate,
            target_length,
            registry_path,
        },
        evaluation: EvaluationConfig {
            results_dir,
            batch_size,
            latex_output_path,
            threshold,
            fail_fast,
        },
        warnings,
    })
}
