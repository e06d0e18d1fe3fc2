use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use thiserror::Error;

use super::config::{ConfigError, EvalConfig, ScorerMode};
use crate::audio::{AudioBuffer, Preprocessor};
use crate::manifest::{read_manifest, Label, ManifestEntry, ManifestError, MANIFEST_FILE_NAME};
use crate::metrics::{MetricsError, MetricsReport};
use crate::registry::{select_group, sha256_hex, Registry, RegistryError};
use crate::report::{
    aggregate, emit_latex, emit_results, load_results, read_score_file, DatasetFailure, EmittedFiles, GroupSummary,
    ReportError, RunResult, ScoredClip, SCORES_DIR,
};
use crate::scorer::{
    builtin_scorer, ExternalScorer, ExternalScorerConfig, ScoreRecord, Scorer, ScorerError, ScorerInfo,
};

/// Overrides the data root (the directory form of `data.manifest_path`).
pub const DATA_ROOT_ENV: &str = "AUDDT_DATA_ROOT";
/// Carries `model.model_args` as JSON to an external scorer process.
pub const MODEL_ARGS_ENV: &str = "AUDDT_MODEL_ARGS";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("dataset `{dataset_id}` failed: {message}")]
    Dataset { dataset_id: String, message: String },
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    /// Preprocessing threads. Scoring is always serial.
    pub workers: usize,
    pub data_root_override: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: 1,
            data_root_override: None,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub result: RunResult,
    pub scores: BTreeMap<String, Vec<ScoredClip>>,
    pub files: EmittedFiles,
    pub latex_path: PathBuf,
}

/// Short hash of the canonical JSON form of the config.
pub fn config_hash(config: &EvalConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    sha256_hex(json.as_bytes())[..16].to_string()
}

/// Start the scorer a config asks for.
pub fn open_scorer(config: &EvalConfig) -> Result<Box<dyn Scorer>, ScorerError> {
    let data = &config.data;
    match config.model.scorer {
        ScorerMode::Builtin(kind) => Ok(Box::new(builtin_scorer(
            kind,
            data.target_sample_rate,
            Some(data.target_length),
        )?)),
        ScorerMode::External => {
            let m = &config.model;
            let mut ext = ExternalScorerConfig::new(m.scorer_command[0].clone());
            ext.args = m.scorer_command[1..].to_vec();
            let flags = [
                ("--wrapper", m.wrapper_path.clone()),
                ("--class", m.class_name.clone()),
                ("--checkpoint", m.checkpoint.as_ref().map(|p| p.display().to_string())),
                ("--device", m.device.clone()),
            ];
            for (flag, value) in flags {
                if let Some(v) = value {
                    ext.args.push(flag.to_string());
                    ext.args.push(v);
                }
            }
            if !m.model_args.is_null() {
                ext.env.insert(MODEL_ARGS_ENV.to_string(), m.model_args.to_string());
            }
            ext.handshake_timeout = m.handshake_timeout();
            ext.request_timeout = m.request_timeout();
            Ok(Box::new(ExternalScorer::spawn(&ext)?))
        }
    }
}

struct PlannedDataset {
    id: String,
    root: PathBuf,
    /// Pre-read entries (single-manifest mode) or the manifest to read.
    source: Result<Vec<ManifestEntry>, PathBuf>,
}

struct Plan {
    datasets: Vec<PlannedDataset>,
    groups: Vec<String>,
}

fn is_single_manifest(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn plan(config: &EvalConfig, registry: &Registry, options: &RunOptions) -> Result<Plan, RunError> {
    let manifest_path = &config.data.manifest_path;
    if is_single_manifest(manifest_path) {
        let entries = read_manifest(manifest_path)?;
        let root = manifest_path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf();
        let id = match entries.first() {
            Some(e) => e.dataset_id.clone(),
            None => root
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".to_string()),
        };
        if let Some(other) = entries.iter().find(|e| e.dataset_id != id) {
            return Err(ConfigError::Invalid {
                key: "data.manifest_path".into(),
                message: format!(
                    "a single manifest must hold one dataset, found `{id}` and `{}`",
                    other.dataset_id
                ),
            }
            .into());
        }
        let groups = if registry.get(&id).is_some() {
            vec![id.clone()]
        } else {
            Vec::new()
        };
        return Ok(Plan {
            datasets: vec![PlannedDataset {
                id,
                root,
                source: Ok(entries),
            }],
            groups,
        });
    }

    let data_root = options.data_root_override.as_deref().unwrap_or(manifest_path);
    let group = &config.data.group_name;
    let selected = select_group(group, registry)?;
    if selected.is_empty() {
        return Err(ConfigError::Invalid {
            key: "data.group_name".into(),
            message: format!("group `{group}` selects no datasets"),
        }
        .into());
    }
    let datasets = selected
        .iter()
        .map(|d| {
            let root = data_root.join(&d.id);
            PlannedDataset {
                id: d.id.clone(),
                source: Err(root.join(MANIFEST_FILE_NAME)),
                root,
            }
        })
        .collect();
    let mut groups = vec![group.clone()];
    for g in &registry.report_groups {
        if !groups.contains(g) {
            groups.push(g.clone());
        }
    }
    Ok(Plan { datasets, groups })
}

fn check_compatible(info: &ScorerInfo, config: &EvalConfig) -> Result<(), RunError> {
    let data = &config.data;
    let mismatch = |message: String| {
        RunError::from(ConfigError::Invalid {
            key: "data.data_args".into(),
            message,
        })
    };
    if info.expected_sample_rate_hz != data.target_sample_rate {
        return Err(mismatch(format!(
            "scorer `{}` expects {} Hz, config asks for {} Hz",
            info.name, info.expected_sample_rate_hz, data.target_sample_rate
        )));
    }
    if let Some(n) = info.expected_length_samples {
        if n != data.target_length {
            return Err(mismatch(format!(
                "scorer `{}` expects {n} samples, config asks for {}",
                info.name, data.target_length
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Error)]
enum DatasetError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

fn load_clip(pre: &Preprocessor, root: &Path, entry: &ManifestEntry) -> Result<AudioBuffer, String> {
    let path = entry.resolve(root);
    let bytes = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    pre.process_bytes(&bytes)
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn evaluate_dataset(
    planned: PlannedDataset,
    config: &EvalConfig,
    pre: &Preprocessor,
    pool: &rayon::ThreadPool,
    scorer: &mut dyn Scorer,
) -> Result<(MetricsReport, Vec<ScoredClip>), DatasetError> {
    let entries = match planned.source {
        Ok(entries) => entries,
        Err(path) => read_manifest(&path)?,
    };
    let mut clips = Vec::with_capacity(entries.len());
    let mut skipped = 0;
    for batch in entries.chunks(config.evaluation.batch_size) {
        let audio: Vec<Result<AudioBuffer, String>> =
            pool.install(|| batch.par_iter().map(|e| load_clip(pre, &planned.root, e)).collect());
        for (entry, audio) in batch.iter().zip(audio) {
            let audio = match audio {
                Ok(a) => a,
                Err(message) => {
                    log::warn!("{}: skipping `{}`: {message}", planned.id, entry.entry_id);
                    skipped += 1;
                    continue;
                }
            };
            let score = match scorer.score(&entry.entry_id, &audio) {
                Err(ScorerError::Rejected { message, .. }) => {
                    log::warn!("{}: scorer rejected `{}`: {message}", planned.id, entry.entry_id);
                    skipped += 1;
                    continue;
                }
                other => other?,
            };
            let record = ScoreRecord::new(entry.entry_id.clone(), score)?;
            clips.push(ScoredClip {
                entry_id: record.entry_id,
                score: record.score,
                label: entry.label,
            });
        }
    }
    let report = report_for(&planned.id, &clips, config.evaluation.threshold, skipped)?;
    Ok((report, clips))
}

fn report_for(id: &str, clips: &[ScoredClip], threshold: f64, skipped: usize) -> Result<MetricsReport, MetricsError> {
    let scores: Vec<f64> = clips.iter().map(|c| c.score).collect();
    let labels: Vec<Label> = clips.iter().map(|c| c.label).collect();
    MetricsReport::compute(id, &scores, &labels, threshold, skipped)
}

fn summarize(
    reports: &BTreeMap<String, MetricsReport>,
    registry: &Registry,
    groups: &[String],
) -> Result<Vec<GroupSummary>, ReportError> {
    let known: BTreeMap<String, MetricsReport> = reports
        .iter()
        .filter(|(id, _)| registry.get(id).is_some())
        .map(|(id, r)| (id.clone(), r.clone()))
        .collect();
    let mut out = Vec::new();
    for g in groups {
        match aggregate(&known, registry, std::slice::from_ref(g)) {
            Ok(mut s) => out.append(&mut s),
            Err(ReportError::EmptyGroup(g)) => log::info!("group `{g}` has no evaluated members; no summary"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_latex(result: &RunResult, path: &Path) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, emit_latex(result)).map_err(io_err(path))
}

/// Evaluate every dataset the config selects and write all outputs.
///
/// Dataset-level problems (unreadable manifest, scorer errors) are recorded
/// as failures and the run continues unless `fail_fast` is set. Unreadable
/// clips and clips the scorer rejects are skipped and counted.
pub fn run_evaluation(
    config: &EvalConfig,
    registry: &Registry,
    scorer: &mut dyn Scorer,
    options: &RunOptions,
) -> Result<RunOutcome, RunError> {
    check_compatible(scorer.info(), config)?;
    let plan = plan(config, registry, options)?;
    let pre = Preprocessor::new(config.data.target_sample_rate, config.data.target_length).map_err(|e| {
        ConfigError::Invalid {
            key: "data.data_args".into(),
            message: e.to_string(),
        }
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;

    let mut reports = BTreeMap::new();
    let mut scores = BTreeMap::new();
    let mut failures = Vec::new();
    for planned in plan.datasets {
        let id = planned.id.clone();
        log::info!("evaluating {id}");
        match evaluate_dataset(planned, config, &pre, &pool, scorer) {
            Ok((report, clips)) => {
                reports.insert(id.clone(), report);
                scores.insert(id, clips);
            }
            Err(e) if config.evaluation.fail_fast => {
                return Err(RunError::Dataset {
                    dataset_id: id,
                    message: e.to_string(),
                })
            }
            Err(e) => {
                log::error!("{id}: {e}");
                failures.push(DatasetFailure {
                    dataset_id: id,
                    error: e.to_string(),
                });
            }
        }
    }

    let summaries = summarize(&reports, registry, &plan.groups)?;
    let config_hash = config_hash(config);
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let result = RunResult {
        run_id: format!("{started}-{config_hash}"),
        config_hash,
        config_echo: serde_json::to_value(config).expect("config serializes"),
        scorer_info: scorer.info().clone(),
        reports,
        summaries,
        failures,
    };
    let files = emit_results(&result, &scores, &config.evaluation.results_dir)?;
    let latex_path = config.latex_path();
    write_latex(&result, &latex_path)?;
    Ok(RunOutcome {
        result,
        scores,
        files,
        latex_path,
    })
}

/// Rebuild a run's results from its score files alone: metrics are
/// recomputed per dataset and the same groups re-aggregated.
pub fn regenerate_report(
    results_dir: &Path,
    registry: &Registry,
) -> Result<(RunResult, BTreeMap<String, Vec<ScoredClip>>), RunError> {
    let mut result = load_results(results_dir)?;
    let mut reports = BTreeMap::new();
    let mut scores = BTreeMap::new();
    for (id, stored) in &result.reports {
        let path = results_dir.join(SCORES_DIR).join(format!("{id}.csv"));
        let clips = read_score_file(&path)?;
        let report =
            report_for(id, &clips, stored.threshold_used, stored.skipped_files).map_err(|e| ReportError::Format {
                path: path.clone(),
                message: e.to_string(),
            })?;
        reports.insert(id.clone(), report);
        scores.insert(id.clone(), clips);
    }
    let groups: Vec<String> = result.summaries.iter().map(|s| s.group_name.clone()).collect();
    result.summaries = summarize(&reports, registry, &groups)?;
    result.reports = reports;
    Ok((result, scores))
}
