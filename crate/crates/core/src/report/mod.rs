//! Group aggregation and run outputs.
//!
//! Group statistics are unweighted over member datasets: each dataset counts
//! once regardless of its clip count. Datasets flagged with an exclusion for a
//! group still appear in that group's `per_dataset` map but not in its
//! statistics.

mod latex;
mod results;

pub use latex::emit_latex;
pub use results::{
    emit_results, load_results, plot_rows, read_score_file, write_score_file, EmittedFiles, PlotRow, ScoredClip,
    PLOT_DATA_FILE, RESULTS_FILE, RUN_META_FILE, SCORES_DIR,
};

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricsReport;
use crate::registry::{select_group, Registry, RegistryError};
use crate::scorer::ScorerInfo;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("group `{0}` has no member datasets after exclusions")]
    EmptyGroup(String),
    #[error("report for dataset `{0}` which is not in the registry")]
    UnknownDataset(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("report I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed report file {path}: {message}")]
    Format { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group_name: String,
    pub member_dataset_ids: Vec<String>,
    pub excluded_dataset_ids: Vec<String>,
    pub mean_accuracy: Option<f64>,
    pub median_accuracy: Option<f64>,
    pub per_dataset: BTreeMap<String, MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFailure {
    pub dataset_id: String,
    pub error: String,
}

/// Everything a run produced. `run_id` carries a timestamp and lives in the
/// run metadata file so the results file stays byte-stable across reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    #[serde(skip)]
    pub run_id: String,
    pub config_hash: String,
    pub config_echo: serde_json::Value,
    pub scorer_info: ScorerInfo,
    pub reports: BTreeMap<String, MetricsReport>,
    pub summaries: Vec<GroupSummary>,
    pub failures: Vec<DatasetFailure>,
}

impl RunResult {
    /// Median accuracy over every evaluated dataset, the reference for the
    /// below-median flag.
    pub fn overall_median_accuracy(&self) -> Option<f64> {
        median(self.reports.values().filter_map(|r| r.accuracy).collect())
    }
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Median; the mean of the two middle values for even counts.
pub fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}

/// Summarize per-dataset reports over taxonomy groups.
pub fn aggregate(
    reports: &BTreeMap<String, MetricsReport>,
    registry: &Registry,
    groups: &[String],
) -> Result<Vec<GroupSummary>, ReportError> {
    if let Some(unknown) = reports.keys().find(|id| registry.get(id).is_none()) {
        return Err(ReportError::UnknownDataset(unknown.clone()));
    }
    groups
        .iter()
        .map(|group| {
            let mut members = Vec::new();
            let mut excluded = Vec::new();
            let mut per_dataset = BTreeMap::new();
            for d in select_group(group, registry)? {
                let Some(report) = reports.get(&d.id) else { continue };
                if d.is_excluded_from(group) {
                    excluded.push(d.id.clone());
                } else {
                    members.push(d.id.clone());
                }
                per_dataset.insert(d.id.clone(), report.clone());
            }
            if members.is_empty() {
                return Err(ReportError::EmptyGroup(group.clone()));
            }
            let accuracies: Vec<f64> = members.iter().filter_map(|id| reports[id].accuracy).collect();
            Ok(GroupSummary {
                group_name: group.clone(),
                member_dataset_ids: members,
                excluded_dataset_ids: excluded,
                mean_accuracy: mean(&accuracies),
                median_accuracy: median(accuracies),
                per_dataset,
            })
        })
        .collect()
}
