//! On-disk run outputs:
//!
//! ```text
//! <results_dir>/results.json        every report, summary and failure (stable key order)
//! <results_dir>/run_meta.json       run id and start time
//! <results_dir>/plot_data.csv       dataset_id,accuracy,below_median
//! <results_dir>/scores/<id>.csv     entry_id,score,label
//! ```

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ReportError, RunResult};
use crate::manifest::Label;

pub const RESULTS_FILE: &str = "results.json";
pub const RUN_META_FILE: &str = "run_meta.json";
pub const PLOT_DATA_FILE: &str = "plot_data.csv";
pub const SCORES_DIR: &str = "scores";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredClip {
    pub entry_id: String,
    pub score: f64,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub dataset_id: String,
    pub accuracy: Option<f64>,
    pub below_median: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub results: PathBuf,
    pub plot_data: PathBuf,
    pub score_files: Vec<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct RunMeta {
    run_id: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err(path))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

/// Rows for a per-dataset bar chart; `below_median` is relative to the median
/// accuracy over all evaluated datasets.
pub fn plot_rows(result: &RunResult) -> Vec<PlotRow> {
    let median = result.overall_median_accuracy();
    result
        .reports
        .iter()
        .map(|(id, r)| PlotRow {
            dataset_id: id.clone(),
            accuracy: r.accuracy,
            below_median: matches!((r.accuracy, median), (Some(a), Some(m)) if a < m),
        })
        .collect()
}

pub fn write_score_file(path: &Path, clips: &[ScoredClip]) -> Result<(), ReportError> {
    let mut text = String::from("entry_id,score,label\n");
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for c in clips {
        w.write_record([c.entry_id.as_str(), &c.score.to_string(), c.label.as_str()])
            .map_err(|e| ReportError::Format {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
    }
    let body = w.into_inner().map_err(|e| ReportError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push_str(std::str::from_utf8(&body).expect("csv output is UTF-8"));
    write_atomic(path, text.as_bytes())
}

pub fn read_score_file(path: &Path) -> Result<Vec<ScoredClip>, ReportError> {
    let bad = |message: String| ReportError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["entry_id", "score", "label"] {
        return Err(bad("header must be entry_id,score,label".into()));
    }
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            Ok(ScoredClip {
                entry_id: rec[0].to_string(),
                score: rec[1].parse().map_err(|e| bad(format!("score `{}`: {e}", &rec[1])))?,
                label: rec[2].parse().map_err(bad)?,
            })
        })
        .collect()
}

/// Write the results file, run metadata, plot data and one score file per
/// dataset in `scores`.
pub fn emit_results(
    result: &RunResult,
    scores: &BTreeMap<String, Vec<ScoredClip>>,
    results_dir: &Path,
) -> Result<EmittedFiles, ReportError> {
    std::fs::create_dir_all(results_dir).map_err(io_err(results_dir))?;

    let results = results_dir.join(RESULTS_FILE);
    let mut json = serde_json::to_string_pretty(result).expect("run results serialize");
    json.push('\n');
    write_atomic(&results, json.as_bytes())?;

    if !result.run_id.is_empty() {
        let meta = serde_json::to_string_pretty(&RunMeta {
            run_id: result.run_id.clone(),
        })
        .expect("run metadata serializes");
        write_atomic(&results_dir.join(RUN_META_FILE), meta.as_bytes())?;
    }

    let mut score_files = Vec::new();
    for (id, clips) in scores {
        let path = results_dir.join(SCORES_DIR).join(format!("{id}.csv"));
        write_score_file(&path, clips)?;
        score_files.push(path);
    }

    let plot_data = results_dir.join(PLOT_DATA_FILE);
    let mut text = String::from("dataset_id,accuracy,below_median\n");
    for row in plot_rows(result) {
        let acc = row.accuracy.map(|a| a.to_string()).unwrap_or_default();
        text.push_str(&format!("{},{},{}\n", row.dataset_id, acc, row.below_median));
    }
    write_atomic(&plot_data, text.as_bytes())?;

    Ok(EmittedFiles {
        results,
        plot_data,
        score_files,
    })
}

/// Load `results.json` (and the run id, if the metadata file exists).
pub fn load_results(results_dir: &Path) -> Result<RunResult, ReportError> {
    let path = results_dir.join(RESULTS_FILE);
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut result: RunResult = serde_json::from_str(&text).map_err(|e| ReportError::Format {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let meta_path = results_dir.join(RUN_META_FILE);
    if let Ok(meta) = std::fs::read_to_string(&meta_path) {
        if let Ok(meta) = serde_json::from_str::<RunMeta>(&meta) {
            result.run_id = meta.run_id;
        }
    }
    Ok(result)
}
