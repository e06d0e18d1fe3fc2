//! Reference implementations used as oracles by the integration tests.
//! Deliberately naive: quadratic counting, no sorting tricks.

#![allow(dead_code)]

use std::path::Path;

use auddt_core::manifest::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// P(spoof > bonafide) + P(tie)/2 by direct pair counting.
pub fn auc_oracle(scores: &[f64], labels: &[Label]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &s) in scores.iter().enumerate() {
        if labels[i] != Label::Spoof {
            continue;
        }
        for (j, &b) in scores.iter().enumerate() {
            if labels[j] != Label::Bonafide {
                continue;
            }
            pairs += 1.0;
            if s > b {
                wins += 1.0;
            } else if s == b {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// (FPR, FNR) at threshold `t`, predicting spoof iff score >= t.
pub fn rates_at(scores: &[f64], labels: &[Label], t: f64) -> (f64, f64) {
    let (mut fp, mut neg, mut fn_, mut pos) = (0.0, 0.0, 0.0, 0.0);
    for (&s, &l) in scores.iter().zip(labels) {
        match l {
            Label::Bonafide => {
                neg += 1.0;
                if s >= t {
                    fp += 1.0;
                }
            }
            Label::Spoof => {
                pos += 1.0;
                if s < t {
                    fn_ += 1.0;
                }
            }
        }
    }
    (fp / neg, fn_ / pos)
}

/// The sweep points: +inf anchor, then every distinct score descending.
pub fn sweep(scores: &[f64], labels: &[Label]) -> Vec<(f64, f64, f64)> {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut out = vec![(f64::INFINITY, 0.0, 1.0)];
    for t in thresholds {
        let (fpr, fnr) = rates_at(scores, labels, t);
        out.push((t, fpr, fnr));
    }
    out
}

/// Minimum over the piecewise-linear sweep path of max(FPR, FNR). Returns
/// the value and the threshold range spanned by every segment attaining it
/// (the minimum can sit on a plateau).
pub fn eer_oracle(scores: &[f64], labels: &[Label]) -> (f64, (f64, f64)) {
    let pts = sweep(scores, labels);
    let segment_min = |w: &[(f64, f64, f64)]| {
        let (_, x0, y0) = w[0];
        let (_, x1, y1) = w[1];
        let mut m = x0.max(y0).min(x1.max(y1));
        let (h0, h1) = (y0 - x0, y1 - x1);
        if h0 > 0.0 && h1 < 0.0 {
            let s = h0 / (h0 - h1);
            m = m.min(x0 + s * (x1 - x0));
        }
        m
    };
    let best = pts.windows(2).map(segment_min).fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for w in pts.windows(2) {
        if segment_min(w) <= best + 1e-12 {
            lo = lo.min(w[1].0);
            hi = hi.max(w[0].0);
        }
    }
    (best, (lo, hi))
}

/// Random scored instance with both classes present. Scores are multiples
/// of 1e-6 so strictly monotone maps keep them distinct; a coarse grid is
/// used half the time to force ties.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize) -> (Vec<f64>, Vec<Label>) {
    let n = rng.gen_range(2..=max_n);
    let levels: u32 = if rng.gen_bool(0.5) {
        rng.gen_range(2..12)
    } else {
        1_000_000
    };
    let mut labels: Vec<Label> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                Label::Spoof
            } else {
                Label::Bonafide
            }
        })
        .collect();
    labels[0] = Label::Spoof;
    labels[1] = Label::Bonafide;
    let shift = rng.gen_range(0.0..0.4);
    let scores = labels
        .iter()
        .map(|l| {
            let mut x: f64 = rng.gen_range(0.0..1.0);
            if *l == Label::Spoof {
                x = (x + shift).min(1.0);
            }
            let q = (x * levels as f64).round() / levels as f64;
            (q * 1e6).round() / 1e6
        })
        .collect();
    (scores, labels)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Magnitude spectrum of a Hann-windowed signal (bins 0..=n/2).
pub fn hann_spectrum(x: &[f32]) -> Vec<f64> {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos();
            Complex::new(v as f64 * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm()).collect()
}

pub fn sine(freq: f64, rate: u32, n: usize, amplitude: f64) -> Vec<f32> {
    (0..n)
        .map(|i| (amplitude * (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin()) as f32)
        .collect()
}

/// Minimal 16-bit PCM WAV writer, independent of the decoder under test.
pub fn wav_pcm16(samples: &[i16], rate: u32, channels: u16) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::new();
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * channels as u32 * 2).to_le_bytes());
    out.extend_from_slice(&(channels * 2).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn write(path: &Path, bytes: &[u8]) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, bytes).unwrap();
}

fn fixture_report(id: &str, counts: (usize, usize), metrics: [Option<f64>; 5]) -> auddt_core::MetricsReport {
    let [eer, auc, accuracy, tpr, tnr] = metrics;
    auddt_core::MetricsReport {
        dataset_id: id.to_string(),
        n_bonafide: counts.0,
        n_spoof: counts.1,
        eer,
        eer_threshold: eer.map(|_| 0.5),
        auc,
        threshold_used: 0.5,
        accuracy,
        tpr,
        tnr,
        skipped_files: 0,
    }
}

/// The run result behind `tests/golden/table.tex`.
pub fn fixture_run_result() -> auddt_core::RunResult {
    let reports = [
        fixture_report(
            "asvspoof2019_la",
            (30, 70),
            [Some(0.05), Some(0.98761), Some(0.91234), Some(0.9), Some(0.94)],
        ),
        fixture_report(
            "diffuse_or_confuse",
            (10, 10),
            [Some(0.0), Some(1.0), Some(1.0), Some(1.0), Some(1.0)],
        ),
        fixture_report(
            "for_norm",
            (50, 50),
            [Some(1.0 / 3.0), Some(0.5), Some(0.5), Some(0.4), Some(0.6)],
        ),
        fixture_report("jvnv", (20, 0), [None, None, Some(0.85), None, Some(0.85)]),
    ];
    auddt_core::RunResult {
        run_id: "0-fixture".into(),
        config_hash: "0000000000000000".into(),
        config_echo: serde_json::json!({}),
        scorer_info: auddt_core::ScorerInfo {
            name: "fixture".into(),
            protocol_version: 1,
            expected_sample_rate_hz: 16000,
            expected_length_samples: Some(64000),
        },
        reports: reports.into_iter().map(|r| (r.dataset_id.clone(), r)).collect(),
        summaries: Vec::new(),
        failures: Vec::new(),
    }
}

pub fn golden_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Checks a LaTeX fragment against a small tabular grammar:
///
/// ```text
/// doc  := "\begin{tabular}{" spec "}" NL body "\end{tabular}" NL
/// body := ( "\hline" NL | row " \\" NL )*
/// row  := cell ( " & " cell )*        with exactly len(spec) cells
/// cell := text with every special character escaped
/// ```
pub fn validate_tabular(doc: &str) -> Result<(), String> {
    let mut lines = doc.lines();
    let first = lines.next().ok_or("empty document")?;
    let spec = first
        .strip_prefix("\\begin{tabular}{")
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| format!("bad opening line `{first}`"))?;
    if spec.is_empty() || !spec.chars().all(|c| matches!(c, 'l' | 'r' | 'c' | '|')) {
        return Err(format!("bad column spec `{spec}`"));
    }
    let columns = spec.chars().filter(|c| *c != '|').count();
    if !doc.ends_with('\n') {
        return Err("missing final newline".into());
    }
    let body: Vec<&str> = lines.collect();
    let (last, body) = body.split_last().ok_or("missing \\end{tabular}")?;
    if *last != "\\end{tabular}" {
        return Err(format!("bad closing line `{last}`"));
    }
    let mut rows = 0;
    for line in body {
        if *line == "\\hline" {
            continue;
        }
        let row = line
            .strip_suffix(" \\\\")
            .ok_or_else(|| format!("row without terminator: `{line}`"))?;
        let cells = split_cells(row)?;
        if cells.len() != columns {
            return Err(format!("{} cells, expected {columns}: `{line}`", cells.len()));
        }
        rows += 1;
    }
    if rows == 0 {
        return Err("no rows".into());
    }
    Ok(())
}

fn split_cells(row: &str) -> Result<Vec<String>, String> {
    let mut cells = vec![String::new()];
    let mut chars = row.chars().peekable();
    let mut depth = 0i32;
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                let next = chars.next().ok_or("dangling backslash")?;
                let cell = cells.last_mut().unwrap();
                cell.push(c);
                cell.push(next);
                if next.is_ascii_alphabetic() {
                    while let Some(&n) = chars.peek() {
                        if !n.is_ascii_alphabetic() {
                            break;
                        }
                        cell.push(n);
                        chars.next();
                    }
                }
            }
            '{' => {
                depth += 1;
                cells.last_mut().unwrap().push(c);
            }
            '}' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced braces".into());
                }
                cells.last_mut().unwrap().push(c);
            }
            '&' => cells.push(String::new()),
            '_' | '%' | '$' | '#' | '^' | '~' => return Err(format!("unescaped `{c}` in `{row}`")),
            _ => cells.last_mut().unwrap().push(c),
        }
    }
    if depth != 0 {
        return Err("unbalanced braces".into());
    }
    Ok(cells.into_iter().map(|c| c.trim().to_string()).collect())
}

/// Generate and prepare each corpus under `data_root`, returning a registry
/// that holds exactly their descriptors.
pub fn synth_workspace(
    data_root: &Path,
    specs: &[auddt_core::synthcorpus::CorpusSpec],
) -> auddt_core::registry::Registry {
    let mut datasets = Vec::new();
    for spec in specs {
        auddt_core::synthcorpus::generate_corpus(spec, data_root).unwrap();
        let desc = spec.descriptor();
        let prepared = auddt_core::orchestrator::prepare_dataset(&desc, data_root, None).unwrap();
        assert!(
            prepared.validation.passed,
            "{}: {:?}",
            spec.dataset_id, prepared.validation
        );
        datasets.push(desc);
    }
    datasets.sort_by(|a, b| a.id.cmp(&b.id));
    let reg = auddt_core::registry::Registry {
        report_groups: vec!["all".into()],
        datasets,
    };
    auddt_core::registry::load_registry(&reg.to_toml_string()).unwrap()
}

/// Config text for a run over `manifest_path` with a built-in scorer.
pub fn config_text(manifest_path: &Path, results_dir: &Path, scorer: &str, extra_eval: &str) -> String {
    format!(
        "model:\n  scorer: '{scorer}'\ndata:\n  manifest_path: '{}'\n  group_name: all\n  data_args:\n    target_sample_rate: 16000\n    target_length: 8000\nevaluation:\n  results_dir: '{}'\n  batch_size: 7\n{extra_eval}",
        manifest_path.display(),
        results_dir.display()
    )
}

/// Parse a config and run it with the scorer it names.
pub fn run_config(
    text: &str,
    registry: &auddt_core::registry::Registry,
    workers: usize,
) -> Result<auddt_core::orchestrator::RunOutcome, auddt_core::RunError> {
    let config = auddt_core::parse_config(text).unwrap();
    let mut scorer = auddt_core::orchestrator::open_scorer(&config).unwrap();
    let options = auddt_core::RunOptions {
        workers,
        data_root_override: None,
    };
    auddt_core::orchestrator::run_evaluation(&config, registry, scorer.as_mut(), &options)
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect()
}
