//! `auddt`: fetch, prepare, list, evaluate and report.
//!
//! Exit status is 0 on success, 1 when a run or dataset operation fails and
//! 2 for usage errors (bad arguments, unreadable or invalid config).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use auddt_core::manifest::OverrideTable;
use auddt_core::orchestrator::{
    open_scorer, parse_config, prepare_dataset, regenerate_report, run_evaluation, write_latex, RunError, RunOptions,
    DATA_ROOT_ENV,
};
use auddt_core::registry::{fetch_dataset, select_group, FetchOutcome, Registry};
use auddt_core::report::emit_results;
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "auddt",
    version,
    about = "Benchmark audio deepfake detectors across many datasets"
)]
struct Cli {
    /// Registry file to use instead of the built-in one.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Download and checksum-verify a dataset or every dataset in a group.
    Fetch {
        target: String,
        #[arg(long)]
        data_root: Option<PathBuf>,
        /// Re-fetch even when the dataset directory exists.
        #[arg(long)]
        force: bool,
    },
    /// Normalize raw labels into manifest.csv for a dataset or group.
    Prepare {
        target: String,
        #[arg(long)]
        data_root: Option<PathBuf>,
        /// Label override table applied to every prepared dataset.
        #[arg(long)]
        overrides: Option<PathBuf>,
    },
    /// List registered datasets and group names.
    List,
    /// Run an evaluation described by a config file.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Preprocessing worker threads (default: available cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Re-emit results and the LaTeX table of a finished run from its score files.
    Report {
        #[arg(long)]
        run: PathBuf,
        /// Output directory (default: the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Marks errors that map to exit status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    Usage(message.into()).into()
}

fn load_registry(path: Option<&Path>) -> Result<Registry> {
    match path {
        Some(p) => Registry::from_path(p).with_context(|| format!("loading registry {}", p.display())),
        None => Ok(Registry::builtin()),
    }
}

fn data_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(DATA_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "--".into())
}

fn cmd_list(registry: &Registry) -> Result<ExitCode> {
    println!("datasets ({}):", registry.len());
    for d in &registry.datasets {
        println!("  {:<20} {}", d.id, d.display_name);
    }
    println!("groups:");
    for g in registry.group_names().iter().filter(|g| registry.get(g).is_none()) {
        println!("  {g}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_fetch(registry: &Registry, target: &str, root: &Path, force: bool) -> Result<ExitCode> {
    let selected = select_group(target, registry).map_err(|e| usage(e.to_string()))?;
    let mut failed = 0;
    for d in selected {
        match fetch_dataset(d, root, force) {
            Ok(FetchOutcome::Fetched { root, .. }) => println!("{}: fetched into {}", d.id, root.display()),
            Ok(FetchOutcome::AlreadyPresent { root }) => println!("{}: already present at {}", d.id, root.display()),
            Err(e) => {
                eprintln!("{}: {e}", d.id);
                failed += 1;
            }
        }
    }
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_prepare(registry: &Registry, target: &str, root: &Path, overrides: Option<&Path>) -> Result<ExitCode> {
    let selected = select_group(target, registry).map_err(|e| usage(e.to_string()))?;
    let table = match overrides {
        Some(p) => Some(OverrideTable::from_path(p).map_err(|e| usage(e.to_string()))?),
        None => None,
    };
    let mut failed = 0;
    for d in selected {
        match prepare_dataset(d, root, table.as_ref()) {
            Ok(p) => {
                let v = &p.validation;
                let counts: Vec<String> = v.per_label_counts.iter().map(|(l, n)| format!("{l}={n}")).collect();
                println!(
                    "{}: {} entries ({}), {} missing files, {} duplicate ids -> {}",
                    p.dataset_id,
                    v.total,
                    counts.join(", "),
                    v.missing_files,
                    v.duplicate_ids,
                    p.manifest_path.display()
                );
                if !v.passed {
                    failed += 1;
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", d.id);
                failed += 1;
            }
        }
    }
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_evaluate(cli_registry: Option<&Path>, config_path: &Path, workers: Option<usize>) -> Result<ExitCode> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", config_path.display())))?;
    let config = parse_config(&text).map_err(|e| usage(format!("{}: {e}", config_path.display())))?;
    let registry = load_registry(cli_registry.or(config.data.registry_path.as_deref()))?;
    let options = RunOptions {
        workers: workers
            .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
            .unwrap_or(1),
        data_root_override: std::env::var_os(DATA_ROOT_ENV).map(PathBuf::from),
    };
    let mut scorer = open_scorer(&config).context("starting scorer")?;
    let outcome = run_evaluation(&config, &registry, scorer.as_mut(), &options);
    if let Err(e) = scorer.shutdown() {
        log::warn!("scorer shutdown: {e}");
    }
    let outcome = match outcome {
        Ok(o) => o,
        Err(RunError::Config(e)) => return Err(usage(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let result = &outcome.result;
    println!("run {} ({} datasets)", result.run_id, result.reports.len());
    for (id, r) in &result.reports {
        println!(
            "  {:<20} n={:<6} eer={} auc={} acc={} skipped={}",
            id,
            r.n_bonafide + r.n_spoof,
            fmt_metric(r.eer),
            fmt_metric(r.auc),
            fmt_metric(r.accuracy),
            r.skipped_files
        );
    }
    for s in &result.summaries {
        println!(
            "  group {:<14} mean acc={} median acc={} ({} members)",
            s.group_name,
            fmt_metric(s.mean_accuracy),
            fmt_metric(s.median_accuracy),
            s.member_dataset_ids.len()
        );
    }
    for f in &result.failures {
        eprintln!("  FAILED {}: {}", f.dataset_id, f.error);
    }
    println!("results: {}", outcome.files.results.display());
    println!("latex:   {}", outcome.latex_path.display());
    Ok(if result.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_report(cli_registry: Option<&Path>, run: &Path, out: Option<&Path>) -> Result<ExitCode> {
    if !run.is_dir() {
        return Err(usage(format!("run directory {} does not exist", run.display())));
    }
    let stored = auddt_core::report::load_results(run)?;
    let registry_path = cli_registry
        .map(Path::to_path_buf)
        .or_else(|| stored.config_echo["data"]["registry_path"].as_str().map(PathBuf::from));
    let registry = load_registry(registry_path.as_deref())?;
    let (result, scores) = regenerate_report(run, &registry)?;
    let out = out.unwrap_or(run);
    emit_results(&result, &scores, out)?;
    let latex = out.join("table.tex");
    write_latex(&result, &latex)?;
    println!("{}", latex.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let registry_flag = cli.registry.as_deref();
    let outcome = match cli.command {
        Command::List => load_registry(registry_flag).and_then(|r| cmd_list(&r)),
        Command::Fetch {
            target,
            data_root: dr,
            force,
        } => load_registry(registry_flag).and_then(|r| cmd_fetch(&r, &target, &data_root(dr), force)),
        Command::Prepare {
            target,
            data_root: dr,
            overrides,
        } => load_registry(registry_flag).and_then(|r| cmd_prepare(&r, &target, &data_root(dr), overrides.as_deref())),
        Command::Evaluate { config, workers } => cmd_evaluate(registry_flag, &config, workers),
        Command::Report { run, out } => cmd_report(registry_flag, &run, out.as_deref()),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
