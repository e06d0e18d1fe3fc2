//! Config-driven evaluation: resolve the datasets, preprocess clips in a
//! worker pool, score them, and emit metrics, summaries and tables.
//!
//! Data layout under the data root:
//!
//! ```text
//! <data_root>/<dataset_id>/            raw files as unpacked by fetch
//! <data_root>/<dataset_id>/manifest.csv written by prepare
//! ```

mod config;
mod prepare;
mod run;

pub use config::{
    parse_config, ConfigError, DataConfig, EvalConfig, EvaluationConfig, ModelConfig, ScorerMode,
    DEFAULT_SCORER_COMMAND,
};
pub use prepare::{prepare_dataset, PrepareError, PreparedDataset, OVERRIDES_FILE_NAME};
pub use run::{
    config_hash, open_scorer, regenerate_report, run_evaluation, write_latex, RunError, RunOptions, RunOutcome,
    DATA_ROOT_ENV, MODEL_ARGS_ENV,
};
