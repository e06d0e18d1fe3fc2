//! Benchmark harness for audio deepfake detectors: a dataset registry,
//! label normalization into uniform manifests, waveform preprocessing, a
//! process-boundary scorer protocol, metrics, group aggregation and reports.

pub mod audio;
pub mod manifest;
pub mod metrics;
pub mod orchestrator;
pub mod registry;
pub mod report;
pub mod scorer;
pub mod synthcorpus;

pub use audio::{AudioBuffer, AudioError};
pub use manifest::{Label, ManifestEntry, ManifestError};
pub use metrics::{MetricsError, MetricsReport};
pub use orchestrator::{parse_config, EvalConfig, RunError, RunOptions};
pub use registry::{DatasetDescriptor, Registry, RegistryError};
pub use report::{GroupSummary, ReportError, RunResult};
pub use scorer::{Scorer, ScorerError, ScorerInfo};
