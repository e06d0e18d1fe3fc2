//! Scorers turn a preprocessed clip into a probability that it is spoof.
//!
//! External detectors run as separate processes speaking the line protocol in
//! [`protocol`]; built-in scorers implement the same trait in-process so the
//! whole pipeline can be exercised without a model.

mod builtin;
mod external;
pub mod protocol;

pub use builtin::{builtin_scorer, BuiltinKind, BuiltinScorer};
pub use external::{ExternalScorer, ExternalScorerConfig, DEFAULT_HANDSHAKE_TIMEOUT, DEFAULT_REQUEST_TIMEOUT};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioBuffer;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("scorer did not answer within {0:?}")]
    Timeout(std::time::Duration),
    #[error("scorer speaks protocol version {got}, harness speaks {expected}")]
    ProtocolVersion { got: u32, expected: u32 },
    #[error("malformed protocol message: {0}")]
    ProtocolFormat(String),
    #[error("bad scorer response: {0}")]
    Response(String),
    /// The scorer answered with an error for this clip and stays usable.
    #[error("scorer rejected `{id}`: {message}")]
    Rejected { id: String, message: String },
    #[error("score {score} for `{id}` is not a finite value in [0, 1]")]
    ScoreRange { id: String, score: f64 },
    #[error("scorer process exited: {0}")]
    Crashed(String),
    #[error("could not start scorer: {0}")]
    Start(String),
    #[error("scorer configuration error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerInfo {
    pub name: String,
    pub protocol_version: u32,
    pub expected_sample_rate_hz: u32,
    pub expected_length_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub entry_id: String,
    pub score: f64,
}

impl ScoreRecord {
    /// Out-of-range scores are rejected, never clamped.
    pub fn new(entry_id: impl Into<String>, score: f64) -> Result<Self, ScorerError> {
        let entry_id = entry_id.into();
        if !(score.is_finite() && (0.0..=1.0).contains(&score)) {
            return Err(ScorerError::ScoreRange { id: entry_id, score });
        }
        Ok(ScoreRecord { entry_id, score })
    }
}

/// A detector. Calls to one instance are serialized by the caller.
pub trait Scorer: Send {
    fn info(&self) -> &ScorerInfo;

    fn score(&mut self, entry_id: &str, audio: &AudioBuffer) -> Result<f64, ScorerError>;

    fn shutdown(&mut self) -> Result<(), ScorerError> {
        Ok(())
    }
}

/// Score every clip in order, one record per input.
pub fn score_batch(scorer: &mut dyn Scorer, batch: &[(String, AudioBuffer)]) -> Result<Vec<ScoreRecord>, ScorerError> {
    batch
        .iter()
        .map(|(id, audio)| ScoreRecord::new(id.clone(), scorer.score(id, audio)?))
        .collect()
}
