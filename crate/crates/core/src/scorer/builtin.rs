//! In-process reference scorers for tests and smoke runs.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Scorer, ScorerError, ScorerInfo};
use crate::audio::AudioBuffer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinKind {
    /// Same score for every clip.
    Constant(f64),
    /// Uniform score derived from `(seed, entry_id)`, independent of call order.
    SeededRandom(u64),
    /// `rms / (rms + reference)`: a monotone squashing of RMS into [0, 1).
    Energy { reference: f64 },
}

impl BuiltinKind {
    pub const DEFAULT_ENERGY_REFERENCE: f64 = 0.5;

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinKind::Constant(_) => "constant",
            BuiltinKind::SeededRandom(_) => "seeded_random",
            BuiltinKind::Energy { .. } => "energy",
        }
    }

    fn validate(self) -> Result<Self, ScorerError> {
        match self {
            BuiltinKind::Constant(c) if !(0.0..=1.0).contains(&c) => Err(ScorerError::Config(format!(
                "constant scorer value {c} is outside [0, 1]"
            ))),
            BuiltinKind::Energy { reference } if !(reference.is_finite() && reference > 0.0) => Err(
                ScorerError::Config(format!("energy reference {reference} must be positive")),
            ),
            k => Ok(k),
        }
    }
}

/// Parses `constant:<c>`, `seeded_random:<seed>`, `energy` or `energy:<reference>`.
impl FromStr for BuiltinKind {
    type Err = ScorerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, param) = match s.split_once(':') {
            Some((k, p)) => (k, Some(p)),
            None => (s, None),
        };
        let bad = |what: &str| ScorerError::Config(format!("built-in scorer `{s}`: {what}"));
        let kind = match (kind, param) {
            ("constant", Some(p)) => BuiltinKind::Constant(p.parse().map_err(|_| bad("value must be a number"))?),
            ("constant", None) => return Err(bad("needs a value, e.g. constant:0.5")),
            ("seeded_random", Some(p)) => {
                BuiltinKind::SeededRandom(p.parse().map_err(|_| bad("seed must be an unsigned integer"))?)
            }
            ("seeded_random", None) => return Err(bad("needs a seed, e.g. seeded_random:7")),
            ("energy", None) => BuiltinKind::Energy {
                reference: Self::DEFAULT_ENERGY_REFERENCE,
            },
            ("energy", Some(p)) => BuiltinKind::Energy {
                reference: p.parse().map_err(|_| bad("reference must be a number"))?,
            },
            _ => return Err(bad("unknown kind (constant, seeded_random, energy)")),
        };
        kind.validate()
    }
}

impl fmt::Display for BuiltinKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinKind::Constant(c) => write!(f, "constant:{c}"),
            BuiltinKind::SeededRandom(s) => write!(f, "seeded_random:{s}"),
            BuiltinKind::Energy { reference } => write!(f, "energy:{reference}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuiltinScorer {
    kind: BuiltinKind,
    info: ScorerInfo,
}

pub fn builtin_scorer(
    kind: BuiltinKind,
    sample_rate_hz: u32,
    length_samples: Option<usize>,
) -> Result<BuiltinScorer, ScorerError> {
    let kind = kind.validate()?;
    if sample_rate_hz == 0 {
        return Err(ScorerError::Config("sample rate must be positive".into()));
    }
    Ok(BuiltinScorer {
        kind,
        info: ScorerInfo {
            name: kind.name().to_string(),
            protocol_version: super::protocol::PROTOCOL_VERSION,
            expected_sample_rate_hz: sample_rate_hz,
            expected_length_samples: length_samples,
        },
    })
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl BuiltinScorer {
    pub fn kind(&self) -> BuiltinKind {
        self.kind
    }
}

impl Scorer for BuiltinScorer {
    fn info(&self) -> &ScorerInfo {
        &self.info
    }

    fn score(&mut self, entry_id: &str, audio: &AudioBuffer) -> Result<f64, ScorerError> {
        Ok(match self.kind {
            BuiltinKind::Constant(c) => c,
            BuiltinKind::SeededRandom(seed) => {
                ChaCha8Rng::seed_from_u64(seed ^ fnv1a(entry_id.as_bytes())).gen::<f64>()
            }
            BuiltinKind::Energy { reference } => {
                let rms = audio.rms();
                rms / (rms + reference)
            }
        })
    }
}
