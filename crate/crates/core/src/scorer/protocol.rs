//! Wire protocol version 1: one JSON object per line over the scorer
//! process's stdin/stdout.
//!
//! ```text
//! harness -> scorer  {"type":"hello","protocol_version":1}
//! scorer  -> harness {"type":"info","name":"null","protocol_version":1,"expected_sample_rate_hz":16000,"expected_length_samples":64000}
//! harness -> scorer  {"type":"score","id":"clip_1","sample_rate_hz":16000,"pcm_f32le_b64":"..."}
//! scorer  -> harness {"type":"result","id":"clip_1","score":0.5}
//! harness -> scorer  {"type":"bye"}
//! ```
//!
//! A result may carry `pcm_sha256`, the SHA-256 of the decoded little-endian
//! PCM bytes, which the harness checks against what it sent. A scorer that
//! cannot score one clip answers `{"type":"error","id":...,"message":...}`.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    Hello {
        protocol_version: u32,
    },
    Info {
        name: String,
        protocol_version: u32,
        expected_sample_rate_hz: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected_length_samples: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    Score {
        id: String,
        sample_rate_hz: u32,
        pcm_f32le_b64: String,
    },
    Result {
        id: String,
        score: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pcm_sha256: Option<String>,
    },
    Error {
        #[serde(default)]
        id: Option<String>,
        message: String,
    },
    Bye,
}

impl Message {
    pub fn hello() -> Self {
        Message::Hello {
            protocol_version: PROTOCOL_VERSION,
        }
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("protocol messages serialize");
        s.push('\n');
        s
    }

    pub fn parse(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line.trim_end_matches(['\r', '\n']))
    }
}

pub fn pcm_bytes(samples: &[f32]) -> Vec<u8> {
    samples.iter().flat_map(|s| s.to_le_bytes()).collect()
}

pub fn encode_pcm(samples: &[f32]) -> String {
    STANDARD.encode(pcm_bytes(samples))
}

pub fn decode_pcm(b64: &str) -> Result<Vec<f32>, String> {
    let bytes = STANDARD.decode(b64).map_err(|e| e.to_string())?;
    if bytes.len() % 4 != 0 {
        return Err(format!(
            "{} PCM bytes is not a whole number of f32 samples",
            bytes.len()
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn pcm_sha256(samples: &[f32]) -> String {
    Sha256::digest(pcm_bytes(samples))
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
