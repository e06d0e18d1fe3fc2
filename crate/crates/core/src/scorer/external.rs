//! Driver for a scorer running as a child process.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::protocol::{encode_pcm, pcm_sha256, Message, PROTOCOL_VERSION};
use super::{Scorer, ScorerError, ScorerInfo};
use crate::audio::AudioBuffer;

pub const DEFAULT_HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_REQUEST_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalScorerConfig {
    pub program: String,
    pub args: Vec<String>,
    pub env: BTreeMap<String, String>,
    pub handshake_timeout: Duration,
    pub request_timeout: Duration,
}

impl ExternalScorerConfig {
    pub fn new(program: impl Into<String>) -> Self {
        ExternalScorerConfig {
            program: program.into(),
            args: Vec::new(),
            env: BTreeMap::new(),
            handshake_timeout: DEFAULT_HANDSHAKE_TIMEOUT,
            request_timeout: DEFAULT_REQUEST_TIMEOUT,
        }
    }
}

pub struct ExternalScorer {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    info: ScorerInfo,
    request_timeout: Duration,
    closed: bool,
}

impl std::fmt::Debug for ExternalScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalScorer")
            .field("info", &self.info)
            .finish_non_exhaustive()
    }
}

impl ExternalScorer {
    /// Spawn the process and perform the hello/info handshake.
    pub fn spawn(config: &ExternalScorerConfig) -> Result<Self, ScorerError> {
        let mut child = Command::new(&config.program)
            .args(&config.args)
            .envs(&config.env)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ScorerError::Start(format!("{}: {e}", config.program)))?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut scorer = ExternalScorer {
            child,
            stdin,
            lines: rx,
            info: ScorerInfo {
                name: String::new(),
                protocol_version: 0,
                expected_sample_rate_hz: 0,
                expected_length_samples: None,
            },
            request_timeout: config.request_timeout,
            closed: false,
        };
        match scorer.handshake(config.handshake_timeout) {
            Ok(info) => {
                scorer.info = info;
                Ok(scorer)
            }
            Err(e) => {
                scorer.kill();
                Err(e)
            }
        }
    }

    fn handshake(&mut self, timeout: Duration) -> Result<ScorerInfo, ScorerError> {
        self.send(&Message::hello())?;
        match self.recv(timeout)? {
            Message::Info {
                name,
                protocol_version,
                expected_sample_rate_hz,
                expected_length_samples,
                error,
            } => {
                if let Some(e) = error {
                    return Err(ScorerError::Start(format!("scorer `{name}` failed to load: {e}")));
                }
                if protocol_version != PROTOCOL_VERSION {
                    return Err(ScorerError::ProtocolVersion {
                        got: protocol_version,
                        expected: PROTOCOL_VERSION,
                    });
                }
                if expected_sample_rate_hz == 0 {
                    return Err(ScorerError::ProtocolFormat(
                        "expected_sample_rate_hz must be positive".into(),
                    ));
                }
                Ok(ScorerInfo {
                    name,
                    protocol_version,
                    expected_sample_rate_hz,
                    expected_length_samples,
                })
            }
            other => Err(ScorerError::ProtocolFormat(format!(
                "expected an info message, got {other:?}"
            ))),
        }
    }

    fn exit_description(&mut self) -> String {
        match self.child.wait_timeout_ms(200) {
            Some(status) => format!("exited with {status}"),
            None => "closed its output".to_string(),
        }
    }

    fn send(&mut self, msg: &Message) -> Result<(), ScorerError> {
        let line = msg.to_line();
        let result = match self.stdin.as_mut() {
            Some(stdin) => stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()),
            None => return Err(ScorerError::Crashed("stdin already closed".into())),
        };
        result.map_err(|e| ScorerError::Crashed(format!("{} ({e})", self.exit_description())))
    }

    fn recv(&mut self, timeout: Duration) -> Result<Message, ScorerError> {
        let line = match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(ScorerError::Crashed(format!("reading scorer output: {e}"))),
            Err(RecvTimeoutError::Timeout) => return Err(ScorerError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => return Err(ScorerError::Crashed(self.exit_description())),
        };
        Message::parse(&line).map_err(|e| {
            let shown: String = line.chars().take(80).collect();
            ScorerError::ProtocolFormat(format!("`{shown}`: {e}"))
        })
    }

    fn kill(&mut self) {
        self.stdin.take();
        let _ = self.child.kill();
        let _ = self.child.wait();
        self.closed = true;
    }
}

trait WaitTimeout {
    fn wait_timeout_ms(&mut self, ms: u64) -> Option<std::process::ExitStatus>;
}

impl WaitTimeout for Child {
    fn wait_timeout_ms(&mut self, ms: u64) -> Option<std::process::ExitStatus> {
        let step = Duration::from_millis(10);
        let mut waited = Duration::ZERO;
        loop {
            if let Ok(Some(status)) = self.try_wait() {
                return Some(status);
            }
            if waited >= Duration::from_millis(ms) {
                return None;
            }
            thread::sleep(step);
            waited += step;
        }
    }
}

impl Scorer for ExternalScorer {
    fn info(&self) -> &ScorerInfo {
        &self.info
    }

    fn score(&mut self, entry_id: &str, audio: &AudioBuffer) -> Result<f64, ScorerError> {
        self.send(&Message::Score {
            id: entry_id.to_string(),
            sample_rate_hz: audio.sample_rate_hz,
            pcm_f32le_b64: encode_pcm(&audio.samples),
        })?;
        let reply = match self.recv(self.request_timeout) {
            Err(e @ ScorerError::Timeout(_)) => {
                self.kill();
                return Err(e);
            }
            other => other?,
        };
        match reply {
            Message::Result {
                id,
                score,
                pcm_sha256: checksum,
            } => {
                if id != entry_id {
                    return Err(ScorerError::Response(format!(
                        "expected result for `{entry_id}`, got `{id}`"
                    )));
                }
                if let Some(sum) = checksum {
                    let ours = pcm_sha256(&audio.samples);
                    if sum != ours {
                        return Err(ScorerError::Response(format!(
                            "PCM checksum mismatch for `{entry_id}`: scorer saw {sum}, sent {ours}"
                        )));
                    }
                }
                Ok(score)
            }
            Message::Error { id, message } => match id {
                Some(id) if id != entry_id => Err(ScorerError::Response(format!(
                    "expected result for `{entry_id}`, got an error for `{id}`: {message}"
                ))),
                _ => Err(ScorerError::Rejected {
                    id: entry_id.to_string(),
                    message,
                }),
            },
            other => Err(ScorerError::ProtocolFormat(format!(
                "expected a result message, got {other:?}"
            ))),
        }
    }

    /// Send `bye` and wait for the process to exit.
    fn shutdown(&mut self) -> Result<(), ScorerError> {
        if self.closed {
            return Ok(());
        }
        self.closed = true;
        let _ = self.send(&Message::Bye);
        self.stdin.take();
        match self.child.wait_timeout_ms(5_000) {
            Some(status) if status.success() => Ok(()),
            Some(status) => Err(ScorerError::Crashed(format!("exited with {status} after bye"))),
            None => {
                let _ = self.child.kill();
                let _ = self.child.wait();
                Err(ScorerError::Timeout(Duration::from_secs(5)))
            }
        }
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if !self.closed {
            let _ = self.shutdown();
        }
    }
}
