//! Wire-protocol conformance, driven against the scripted mock scorer.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Duration;

use auddt_core::audio::AudioBuffer;
use auddt_core::scorer::{ExternalScorer, ExternalScorerConfig, ScoreRecord, Scorer, ScorerError};

const MOCK: &str = env!("CARGO_BIN_EXE_auddt-mock-scorer");

/// Play a transcript: `>` lines are sent verbatim, `<` lines must come back
/// byte-for-byte. After the last line the process must exit successfully.
fn play(transcript: &str, args: &[&str]) {
    let text = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/transcripts")
            .join(transcript),
    )
    .unwrap();
    let mut child = Command::new(MOCK)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut stdout = BufReader::new(child.stdout.take().unwrap());
    for (n, line) in text.lines().enumerate() {
        if let Some(sent) = line.strip_prefix("> ") {
            stdin.write_all(sent.as_bytes()).unwrap();
            stdin.write_all(b"\n").unwrap();
            stdin.flush().unwrap();
        } else if let Some(want) = line.strip_prefix("< ") {
            let mut got = String::new();
            stdout.read_line(&mut got).unwrap();
            assert_eq!(got, format!("{want}\n"), "{transcript}:{}", n + 1);
        }
    }
    drop(stdin);
    let status = child.wait().unwrap();
    assert!(status.success(), "{transcript}: {status}");
    let mut rest = String::new();
    stdout.read_line(&mut rest).unwrap();
    assert_eq!(rest, "", "{transcript}: unexpected trailing output");
}

#[test]
fn null_transcript() {
    play("null.txt", &["--mode", "null"]);
}

#[test]
fn echo_transcript() {
    play("echo.txt", &["--mode", "echo"]);
}

#[test]
fn energy_transcript() {
    play("energy.txt", &["--mode", "energy"]);
}

#[test]
fn reject_transcript() {
    play("reject.txt", &["--mode", "reject", "--length", "8"]);
}

#[test]
fn truncated_payload_transcript() {
    play("truncated.txt", &["--mode", "null"]);
}

#[test]
fn malformed_request_keeps_scorer_alive() {
    let mut child = Command::new(MOCK)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut stdout = BufReader::new(child.stdout.take().unwrap());
    let mut line = String::new();
    writeln!(stdin, "{{\"type\":\"hello\",\"protocol_version\":1}}").unwrap();
    stdout.read_line(&mut line).unwrap();
    for junk in ["not json at all", "{\"type\":\"score\"}", "{\"type\":\"launch\"}"] {
        writeln!(stdin, "{junk}").unwrap();
        line.clear();
        stdout.read_line(&mut line).unwrap();
        let reply: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(reply["type"], "error", "{junk}");
    }
    assert!(child.try_wait().unwrap().is_none());
    writeln!(stdin, "{{\"type\":\"bye\"}}").unwrap();
    assert!(child.wait().unwrap().success());
}

fn spawn(mode: &str) -> Result<ExternalScorer, ScorerError> {
    let mut config = ExternalScorerConfig::new(MOCK);
    config.args = vec!["--mode".into(), mode.into()];
    config.handshake_timeout = Duration::from_secs(10);
    config.request_timeout = Duration::from_secs(10);
    ExternalScorer::spawn(&config)
}

fn square() -> AudioBuffer {
    AudioBuffer::new((0..1600).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect(), 16000)
}

#[test]
fn external_scorer_round_trip() {
    for mode in ["null", "echo", "energy"] {
        let mut s = spawn(mode).unwrap();
        assert_eq!(s.info().name, mode);
        assert_eq!(s.info().expected_sample_rate_hz, 16000);
        for i in 0..5 {
            assert_eq!(s.score(&format!("clip{i}"), &square()).unwrap(), 0.5, "{mode}");
        }
        s.shutdown().unwrap();
    }
}

#[test]
fn rejected_clip_leaves_scorer_usable() {
    let mut s = spawn("reject").unwrap();
    assert!(matches!(s.score("bad-1", &square()), Err(ScorerError::Rejected { id, .. }) if id == "bad-1"));
    assert_eq!(s.score("ok-1", &square()).unwrap(), 0.5);
    s.shutdown().unwrap();
}

#[test]
fn handshake_failures() {
    assert!(matches!(
        spawn("version99"),
        Err(ScorerError::ProtocolVersion { got: 99, expected: 1 })
    ));
    assert!(matches!(spawn("garbage"), Err(ScorerError::ProtocolFormat(_))));
    assert!(matches!(spawn("load-error"), Err(ScorerError::Start(_))));
    let missing = ExternalScorer::spawn(&ExternalScorerConfig::new("/nonexistent/scorer-binary"));
    assert!(matches!(missing, Err(ScorerError::Start(_))));
}

#[test]
fn misbehaving_scorers() {
    let mut s = spawn("crash").unwrap();
    assert!(matches!(s.score("a", &square()), Err(ScorerError::Crashed(_))));

    let mut s = spawn("wrong-id").unwrap();
    assert!(matches!(s.score("a", &square()), Err(ScorerError::Response(_))));

    let mut s = spawn("bad-checksum").unwrap();
    assert!(matches!(s.score("a", &square()), Err(ScorerError::Response(_))));

    let mut s = spawn("out-of-range").unwrap();
    let score = s.score("a", &square()).unwrap();
    assert!(matches!(
        ScoreRecord::new("a", score),
        Err(ScorerError::ScoreRange { .. })
    ));
}

#[test]
fn slow_scorer_times_out() {
    let mut config = ExternalScorerConfig::new(MOCK);
    config.args = vec!["--mode".into(), "slow".into()];
    config.request_timeout = Duration::from_millis(300);
    let mut s = ExternalScorer::spawn(&config).unwrap();
    let started = std::time::Instant::now();
    assert!(matches!(s.score("a", &square()), Err(ScorerError::Timeout(_))));
    assert!(started.elapsed() < Duration::from_secs(5));
}

#[test]
fn harness_pcm_survives_the_wire_exactly() {
    // The mock echoes the SHA-256 of what it decoded; the harness checks it
    // against what it sent, so an awkward float sequence is a real test.
    let samples: Vec<f32> = (0..4096)
        .map(|i| f32::from_bits(0x3f00_0000 ^ ((i as u32).wrapping_mul(2_654_435_761) % 0x0080_0000)))
        .map(|x| x - 0.75)
        .collect();
    let mut s = spawn("echo").unwrap();
    let score = s.score("weird", &AudioBuffer::new(samples.clone(), 16000)).unwrap();
    let mean_abs = samples.iter().map(|&x| (x as f64).abs()).sum::<f64>() / samples.len() as f64;
    assert_eq!(score, mean_abs);
    s.shutdown().unwrap();
}
