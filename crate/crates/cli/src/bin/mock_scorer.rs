//! Scripted scorer process for exercising the wire protocol.
//!
//! Well-behaved modes (`null`, `echo`, `energy`, `reject`) echo the PCM
//! checksum with every result. The others misbehave in one specific way.

use std::io::{BufRead, Write};

use anyhow::Result;
use auddt_core::scorer::protocol::{decode_pcm, pcm_sha256, Message, PROTOCOL_VERSION};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Every clip scores 0.5.
    Null,
    /// Score is mean(|x|).
    Echo,
    /// Score is RMS(x).
    Energy,
    /// Errors on ids containing "bad", 0.5 otherwise.
    Reject,
    Version99,
    Garbage,
    LoadError,
    /// Exits with status 3 on the first score request.
    Crash,
    OutOfRange,
    WrongId,
    /// Never answers score requests.
    Slow,
    BadChecksum,
}

#[derive(Debug, Parser)]
#[command(about = "Scripted scorer speaking the harness protocol on stdio")]
struct Args {
    #[arg(long, value_enum, default_value = "null")]
    mode: Mode,
    #[arg(long, default_value_t = 16000)]
    rate: u32,
    #[arg(long)]
    length: Option<usize>,
    // Accepted for command-line compatibility with real scorers.
    #[arg(long)]
    wrapper: Option<String>,
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    checkpoint: Option<String>,
    #[arg(long)]
    device: Option<String>,
}

fn send(out: &mut impl Write, msg: &Message) -> Result<()> {
    out.write_all(msg.to_line().as_bytes())?;
    out.flush()?;
    Ok(())
}

fn score_for(mode: Mode, samples: &[f32]) -> f64 {
    let n = samples.len().max(1) as f64;
    match mode {
        Mode::Echo => samples.iter().map(|&x| (x as f64).abs()).sum::<f64>() / n,
        Mode::Energy => (samples.iter().map(|&x| (x as f64).powi(2)).sum::<f64>() / n).sqrt(),
        Mode::OutOfRange => 1.5,
        _ => 0.5,
    }
}

fn main() -> Result<()> {
    let args = Args::parse();
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    let name = format!("{:?}", args.mode).to_lowercase();
    let mut lines = stdin.lock().lines();

    let Some(first) = lines.next() else { return Ok(()) };
    match Message::parse(&first?) {
        Ok(Message::Hello { .. }) => {}
        _ => {
            send(
                &mut out,
                &Message::Error {
                    id: None,
                    message: "expected hello".into(),
                },
            )?;
            std::process::exit(2);
        }
    }
    if args.mode == Mode::Garbage {
        out.write_all(b"this is not a protocol message\n")?;
        out.flush()?;
        std::process::exit(0);
    }
    let load_error = (args.mode == Mode::LoadError).then(|| "checkpoint not found".to_string());
    send(
        &mut out,
        &Message::Info {
            name,
            protocol_version: if args.mode == Mode::Version99 {
                99
            } else {
                PROTOCOL_VERSION
            },
            expected_sample_rate_hz: args.rate,
            expected_length_samples: args.length,
            error: load_error.clone(),
        },
    )?;
    if load_error.is_some() {
        std::process::exit(1);
    }

    for line in lines {
        let line = line?;
        let msg = match Message::parse(&line) {
            Ok(m) => m,
            Err(e) => {
                send(
                    &mut out,
                    &Message::Error {
                        id: None,
                        message: format!("unparseable request: {e}"),
                    },
                )?;
                continue;
            }
        };
        match msg {
            Message::Bye => return Ok(()),
            Message::Score { id, pcm_f32le_b64, .. } => {
                match args.mode {
                    Mode::Crash => std::process::exit(3),
                    Mode::Slow => {
                        std::thread::sleep(std::time::Duration::from_secs(60));
                        continue;
                    }
                    Mode::Reject if id.contains("bad") => {
                        send(
                            &mut out,
                            &Message::Error {
                                id: Some(id),
                                message: "model raised".into(),
                            },
                        )?;
                        continue;
                    }
                    _ => {}
                }
                let samples = match decode_pcm(&pcm_f32le_b64) {
                    Ok(s) => s,
                    Err(detail) => {
                        eprintln!("{id}: {detail}");
                        let message = "undecodable PCM payload".to_string();
                        send(&mut out, &Message::Error { id: Some(id), message })?;
                        continue;
                    }
                };
                let checksum = match args.mode {
                    Mode::BadChecksum => Some("0".repeat(64)),
                    _ => Some(pcm_sha256(&samples)),
                };
                let id = if args.mode == Mode::WrongId {
                    format!("{id}-other")
                } else {
                    id
                };
                send(
                    &mut out,
                    &Message::Result {
                        id,
                        score: score_for(args.mode, &samples),
                        pcm_sha256: checksum,
                    },
                )?;
            }
            other => {
                send(
                    &mut out,
                    &Message::Error {
                        id: None,
                        message: format!("unexpected {other:?}"),
                    },
                )?;
            }
        }
    }
    Ok(())
}
