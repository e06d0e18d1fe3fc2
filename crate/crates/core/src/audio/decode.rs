use std::io::Cursor;

use super::{AudioBuffer, AudioError};

/// Decode a RIFF/WAVE (PCM 16/24/32-bit or IEEE float32) or FLAC file to a
/// mono buffer. Channels are averaged; integer PCM is divided by 2^(bits-1).
pub fn decode(bytes: &[u8]) -> Result<AudioBuffer, AudioError> {
    if bytes.len() >= 4 && &bytes[..4] == b"RIFF" {
        decode_wav(bytes)
    } else if bytes.len() >= 4 && &bytes[..4] == b"fLaC" {
        decode_flac(bytes)
    } else if bytes.len() < 4 {
        Err(AudioError::Decode(format!(
            "{} bytes is too short for an audio header",
            bytes.len()
        )))
    } else {
        Err(AudioError::UnsupportedFormat("not a RIFF/WAVE or FLAC stream".into()))
    }
}

fn downmix(
    interleaved: impl Iterator<Item = Result<f64, AudioError>>,
    channels: usize,
) -> Result<Vec<f32>, AudioError> {
    let mut out = Vec::new();
    let mut acc = 0.0f64;
    let mut n = 0usize;
    for s in interleaved {
        acc += s?;
        n += 1;
        if n == channels {
            out.push((acc / channels as f64) as f32);
            acc = 0.0;
            n = 0;
        }
    }
    if n != 0 {
        return Err(AudioError::Decode("payload ends mid-frame".into()));
    }
    Ok(out)
}

fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, AudioError> {
    let mut reader = hound::WavReader::new(Cursor::new(bytes)).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.sample_rate == 0 {
        return Err(AudioError::Decode("zero channels or sample rate".into()));
    }
    let channels = spec.channels as usize;
    let expected = reader.len() as usize;
    let samples = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            downmix(
                reader
                    .samples::<i32>()
                    .map(|s| s.map(|v| v as f64 * scale).map_err(map_hound)),
                channels,
            )?
        }
        (hound::SampleFormat::Float, 32) => downmix(
            reader.samples::<f32>().map(|s| s.map(f64::from).map_err(map_hound)),
            channels,
        )?,
        (fmt, bits) => {
            return Err(AudioError::UnsupportedFormat(format!(
                "WAV {fmt:?} with {bits} bits per sample"
            )))
        }
    };
    if samples.len() * channels != expected {
        return Err(AudioError::Decode(format!(
            "truncated payload: header declares {expected} samples, decoded {}",
            samples.len() * channels
        )));
    }
    Ok(AudioBuffer::new(samples, spec.sample_rate))
}

fn map_hound(e: hound::Error) -> AudioError {
    match e {
        hound::Error::Unsupported => AudioError::UnsupportedFormat("WAV encoding not supported".into()),
        other => AudioError::Decode(other.to_string()),
    }
}

fn decode_flac(bytes: &[u8]) -> Result<AudioBuffer, AudioError> {
    let mut reader = claxon::FlacReader::new(Cursor::new(bytes)).map_err(map_claxon)?;
    let info = reader.streaminfo();
    let channels = info.channels as usize;
    let scale = 1.0 / (1u64 << (info.bits_per_sample - 1)) as f64;
    let samples = downmix(
        reader
            .samples()
            .map(|s| s.map(|v| v as f64 * scale).map_err(map_claxon)),
        channels,
    )?;
    if let Some(total) = info.samples {
        if samples.len() as u64 != total {
            return Err(AudioError::Decode(format!(
                "truncated payload: stream declares {total} frames, decoded {}",
                samples.len()
            )));
        }
    }
    Ok(AudioBuffer::new(samples, info.sample_rate))
}

fn map_claxon(e: claxon::Error) -> AudioError {
    match e {
        claxon::Error::Unsupported(what) => AudioError::UnsupportedFormat(format!("FLAC: {what}")),
        other => AudioError::Decode(other.to_string()),
    }
}
