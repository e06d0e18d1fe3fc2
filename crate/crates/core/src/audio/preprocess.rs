use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use super::{decode, AudioBuffer, AudioError, SincResampler};

/// Scale so the largest magnitude is exactly 1. All-zero input is returned
/// unchanged.
pub fn normalize_amplitude(buf: &AudioBuffer) -> AudioBuffer {
    let peak = buf.peak();
    if peak == 0.0 || !peak.is_finite() {
        return buf.clone();
    }
    AudioBuffer::new(buf.samples.iter().map(|&x| x / peak).collect(), buf.sample_rate_hz)
}

/// Keep the first `target_length_samples`, or right-pad with zeros.
pub fn fit_duration(buf: &AudioBuffer, target_length_samples: usize) -> Result<AudioBuffer, AudioError> {
    if target_length_samples == 0 {
        return Err(AudioError::InvalidParameter("target length must be positive".into()));
    }
    let mut samples = buf.samples.clone();
    samples.resize(target_length_samples, 0.0);
    Ok(AudioBuffer::new(samples, buf.sample_rate_hz))
}

/// The full per-clip chain: decode, resample, normalize, fit. Resamplers are
/// cached per source rate and shared across worker threads.
#[derive(Debug)]
pub struct Preprocessor {
    target_rate_hz: u32,
    target_length: usize,
    resamplers: RwLock<HashMap<u32, Arc<SincResampler>>>,
}

impl Preprocessor {
    pub fn new(target_rate_hz: u32, target_length: usize) -> Result<Self, AudioError> {
        if target_rate_hz == 0 || target_length == 0 {
            return Err(AudioError::InvalidParameter(
                "target rate and length must be positive".into(),
            ));
        }
        Ok(Preprocessor {
            target_rate_hz,
            target_length,
            resamplers: RwLock::new(HashMap::new()),
        })
    }

    pub fn target_rate_hz(&self) -> u32 {
        self.target_rate_hz
    }

    pub fn target_length(&self) -> usize {
        self.target_length
    }

    fn resampler(&self, source_rate: u32) -> Result<Arc<SincResampler>, AudioError> {
        if let Some(r) = self.resamplers.read().expect("resampler cache").get(&source_rate) {
            return Ok(Arc::clone(r));
        }
        let r = Arc::new(SincResampler::new(source_rate, self.target_rate_hz)?);
        self.resamplers
            .write()
            .expect("resampler cache")
            .entry(source_rate)
            .or_insert_with(|| Arc::clone(&r));
        Ok(r)
    }

    pub fn process_buffer(&self, buf: &AudioBuffer) -> Result<AudioBuffer, AudioError> {
        let resampled = if buf.sample_rate_hz == self.target_rate_hz {
            buf.clone()
        } else {
            let r = self.resampler(buf.sample_rate_hz)?;
            AudioBuffer::new(r.process(&buf.samples), self.target_rate_hz)
        };
        if resampled.samples.iter().any(|x| !x.is_finite()) {
            return Err(AudioError::Decode("non-finite samples".into()));
        }
        fit_duration(&normalize_amplitude(&resampled), self.target_length)
    }

    pub fn process_bytes(&self, bytes: &[u8]) -> Result<AudioBuffer, AudioError> {
        self.process_buffer(&decode(bytes)?)
    }
}
