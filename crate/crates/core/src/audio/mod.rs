//! Audio decoding and the fixed preprocessing chain applied before scoring:
//! decode (downmixed to mono), resample, peak-normalize, fit to a fixed
//! number of samples.

mod decode;
mod preprocess;
mod resample;

pub use decode::decode;
pub use preprocess::{fit_duration, normalize_amplitude, Preprocessor};
pub use resample::{resample, SincResampler, KAISER_BETA, STOPBAND_EDGE, ZERO_CROSSINGS};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("invalid audio parameter: {0}")]
    InvalidParameter(String),
}

/// Mono waveform with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate_hz: u32) -> Self {
        AudioBuffer {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, &x| m.max(x.abs()))
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.samples.iter().map(|&x| (x as f64) * (x as f64)).sum();
        (sum / self.samples.len() as f64).sqrt()
    }
}
