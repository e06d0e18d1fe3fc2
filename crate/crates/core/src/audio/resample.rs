//! Rational polyphase resampler with a Kaiser-windowed sinc kernel.
//!
//! The rate ratio is reduced to `up / down`. Output sample `n` sits at input
//! position `n * down / up`; its fractional part selects one of `up` phases of
//! a precomputed kernel. The kernel spans [`ZERO_CROSSINGS`] periods of the
//! lower of the two rates on each side, so the transition band has the same
//! width in Hz whichever direction we convert. The stopband starts at
//! [`STOPBAND_EDGE`] times the lower Nyquist frequency.

use std::f64::consts::PI;

use super::{AudioBuffer, AudioError};

pub const KAISER_BETA: f64 = 12.0;
/// Kernel half-width in periods of the lower sample rate.
pub const ZERO_CROSSINGS: usize = 32;
/// Start of the stopband as a fraction of the lower Nyquist frequency.
pub const STOPBAND_EDGE: f64 = 0.95;

/// Phase tables larger than this are evaluated on the fly instead.
const MAX_TABLE_PHASES: u64 = 4096;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

#[derive(Debug, Clone)]
pub struct SincResampler {
    source_rate: u32,
    target_rate: u32,
    up: u64,
    down: u64,
    half_taps: usize,
    /// Cutoff in cycles per input sample.
    cutoff: f64,
    /// `up * 2 * half_taps` coefficients, phase-major, each phase summing to 1.
    table: Option<Vec<f64>>,
}

impl SincResampler {
    pub fn new(source_rate: u32, target_rate: u32) -> Result<Self, AudioError> {
        if source_rate == 0 || target_rate == 0 {
            return Err(AudioError::InvalidParameter(format!(
                "sample rates must be positive (got {source_rate} -> {target_rate})"
            )));
        }
        let g = gcd(source_rate as u64, target_rate as u64);
        let up = target_rate as u64 / g;
        let down = source_rate as u64 / g;
        let low = source_rate.min(target_rate) as f64;
        let half_taps = (ZERO_CROSSINGS as f64 * source_rate as f64 / low).ceil() as usize;

        // Kaiser design relation between attenuation, order and transition width.
        let attenuation_db = KAISER_BETA / 0.1102 + 8.7;
        let order = (2 * half_taps) as f64;
        let transition = (attenuation_db - 8.0) / (2.285 * order) / (2.0 * PI);
        let stop = STOPBAND_EDGE * low / 2.0 / source_rate as f64;
        let cutoff = stop - transition / 2.0;

        let mut r = SincResampler {
            source_rate,
            target_rate,
            up,
            down,
            half_taps,
            cutoff,
            table: None,
        };
        if up <= MAX_TABLE_PHASES {
            let taps = 2 * half_taps;
            let mut table = Vec::with_capacity(up as usize * taps);
            for p in 0..up {
                table.extend(r.phase_taps(p as f64 / up as f64));
            }
            r.table = Some(table);
        }
        Ok(r)
    }

    pub fn source_rate(&self) -> u32 {
        self.source_rate
    }

    pub fn target_rate(&self) -> u32 {
        self.target_rate
    }

    /// Cutoff frequency (-6 dB point) in Hz.
    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff * self.source_rate as f64
    }

    fn kernel(&self, tau: f64) -> f64 {
        let h = self.half_taps as f64;
        if tau.abs() >= h {
            return 0.0;
        }
        let x = 2.0 * self.cutoff * tau;
        let sinc = if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
        let r = tau / h;
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / bessel_i0(KAISER_BETA);
        2.0 * self.cutoff * sinc * window
    }

    /// Taps for input samples `i0 - half + 1 ..= i0 + half` at fractional
    /// offset `frac` past `i0`, normalized to unit DC gain.
    fn phase_taps(&self, frac: f64) -> Vec<f64> {
        let h = self.half_taps;
        let mut taps: Vec<f64> = (0..2 * h)
            .map(|k| self.kernel(frac + (h as f64 - 1.0) - k as f64))
            .collect();
        let sum: f64 = taps.iter().sum();
        for t in &mut taps {
            *t /= sum;
        }
        taps
    }

    /// `round(len * target / source)`, halves rounded up.
    pub fn output_len(&self, input_len: usize) -> usize {
        let num = input_len as u128 * self.up as u128;
        let den = self.down as u128;
        ((2 * num + den) / (2 * den)) as usize
    }

    pub fn process(&self, input: &[f32]) -> Vec<f32> {
        if self.source_rate == self.target_rate {
            return input.to_vec();
        }
        let n_out = self.output_len(input.len());
        let h = self.half_taps as i64;
        let taps = 2 * self.half_taps;
        let mut out = Vec::with_capacity(n_out);
        for n in 0..n_out as u64 {
            let pos = n as u128 * self.down as u128;
            let i0 = (pos / self.up as u128) as i64;
            let phase = (pos % self.up as u128) as u64;
            let scratch;
            let coeffs: &[f64] = match &self.table {
                Some(table) => &table[phase as usize * taps..(phase as usize + 1) * taps],
                None => {
                    scratch = self.phase_taps(phase as f64 / self.up as f64);
                    &scratch
                }
            };
            let start = i0 - h + 1;
            let mut acc = 0.0f64;
            for (k, c) in coeffs.iter().enumerate() {
                let j = start + k as i64;
                if j >= 0 && (j as usize) < input.len() {
                    acc += c * input[j as usize] as f64;
                }
            }
            out.push(acc as f32);
        }
        out
    }
}

/// Resample to `target_rate_hz`. Equal rates return the buffer unchanged.
pub fn resample(buf: &AudioBuffer, target_rate_hz: u32) -> Result<AudioBuffer, AudioError> {
    if target_rate_hz == 0 {
        return Err(AudioError::InvalidParameter("target rate must be positive".into()));
    }
    if buf.sample_rate_hz == target_rate_hz {
        return Ok(buf.clone());
    }
    let r = SincResampler::new(buf.sample_rate_hz, target_rate_hz)?;
    Ok(AudioBuffer::new(r.process(&buf.samples), target_rate_hz))
}
