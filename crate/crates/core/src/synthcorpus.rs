//! Seeded synthetic datasets in any of the supported raw label formats, for
//! exercising the pipeline end to end without real corpora.
//!
//! Each clip is a sine tone plus uniform noise written as 16-bit PCM WAV.
//! With [`Separability::Separable`], spoof clips are loud and tone-dominant
//! while bonafide clips are quiet and noise-dominant, so any scorer that
//! grows with energy ranks every spoof clip above every bonafide clip, both
//! on raw samples and after peak normalization.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::manifest::Label;
use crate::registry::{Category, DatasetDescriptor, FetchDescriptor, GenerativeMethod};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid corpus spec: {0}")]
    Spec(String),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("WAV encoding failed for {path}: {message}")]
    Wav { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Separability {
    /// Classes separated by energy and crest factor.
    Separable,
    /// Class distributions overlap.
    Overlapping,
    /// Every clip has the same waveform regardless of label.
    Identical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelFormat {
    AsvspoofProtocol,
    CsvLabeled,
    Dirtree,
    ListingRealOnly,
    ListingFakeOnly,
}

impl LabelFormat {
    pub const ALL: [LabelFormat; 5] = [
        LabelFormat::AsvspoofProtocol,
        LabelFormat::CsvLabeled,
        LabelFormat::Dirtree,
        LabelFormat::ListingRealOnly,
        LabelFormat::ListingFakeOnly,
    ];

    pub fn adapter_id(self) -> &'static str {
        match self {
            LabelFormat::AsvspoofProtocol => "asvspoof_protocol",
            LabelFormat::CsvLabeled => "csv_labeled",
            LabelFormat::Dirtree => "dirtree",
            LabelFormat::ListingRealOnly => "listing_real_only",
            LabelFormat::ListingFakeOnly => "listing_fake_only",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub dataset_id: String,
    pub n_bonafide: usize,
    pub n_spoof: usize,
    pub sample_rate_hz: u32,
    pub duration_s: f64,
    pub label_format: LabelFormat,
    pub separability: Separability,
    pub seed: u64,
}

impl CorpusSpec {
    pub fn new(dataset_id: &str, label_format: LabelFormat) -> Self {
        CorpusSpec {
            dataset_id: dataset_id.to_string(),
            n_bonafide: 10,
            n_spoof: 10,
            sample_rate_hz: 16000,
            duration_s: 0.5,
            label_format,
            separability: Separability::Separable,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Spec(m.to_string()));
        if self.dataset_id.is_empty() {
            return bad("dataset_id is empty");
        }
        if self.sample_rate_hz == 0 {
            return bad("sample rate must be positive");
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad("duration must be positive");
        }
        match self.label_format {
            LabelFormat::ListingRealOnly if self.n_spoof > 0 => bad("listing_real_only holds bonafide clips only"),
            LabelFormat::ListingFakeOnly if self.n_bonafide > 0 => bad("listing_fake_only holds spoof clips only"),
            _ => Ok(()),
        }
    }

    fn audio_dir(&self) -> &'static str {
        match self.label_format {
            LabelFormat::AsvspoofProtocol => "wav",
            _ => "audio",
        }
    }

    /// A registry descriptor whose adapter reads the generated layout.
    pub fn descriptor(&self) -> DatasetDescriptor {
        let mut adapter_args = BTreeMap::new();
        match self.label_format {
            LabelFormat::AsvspoofProtocol => {
                adapter_args.insert("audio_dir".to_string(), self.audio_dir().to_string());
                adapter_args.insert("extension".to_string(), "wav".to_string());
            }
            LabelFormat::ListingRealOnly | LabelFormat::ListingFakeOnly => {
                adapter_args.insert("audio_dir".to_string(), self.audio_dir().to_string());
            }
            LabelFormat::CsvLabeled | LabelFormat::Dirtree => {}
        }
        let category = match self.label_format {
            LabelFormat::ListingRealOnly => Category::RealOnly,
            LabelFormat::ListingFakeOnly => Category::FakeOnly,
            _ => Category::RealPlusFake,
        };
        DatasetDescriptor {
            id: self.dataset_id.clone(),
            display_name: format!("Synthetic {}", self.dataset_id),
            category,
            in_the_wild: false,
            perturbation: false,
            languages: vec!["EN".to_string()],
            accent: false,
            vocal_sounds: false,
            expressivity: false,
            uses_vocoder: true,
            uses_neural_codec: false,
            generative_method: GenerativeMethod::TtsVc,
            adapter_id: self.label_format.adapter_id().to_string(),
            label_source: None,
            adapter_args,
            fetch: FetchDescriptor {
                sources: Vec::new(),
                license_note: "synthetic".to_string(),
                approximate_size_bytes: 0,
            },
            group_exclusions: Default::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthClip {
    pub entry_id: String,
    pub relative_path: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedCorpus {
    pub root: PathBuf,
    pub clips: Vec<SynthClip>,
}

struct Voice {
    freq: f64,
    phase: f64,
    tone: f64,
    noise: f64,
    noise_seed: u64,
}

fn voice(rng: &mut ChaCha8Rng, label: Label, mode: Separability) -> Voice {
    let freq = rng.gen_range(200.0..2000.0);
    let phase = rng.gen_range(0.0..TAU);
    let noise_seed = rng.gen();
    let (tone, noise) = match (mode, label) {
        (Separability::Separable, Label::Spoof) => (rng.gen_range(0.5..0.8), 0.005),
        (Separability::Separable, Label::Bonafide) => (rng.gen_range(0.01..0.03), rng.gen_range(0.08..0.12)),
        (Separability::Overlapping, Label::Spoof) => (rng.gen_range(0.15..0.6), 0.08),
        (Separability::Overlapping, Label::Bonafide) => (rng.gen_range(0.05..0.5), 0.08),
        (Separability::Identical, _) => (0.0, 0.0),
    };
    match mode {
        Separability::Identical => Voice {
            freq: 440.0,
            phase: 0.0,
            tone: 0.4,
            noise: 0.05,
            noise_seed: 0,
        },
        _ => Voice {
            freq,
            phase,
            tone,
            noise,
            noise_seed,
        },
    }
}

fn render(v: &Voice, sample_rate: u32, n: usize) -> Vec<i16> {
    let mut noise = ChaCha8Rng::seed_from_u64(v.noise_seed);
    (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate as f64;
            let x = v.tone * (TAU * v.freq * t + v.phase).sin() + v.noise * noise.gen_range(-1.0..1.0);
            (x.clamp(-1.0, 1.0) * 32767.0).round() as i16
        })
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), SynthError> {
    let io = |source| SynthError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, bytes).map_err(io)
}

fn write_wav(path: &Path, samples: &[i16], sample_rate: u32) -> Result<(), SynthError> {
    let wav_err = |e: hound::Error| SynthError::Wav {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut cursor = std::io::Cursor::new(Vec::new());
    {
        let mut w = hound::WavWriter::new(&mut cursor, spec).map_err(wav_err)?;
        for &s in samples {
            w.write_sample(s).map_err(wav_err)?;
        }
        w.finalize().map_err(wav_err)?;
    }
    write_file(path, &cursor.into_inner())
}

/// Write the corpus to `<out_dir>/<dataset_id>/` with the label source the
/// spec's format calls for. Output is a pure function of the spec.
pub fn generate_corpus(spec: &CorpusSpec, out_dir: &Path) -> Result<GeneratedCorpus, SynthError> {
    spec.validate()?;
    let root = out_dir.join(&spec.dataset_id);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_samples = ((spec.duration_s * spec.sample_rate_hz as f64).round() as usize).max(1);

    // Interleave labels so neither class is a contiguous block.
    let mut labels = Vec::with_capacity(spec.n_bonafide + spec.n_spoof);
    let (mut b, mut s) = (0, 0);
    while b < spec.n_bonafide || s < spec.n_spoof {
        if b < spec.n_bonafide {
            labels.push(Label::Bonafide);
            b += 1;
        }
        if s < spec.n_spoof {
            labels.push(Label::Spoof);
            s += 1;
        }
    }

    let mut clips = Vec::with_capacity(labels.len());
    for (i, &label) in labels.iter().enumerate() {
        let stem = format!("{}_{:05}", spec.dataset_id, i);
        let relative_path = match spec.label_format {
            LabelFormat::Dirtree => {
                let dir = if label == Label::Bonafide { "real" } else { "fake" };
                format!("{dir}/{stem}.wav")
            }
            _ => format!("{}/{stem}.wav", spec.audio_dir()),
        };
        let entry_id = match spec.label_format {
            LabelFormat::Dirtree => relative_path.trim_end_matches(".wav").to_string(),
            _ => stem,
        };
        let v = voice(&mut rng, label, spec.separability);
        write_wav(
            &root.join(&relative_path),
            &render(&v, spec.sample_rate_hz, n_samples),
            spec.sample_rate_hz,
        )?;
        clips.push(SynthClip {
            entry_id,
            relative_path,
            label,
        });
    }

    let mut text = String::new();
    match spec.label_format {
        LabelFormat::AsvspoofProtocol => {
            for (i, c) in clips.iter().enumerate() {
                let attack = if c.label == Label::Spoof {
                    format!("A{:02}", i % 7 + 1)
                } else {
                    "-".into()
                };
                text.push_str(&format!("SPK{:03} {} - {attack} {}\n", i % 5, c.entry_id, c.label));
            }
            write_file(&root.join("protocol.txt"), text.as_bytes())?;
        }
        LabelFormat::CsvLabeled => {
            text.push_str("id,file,label,duration\n");
            for c in &clips {
                let word = if c.label == Label::Spoof { "fake" } else { "real" };
                text.push_str(&format!(
                    "{},{},{word},{}\n",
                    c.entry_id, c.relative_path, spec.duration_s
                ));
            }
            write_file(&root.join("labels.csv"), text.as_bytes())?;
        }
        LabelFormat::ListingRealOnly | LabelFormat::ListingFakeOnly => {
            for c in &clips {
                text.push_str(&format!("{}.wav\n", c.entry_id));
            }
            write_file(&root.join("files.txt"), text.as_bytes())?;
        }
        LabelFormat::Dirtree => {}
    }
    Ok(GeneratedCorpus { root, clips })
}
