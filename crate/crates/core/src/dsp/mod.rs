//! Waveform preprocessing and augmentation: energy VAD trimming, noise
//! injection, reverberation, frequency-band drop and time drop.

mod augment;
mod stft;
mod vad;

use std::path::Path;

use crate::error::{Error, Result};

pub use augment::{
    add_noise, add_noise_detailed, freq_drop, plan_freq_drop, plan_time_drop, reverb, time_drop,
    AugmentParams, NoiseMix, TimeDropMode, TimeUnit,
};
pub use stft::{Stft, StftParams};
pub use vad::{vad_span, vad_trim, VadParams};

pub const SAMPLE_RATE: u32 = 16_000;

/// Mono 16 kHz audio with samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
}

impl Waveform {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Data("empty waveform".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::Data(format!(
                "sample {i} ({}) is not a finite value in [-1, 1]",
                samples[i]
            )));
        }
        Ok(Waveform { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / f64::from(SAMPLE_RATE)
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }
}

pub(crate) fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Rescales the whole signal by 1/peak when the peak exceeds 1. Returns the
/// applied factor.
pub(crate) fn clip_guard(x: &mut [f64]) -> f64 {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 1.0 {
        let scale = 1.0 / peak;
        for v in x.iter_mut() {
            *v = (*v * scale).clamp(-1.0, 1.0);
        }
        scale
    } else {
        1.0
    }
}

/// Reads a PCM16 mono 16 kHz RIFF/WAVE file, mapping sample `s` to `s / 32768`.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let format_err = |msg: String| Error::Format(format!("{}: {msg}", path.display()));
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => format_err(other.to_string()),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(format_err(format!(
            "{} channels, expected mono",
            spec.channels
        )));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(format_err(format!(
            "{} Hz, expected {SAMPLE_RATE} Hz",
            spec.sample_rate
        )));
    }
    if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(format_err(format!(
            "{}-bit {:?} samples, expected 16-bit PCM",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| format_err(e.to_string()))?;
    Waveform::new(samples).map_err(|e| format_err(e.to_string()))
}

/// Writes PCM16 mono 16 kHz, quantizing `x * 32768` with round-half-even and
/// clamping to the i16 range.
pub fn write_wav(wave: &Waveform, path: &Path) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wrap = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wrap)?;
    for &s in wave.samples() {
        writer.write_sample(quantize(s)).map_err(wrap)?;
    }
    writer.finalize().map_err(wrap)
}

fn quantize(x: f64) -> i16 {
    (x * 32768.0).round_ties_even().clamp(-32768.0, 32767.0) as i16
}
