use std::ops::Range;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::stft::{Stft, StftParams};
use super::{clip_guard, rms, Waveform, SAMPLE_RATE};
use crate::error::{Error, Result};

/// Longest accepted room impulse response, in samples (2 s).
const MAX_RIR_LEN: usize = 32_000;
const MAX_PLACEMENT_TRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeUnit {
    #[default]
    Ms,
    Samples,
}

impl TimeUnit {
    fn to_samples(self, v: f64) -> usize {
        match self {
            TimeUnit::Ms => (v * f64::from(SAMPLE_RATE) / 1000.0).round() as usize,
            TimeUnit::Samples => v.round() as usize,
        }
    }
}

impl FromStr for TimeUnit {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ms" => Ok(TimeUnit::Ms),
            "samples" => Ok(TimeUnit::Samples),
            _ => Err(format!("unknown time unit `{s}` (expected ms or samples)")),
        }
    }
}

/// What happens to a dropped time segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeDropMode {
    /// Overwrite with zeros, keeping the length.
    #[default]
    Zero,
    /// Cut the segment out, shortening the signal.
    Excise,
}

impl FromStr for TimeDropMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "zero" => Ok(TimeDropMode::Zero),
            "excise" => Ok(TimeDropMode::Excise),
            _ => Err(format!(
                "unknown time-drop mode `{s}` (expected zero or excise)"
            )),
        }
    }
}

/// Sampling ranges for the random augmentations. All ranges are inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentParams {
    pub snr_db: (f64, f64),
    pub n_freq_bands: (usize, usize),
    pub freq_band_width: (usize, usize),
    pub n_time_drops: (usize, usize),
    pub time_drop_len: (f64, f64),
    pub time_unit: TimeUnit,
    pub time_drop_mode: TimeDropMode,
    pub stft: StftParams,
}

impl Default for AugmentParams {
    fn default() -> Self {
        AugmentParams {
            snr_db: (0.0, 15.0),
            n_freq_bands: (1, 3),
            freq_band_width: (2, 16),
            n_time_drops: (1, 5),
            time_drop_len: (1000.0, 2000.0),
            time_unit: TimeUnit::Ms,
            time_drop_mode: TimeDropMode::Zero,
            stft: StftParams::default(),
        }
    }
}

impl AugmentParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Contract(format!("invalid {what} range")));
        if !(self.snr_db.0.is_finite()
            && self.snr_db.1.is_finite()
            && self.snr_db.0 <= self.snr_db.1)
        {
            return bad("SNR");
        }
        if self.n_freq_bands.0 > self.n_freq_bands.1 {
            return bad("frequency band count");
        }
        let (w0, w1) = self.freq_band_width;
        if w0 == 0 || w0 > w1 || w1 > self.stft.n_bins() {
            return bad("frequency band width");
        }
        if self.n_time_drops.0 > self.n_time_drops.1 {
            return bad("time drop count");
        }
        let (l0, l1) = self.time_drop_len;
        if !(l0.is_finite() && l1.is_finite() && l0 <= l1) || self.time_unit.to_samples(l0) == 0 {
            return bad("time drop length");
        }
        self.stft.validate()
    }
}

/// Result of [`add_noise_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMix {
    pub output: Waveform,
    /// Gain applied to the noise before mixing.
    pub gain: f64,
    /// Whole-signal rescale applied afterwards to keep the peak at or below
    /// 1; exactly 1.0 when no rescale was needed.
    pub scale: f64,
}

/// Mixes `noise` into `x` at the requested SNR.
pub fn add_noise(x: &Waveform, noise: &Waveform, snr_db: f64) -> Result<Waveform> {
    add_noise_detailed(x, noise, snr_db).map(|m| m.output)
}

/// [`add_noise`], also reporting the noise gain and clip-guard scale. The
/// noise is looped or cropped to the length of `x`.
pub fn add_noise_detailed(x: &Waveform, noise: &Waveform, snr_db: f64) -> Result<NoiseMix> {
    if !snr_db.is_finite() {
        return Err(Error::Contract(format!("SNR must be finite, got {snr_db}")));
    }
    let n = noise.samples();
    let segment: Vec<f64> = (0..x.len()).map(|i| n[i % n.len()]).collect();
    let rms_n = rms(&segment);
    if rms_n == 0.0 {
        return Err(Error::Degenerate("noise segment has zero energy".into()));
    }
    let gain = x.rms() / (rms_n * 10f64.powf(snr_db / 20.0));
    let mut out: Vec<f64> = x
        .samples()
        .iter()
        .zip(&segment)
        .map(|(s, v)| s + gain * v)
        .collect();
    let scale = clip_guard(&mut out);
    Ok(NoiseMix {
        output: Waveform::new(out)?,
        gain,
        scale,
    })
}

/// Convolves `x` with a room impulse response, keeps the first `len(x)`
/// samples and restores the input RMS.
pub fn reverb(x: &Waveform, rir: &Waveform) -> Result<Waveform> {
    let h = rir.samples();
    if h.len() >= MAX_RIR_LEN {
        return Err(Error::Data(format!(
            "impulse response of {} samples exceeds the {MAX_RIR_LEN}-sample limit",
            h.len()
        )));
    }
    if rir.rms() == 0.0 {
        return Err(Error::Degenerate("impulse response has zero energy".into()));
    }
    let target = x.rms();
    if target == 0.0 {
        return Ok(x.clone());
    }
    let mut out = convolve_prefix(x.samples(), h);
    let got = rms(&out);
    if got == 0.0 {
        return Err(Error::Degenerate(
            "reverberant signal has zero energy".into(),
        ));
    }
    let k = target / got;
    out.iter_mut().for_each(|v| *v *= k);
    clip_guard(&mut out);
    Waveform::new(out)
}

/// First `x.len()` samples of the linear convolution `x * h`.
fn convolve_prefix(x: &[f64], h: &[f64]) -> Vec<f64> {
    let size = (x.len() + h.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let pad = |s: &[f64]| -> Vec<Complex<f64>> {
        let mut v: Vec<Complex<f64>> = s.iter().map(|&r| Complex::new(r, 0.0)).collect();
        v.resize(size, Complex::new(0.0, 0.0));
        v
    };
    let mut a = pad(x);
    let mut b = pad(h);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    a[..x.len()].iter().map(|c| c.re / size as f64).collect()
}

/// Draws the bands zeroed by [`freq_drop`], as half-open ranges of
/// one-sided STFT bins.
pub fn plan_freq_drop(params: &AugmentParams, seed: u64) -> Result<Vec<Range<usize>>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_bins = params.stft.n_bins();
    let count = rng.random_range(params.n_freq_bands.0..=params.n_freq_bands.1);
    Ok((0..count)
        .map(|_| {
            let width = rng.random_range(params.freq_band_width.0..=params.freq_band_width.1);
            let start = rng.random_range(0..=n_bins - width);
            start..start + width
        })
        .collect())
}

/// Zeroes random frequency bands in the STFT domain and resynthesizes.
pub fn freq_drop(x: &Waveform, params: &AugmentParams, seed: u64) -> Result<Waveform> {
    let bands = plan_freq_drop(params, seed)?;
    let stft = Stft::new(params.stft)?;
    let n_fft = params.stft.n_fft;
    let mut frames = stft.analyze(x.samples());
    for frame in frames.iter_mut() {
        for band in &bands {
            for k in band.clone() {
                frame[k] = Complex::new(0.0, 0.0);
                // Mirror bin, keeping the spectrum Hermitian.
                if k != 0 && 2 * k != n_fft {
                    frame[n_fft - k] = Complex::new(0.0, 0.0);
                }
            }
        }
    }
    let mut out = stft.synthesize(frames, x.len());
    clip_guard(&mut out);
    Waveform::new(out)
}

/// Draws non-overlapping segments for [`time_drop`], sorted by start.
/// Lengths are capped at the signal length; a segment that cannot be placed
/// within a bounded number of tries is skipped.
pub fn plan_time_drop(len: usize, params: &AugmentParams, seed: u64) -> Result<Vec<Range<usize>>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = params.time_unit.to_samples(params.time_drop_len.0).min(len);
    let hi = params.time_unit.to_samples(params.time_drop_len.1).min(len);
    let count = rng.random_range(params.n_time_drops.0..=params.n_time_drops.1);
    let mut placed: Vec<Range<usize>> = Vec::new();
    for _ in 0..count {
        let width = rng.random_range(lo..=hi);
        for _ in 0..MAX_PLACEMENT_TRIES {
            let start = rng.random_range(0..=len - width);
            let cand = start..start + width;
            if placed
                .iter()
                .all(|p| cand.end <= p.start || p.end <= cand.start)
            {
                placed.push(cand);
                break;
            }
        }
    }
    placed.sort_by_key(|r| r.start);
    Ok(placed)
}

/// Zeroes (or excises) random time segments.
pub fn time_drop(x: &Waveform, params: &AugmentParams, seed: u64) -> Result<Waveform> {
    let segs = plan_time_drop(x.len(), params, seed)?;
    let s = x.samples();
    let out = match params.time_drop_mode {
        TimeDropMode::Zero => {
            let mut out = s.to_vec();
            for r in &segs {
                out[r.clone()].iter_mut().for_each(|v| *v = 0.0);
            }
            out
        }
        TimeDropMode::Excise => {
            let mut out = Vec::with_capacity(s.len());
            let mut pos = 0;
            for r in &segs {
                out.extend_from_slice(&s[pos..r.start]);
                pos = r.end;
            }
            out.extend_from_slice(&s[pos..]);
            if out.is_empty() {
                return Err(Error::Data("time drop excised every sample".into()));
            }
            out
        }
    };
    Waveform::new(out)
}
