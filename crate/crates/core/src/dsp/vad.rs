use std::ops::Range;

use super::{Waveform, SAMPLE_RATE};
use crate::error::{Error, Result};

/// Energy VAD settings. A frame is active when its energy exceeds the loudest
/// frame's energy plus `threshold_db` (a negative offset).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VadParams {
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub threshold_db: f64,
}

impl Default for VadParams {
    fn default() -> Self {
        VadParams {
            frame_ms: 25.0,
            hop_ms: 10.0,
            threshold_db: -30.0,
        }
    }
}

impl VadParams {
    fn samples(&self) -> Result<(usize, usize)> {
        let to_samples = |ms: f64| (ms * f64::from(SAMPLE_RATE) / 1000.0).round() as usize;
        let (frame, hop) = (to_samples(self.frame_ms), to_samples(self.hop_ms));
        if !(self.frame_ms.is_finite() && self.hop_ms.is_finite()) || frame == 0 || hop == 0 {
            return Err(Error::Contract("VAD frame and hop must be positive".into()));
        }
        if !(self.threshold_db.is_finite() && self.threshold_db < 0.0) {
            return Err(Error::Contract(format!(
                "VAD threshold must be a negative dB offset, got {}",
                self.threshold_db
            )));
        }
        Ok((frame, hop))
    }
}

/// Sample range kept by [`vad_trim`]: from the start of the first active
/// frame to the end of the last one. When the final frame is active the span
/// runs to the end of the signal, so the samples past the last full frame
/// are not lost.
pub fn vad_span(x: &Waveform, params: &VadParams) -> Result<Range<usize>> {
    let (frame, hop) = params.samples()?;
    let s = x.samples();
    if s.len() < frame {
        return Err(Error::Data(format!(
            "waveform of {} samples is shorter than one {frame}-sample VAD frame",
            s.len()
        )));
    }
    let n_frames = (s.len() - frame) / hop + 1;
    let energy: Vec<f64> = (0..n_frames)
        .map(|t| {
            s[t * hop..t * hop + frame]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                / frame as f64
        })
        .collect();
    let peak = energy.iter().copied().fold(0.0f64, f64::max);
    if peak == 0.0 {
        return Err(Error::Data("waveform is entirely silent".into()));
    }
    let cutoff = peak * 10f64.powf(params.threshold_db / 10.0);
    let first = energy
        .iter()
        .position(|&e| e > cutoff)
        .expect("peak frame is active");
    let last = energy
        .iter()
        .rposition(|&e| e > cutoff)
        .expect("peak frame is active");
    let end = if last == n_frames - 1 {
        s.len()
    } else {
        last * hop + frame
    };
    Ok(first * hop..end)
}

/// Drops leading and trailing silence.
pub fn vad_trim(x: &Waveform, params: &VadParams) -> Result<Waveform> {
    let span = vad_span(x, params)?;
    Waveform::new(x.samples()[span].to_vec())
}
