use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftParams {
    pub n_fft: usize,
    pub hop: usize,
    pub win_length: usize,
}

impl Default for StftParams {
    fn default() -> Self {
        StftParams {
            n_fft: 512,
            hop: 160,
            win_length: 400,
        }
    }
}

impl StftParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_fft == 0 || self.hop == 0 || self.win_length == 0 {
            return Err(Error::Contract("STFT parameters must be positive".into()));
        }
        if self.win_length > self.n_fft {
            return Err(Error::Contract("win_length cannot exceed n_fft".into()));
        }
        if self.hop > self.win_length {
            return Err(Error::Contract("hop cannot exceed win_length".into()));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }
}

/// Centered short-time Fourier transform with a periodic Hann window,
/// zero-padded to `n_fft`, and its weighted overlap-add inverse.
pub struct Stft {
    params: StftParams,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Stft {
    pub fn new(params: StftParams) -> Result<Self> {
        params.validate()?;
        let mut window = vec![0.0; params.n_fft];
        let offset = (params.n_fft - params.win_length) / 2;
        for i in 0..params.win_length {
            window[offset + i] = 0.5 - 0.5 * (2.0 * PI * i as f64 / params.win_length as f64).cos();
        }
        let mut planner = FftPlanner::new();
        Ok(Stft {
            params,
            window,
            forward: planner.plan_fft_forward(params.n_fft),
            inverse: planner.plan_fft_inverse(params.n_fft),
        })
    }

    pub fn params(&self) -> StftParams {
        self.params
    }

    fn n_frames(&self, len: usize) -> usize {
        (len.saturating_sub(1)) / self.params.hop + 2
    }

    /// Full complex spectra, one `n_fft`-length vector per frame. Frame `t`
    /// is centered on sample `t * hop`.
    pub fn analyze(&self, x: &[f64]) -> Vec<Vec<Complex<f64>>> {
        let n_fft = self.params.n_fft;
        let pad = n_fft / 2;
        (0..self.n_frames(x.len()))
            .map(|t| {
                let start = (t * self.params.hop) as isize - pad as isize;
                let mut buf: Vec<Complex<f64>> = (0..n_fft)
                    .map(|k| {
                        let idx = start + k as isize;
                        let v = if idx >= 0 && (idx as usize) < x.len() {
                            x[idx as usize]
                        } else {
                            0.0
                        };
                        Complex::new(v * self.window[k], 0.0)
                    })
                    .collect();
                self.forward.process(&mut buf);
                buf
            })
            .collect()
    }

    /// Inverse of [`Stft::analyze`], truncated to `len` samples.
    pub fn synthesize(&self, frames: Vec<Vec<Complex<f64>>>, len: usize) -> Vec<f64> {
        let n_fft = self.params.n_fft;
        let pad = n_fft / 2;
        let mut out = vec![0.0; len];
        let mut weight = vec![0.0; len];
        let scale = 1.0 / n_fft as f64;
        for (t, mut buf) in frames.into_iter().enumerate() {
            self.inverse.process(&mut buf);
            let start = (t * self.params.hop) as isize - pad as isize;
            for (k, c) in buf.iter().enumerate() {
                let idx = start + k as isize;
                if idx < 0 || idx as usize >= len {
                    continue;
                }
                let w = self.window[k];
                out[idx as usize] += c.re * scale * w;
                weight[idx as usize] += w * w;
            }
        }
        for (o, w) in out.iter_mut().zip(&weight) {
            *o = if *w > 1e-10 { *o / w } else { 0.0 };
        }
        out
    }
}
