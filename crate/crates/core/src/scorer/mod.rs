//! Cosine scoring, symmetric cohort normalization, calibration, fusion and
//! phrase gating.

mod cohort;
mod trials;

use crate::error::{Error, Result};
use crate::model::Embedding;

pub use cohort::{cohort_stats, Cohort};
pub use trials::{score_trials, ScoredRun};

/// Mean and population standard deviation of a probe's cosine scores
/// against a cohort.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
    pub cohort_size: usize,
    /// True when the measured deviation fell below `std_floor` and was
    /// replaced by it.
    pub floored: bool,
}

impl NormStats {
    pub fn new(mean: f64, std: f64, cohort_size: usize) -> Result<Self> {
        let s = NormStats {
            mean,
            std,
            cohort_size,
            floored: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() || !self.std.is_finite() || self.std <= 0.0 {
            return Err(Error::Contract(format!(
                "invalid cohort statistics (mean {}, std {})",
                self.mean, self.std
            )));
        }
        if self.cohort_size < 2 {
            return Err(Error::Contract(
                "cohort statistics need at least 2 scores".into(),
            ));
        }
        Ok(())
    }
}

/// How normalized scores are mapped into [0, 1] before fusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Calibration {
    /// Per-channel min-max over the run; constant input maps to 0.5.
    MinMax,
    /// `1 / (1 + exp(-scale * x))`, applied score by score.
    Logistic { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoringOptions {
    pub cohort_limit: usize,
    pub adaptive_top_k: Option<usize>,
    pub std_floor: f64,
    pub calibration: Calibration,
    /// Per-channel fusion weights; uniform when absent.
    pub fusion_weights: Option<Vec<f64>>,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        ScoringOptions {
            cohort_limit: 10_000,
            adaptive_top_k: None,
            std_floor: 1e-12,
            calibration: Calibration::MinMax,
            fusion_weights: None,
        }
    }
}

impl ScoringOptions {
    pub fn validate(&self) -> Result<()> {
        if self.cohort_limit < 2 {
            return Err(Error::Contract("cohort_limit must be at least 2".into()));
        }
        match self.adaptive_top_k {
            Some(k) if k < 2 => {
                return Err(Error::Contract("adaptive_top_k must be at least 2".into()))
            }
            Some(k) if k > self.cohort_limit => {
                return Err(Error::Contract(format!(
                    "adaptive_top_k {k} exceeds cohort_limit {}",
                    self.cohort_limit
                )))
            }
            _ => {}
        }
        if !(self.std_floor > 0.0 && self.std_floor.is_finite()) {
            return Err(Error::Contract(
                "std_floor must be a small positive number".into(),
            ));
        }
        if let Calibration::Logistic { scale } = self.calibration {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::Contract("logistic scale must be positive".into()));
            }
        }
        if let Some(w) = &self.fusion_weights {
            check_weights(w, w.len())?;
        }
        Ok(())
    }
}

/// Cosine similarity, clamped to [-1, 1].
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.channel != b.channel || a.dim() != b.dim() {
        return Err(Error::Contract(format!(
            "cannot compare `{}` ({}, dim {}) with `{}` ({}, dim {})",
            a.utterance_id,
            a.channel,
            a.dim(),
            b.utterance_id,
            b.channel,
            b.dim()
        )));
    }
    let (na, nb) = (a.norm(), b.norm());
    for (n, e) in [(na, a), (nb, b)] {
        if n == 0.0 {
            return Err(Error::Degenerate(format!(
                "`{}` has zero norm",
                e.utterance_id
            )));
        }
    }
    let dot: f64 = a
        .vector
        .iter()
        .zip(&b.vector)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Symmetric normalization: the raw score z-normalized against the trial
/// side's cohort statistics plus the same against the enrollment side's.
pub fn s_norm(raw: f64, enroll: &NormStats, trial: &NormStats) -> f64 {
    (raw - trial.mean) / trial.std + (raw - enroll.mean) / enroll.std
}

/// Collapses three enrollment utterances into one unit-norm model embedding
/// (mean, then L2 normalization).
pub fn enroll_aggregate(model_id: &str, utterances: &[Embedding]) -> Result<Embedding> {
    let [first, rest @ ..] = utterances else {
        return Err(Error::Contract(
            "enrollment needs exactly 3 utterances, got 0".into(),
        ));
    };
    if utterances.len() != 3 {
        return Err(Error::Contract(format!(
            "enrollment needs exactly 3 utterances, got {}",
            utterances.len()
        )));
    }
    if let Some(bad) = rest
        .iter()
        .find(|e| e.channel != first.channel || e.dim() != first.dim())
    {
        return Err(Error::Contract(format!(
            "enrollment utterance `{}` does not match channel `{}` / dim {}",
            bad.utterance_id,
            first.channel,
            first.dim()
        )));
    }
    let mut mean = vec![0.0f64; first.dim()];
    for e in utterances {
        for (m, &v) in mean.iter_mut().zip(&e.vector) {
            *m += f64::from(v);
        }
    }
    for m in &mut mean {
        *m /= 3.0;
    }
    let norm = mean.iter().map(|m| m * m).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Degenerate(format!(
            "enrollment mean for `{model_id}` has zero norm"
        )));
    }
    Embedding::new(
        model_id,
        first.channel.clone(),
        mean.iter().map(|m| (m / norm) as f32).collect(),
    )
}

/// Min-max map onto [0, 1]; constant input maps to 0.5.
pub fn calibrate_minmax(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.len() < 2 {
        return Err(Error::Contract(format!(
            "min-max calibration needs at least 2 scores, got {}",
            scores.len()
        )));
    }
    check_finite(scores)?;
    Ok(minmax(scores))
}

pub(crate) fn minmax(scores: &[f64]) -> Vec<f64> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        let span = hi - lo;
        scores
            .iter()
            .map(|&x| ((x - lo) / span).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.5; scores.len()]
    }
}

pub fn calibrate_logistic(scores: &[f64], scale: f64) -> Result<Vec<f64>> {
    check_finite(scores)?;
    Ok(scores
        .iter()
        .map(|&x| 1.0 / (1.0 + (-scale * x).exp()))
        .collect())
}

fn check_finite(scores: &[f64]) -> Result<()> {
    match scores.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::Data(format!("score {i} is not finite"))),
        None => Ok(()),
    }
}

fn check_weights(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::Contract(format!(
            "{} weights for {n} inputs",
            w.len()
        )));
    }
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Contract(
            "fusion weights must be finite and nonnegative".into(),
        ));
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Contract("fusion weights sum to zero".into()));
    }
    Ok(())
}

fn check_prob(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Contract(format!("{what} {p} outside [0, 1]")))
    }
}

/// Weighted arithmetic mean of per-channel probabilities.
pub fn fuse(probs: &[f64], weights: Option<&[f64]>) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::Contract("nothing to fuse".into()));
    }
    for &p in probs {
        check_prob(p, "probability")?;
    }
    let (num, den) = match weights {
        Some(w) => {
            check_weights(w, probs.len())?;
            (
                probs.iter().zip(w).map(|(p, w)| p * w).sum::<f64>(),
                w.iter().sum::<f64>(),
            )
        }
        None => (probs.iter().sum::<f64>(), probs.len() as f64),
    };
    // Rounding can push the mean a few ulps outside the inputs' range.
    let lo = probs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((num / den).clamp(lo, hi))
}

/// Final score: speaker probability times phrase probability.
pub fn gate(speaker_prob: f64, phrase_prob: f64) -> Result<f64> {
    check_prob(speaker_prob, "speaker probability")?;
    check_prob(phrase_prob, "phrase probability")?;
    Ok(speaker_prob * phrase_prob)
}
