//! Synthetic stand-in for the embedding extractors and phrase classifier.
//!
//! Each utterance embedding is `normalize(R_m (z_s + sigma_phrase q_k +
//! sigma_channel e))` where `z_s` is the speaker latent, `q_k` the phrase
//! latent, `e` fresh noise and `R_m` a fixed per-channel projection. Every
//! random quantity is drawn from its own substream keyed by the entity it
//! belongs to, so the output does not depend on generation order.

mod population;
mod trials;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{validate_channels, ChannelSpec, PhraseId};

pub use population::{gen_population, model_id, speaker_id, utterance_id, Population};
pub use trials::{gen_phrase_posteriors, gen_trials};

/// Trials drawn per enrolled model, per trial class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialBalance {
    pub tc: usize,
    pub tw: usize,
    pub ic: usize,
    pub iw: usize,
}

impl TrialBalance {
    pub fn uniform(n: usize) -> Self {
        TrialBalance {
            tc: n,
            tw: n,
            ic: n,
            iw: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_speakers: usize,
    pub utterances_per_speaker_phrase: usize,
    pub latent_dim: usize,
    pub sigma_phrase: f64,
    pub sigma_channel: f64,
    pub classifier_accuracy: f64,
    pub posterior_confidence_range: (f64, f64),
    pub seed: u64,
    pub channels: Vec<ChannelSpec>,
    /// Phrases spoken by every speaker.
    pub phrases: Vec<PhraseId>,
    /// When false every speaker (and cohort speaker) shares one latent.
    pub speaker_factor: bool,
    /// Background embeddings per channel, from speakers outside the
    /// evaluation population.
    pub cohort_size: usize,
    /// Per-model trial counts; `None` draws as many of each class as there
    /// are test utterances per (speaker, phrase).
    pub balance: Option<TrialBalance>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_speakers: 50,
            utterances_per_speaker_phrase: 6,
            latent_dim: 64,
            sigma_phrase: 0.5,
            sigma_channel: 0.3,
            classifier_accuracy: 0.95,
            posterior_confidence_range: (0.7, 0.99),
            seed: 0,
            channels: ChannelSpec::defaults(),
            phrases: PhraseId::all().collect(),
            speaker_factor: true,
            cohort_size: 1000,
            balance: None,
        }
    }
}

/// Utterances per (speaker, phrase) reserved for enrollment.
pub const N_ENROLL: usize = 3;

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Contract(msg));
        if self.n_speakers == 0 {
            return bad("n_speakers must be positive".into());
        }
        if self.utterances_per_speaker_phrase <= N_ENROLL {
            return bad(format!(
                "utterances_per_speaker_phrase must be at least {}, got {}",
                N_ENROLL + 1,
                self.utterances_per_speaker_phrase
            ));
        }
        if self.latent_dim == 0 {
            return bad("latent_dim must be positive".into());
        }
        for (name, v) in [
            ("sigma_phrase", self.sigma_phrase),
            ("sigma_channel", self.sigma_channel),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a nonnegative real, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.classifier_accuracy) {
            return bad(format!(
                "classifier_accuracy must lie in [0, 1], got {}",
                self.classifier_accuracy
            ));
        }
        let (lo, hi) = self.posterior_confidence_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return bad(format!("invalid posterior confidence range [{lo}, {hi}]"));
        }
        validate_channels(&self.channels)?;
        let min_dim = self.channels.iter().map(|c| c.dim).min().unwrap_or(0);
        if self.latent_dim > min_dim {
            return bad(format!(
                "latent_dim {} exceeds the smallest channel dimension {min_dim}",
                self.latent_dim
            ));
        }
        if self.phrases.is_empty() {
            return bad("at least one phrase must be in play".into());
        }
        let mut seen = [false; crate::model::N_PHRASES];
        for p in &self.phrases {
            if std::mem::replace(&mut seen[p.index()], true) {
                return bad(format!("phrase {} listed twice", p.id()));
            }
        }
        if self.cohort_size < 2 {
            return bad("cohort_size must be at least 2".into());
        }
        Ok(())
    }

    pub fn tests_per_speaker_phrase(&self) -> usize {
        self.utterances_per_speaker_phrase - N_ENROLL
    }

    pub fn balance(&self) -> TrialBalance {
        self.balance
            .unwrap_or_else(|| TrialBalance::uniform(self.tests_per_speaker_phrase()))
    }
}

/// Independent RNG for one entity: ChaCha8 seeded with SHA-256 of the run
/// seed and the entity key.
pub fn substream(seed: u64, key: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}
