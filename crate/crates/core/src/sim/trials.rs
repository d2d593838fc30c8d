use std::collections::HashMap;

use rand::seq::index;
use rand::Rng;

use super::population::{model_id, utterance_id};
use super::{substream, Population, SimConfig, N_ENROLL};
use crate::error::{Error, Result};
use crate::model::{Gender, GroundTruth, PhraseId, PosteriorTable, Trial, TrialLabel, N_PHRASES};

/// Test utterances of `ns` speakers by `np` phrases, indexed without
/// materializing the list. `same_*` selects the model's own speaker/phrase
/// versus every other one.
struct Pool<'a> {
    config: &'a SimConfig,
    speaker: usize,
    phrase_idx: usize,
    same_speaker: bool,
    same_phrase: bool,
}

impl Pool<'_> {
    fn dims(&self) -> (usize, usize) {
        let ns = if self.same_speaker {
            1
        } else {
            self.config.n_speakers - 1
        };
        let np = if self.same_phrase {
            1
        } else {
            self.config.phrases.len() - 1
        };
        (ns, np)
    }

    fn len(&self) -> usize {
        let (ns, np) = self.dims();
        ns * np * self.config.tests_per_speaker_phrase()
    }

    fn get(&self, i: usize) -> String {
        let t = self.config.tests_per_speaker_phrase();
        let (_, np) = self.dims();
        let (u, rest) = (i % t, i / t);
        let (pi, si) = (rest % np, rest / np);
        let skip = |j: usize, own: usize| if j < own { j } else { j + 1 };
        let s = if self.same_speaker {
            self.speaker
        } else {
            skip(si, self.speaker)
        };
        let p = if self.same_phrase {
            self.phrase_idx
        } else {
            skip(pi, self.phrase_idx)
        };
        utterance_id(s, self.config.phrases[p], N_ENROLL + u)
    }
}

/// Labeled trials for every enrolled model, drawn without replacement from
/// the test utterances (never the enrollment ones). Classes that cannot
/// exist, such as wrong-phrase trials with a single phrase in play, are
/// omitted.
pub fn gen_trials(config: &SimConfig, population: &Population) -> Result<Vec<Trial>> {
    config.validate()?;
    if config.n_speakers < 2 {
        return Err(Error::Data(format!(
            "imposter trials need at least 2 speakers, got {}",
            config.n_speakers
        )));
    }
    let expected = config.n_speakers * config.phrases.len();
    if population.enrollments.len() != expected {
        return Err(Error::Contract(format!(
            "population has {} models, config implies {expected}",
            population.enrollments.len()
        )));
    }
    let balance = config.balance();
    let mut trials = Vec::new();
    for s in 0..config.n_speakers {
        let gender = if s % 2 == 0 {
            Gender::Male
        } else {
            Gender::Female
        };
        for (k, &phrase) in config.phrases.iter().enumerate() {
            let model = model_id(s, phrase);
            let mut rng = substream(config.seed, &format!("trials/{model}"));
            for (label, count, same_speaker, same_phrase) in [
                (TrialLabel::TC, balance.tc, true, true),
                (TrialLabel::TW, balance.tw, true, false),
                (TrialLabel::IC, balance.ic, false, true),
                (TrialLabel::IW, balance.iw, false, false),
            ] {
                let pool = Pool {
                    config,
                    speaker: s,
                    phrase_idx: k,
                    same_speaker,
                    same_phrase,
                };
                if pool.len() == 0 || count == 0 {
                    continue;
                }
                if count > pool.len() {
                    return Err(Error::Contract(format!(
                        "{count} {} trials per model requested but only {} test utterances qualify",
                        label.as_str(),
                        pool.len()
                    )));
                }
                let mut picks = index::sample(&mut rng, pool.len(), count).into_vec();
                picks.sort_unstable();
                for i in picks {
                    let mut t = Trial::new(model.clone(), pool.get(i));
                    t.label = Some(label);
                    t.gender = Some(gender);
                    t.language = Some(phrase.language());
                    trials.push(t);
                }
            }
        }
    }
    Ok(trials)
}

/// Simulated phrase-classifier output for every test utterance in `trials`.
pub fn gen_phrase_posteriors(
    config: &SimConfig,
    trials: &[Trial],
    ground_truth: &[GroundTruth],
) -> Result<PosteriorTable> {
    config.validate()?;
    let truth: HashMap<&str, PhraseId> = ground_truth
        .iter()
        .map(|g| (g.utterance_id.as_str(), g.phrase))
        .collect();
    let (lo, hi) = config.posterior_confidence_range;
    let mut table = PosteriorTable::new();
    for t in trials {
        let utt = t.test_utterance_id.as_str();
        if table.get(utt).is_some() {
            continue;
        }
        let phrase = *truth
            .get(utt)
            .ok_or_else(|| Error::Data(format!("no ground truth for utterance `{utt}`")))?;
        let mut rng = substream(config.seed, &format!("posterior/{utt}"));
        let correct = rng.random::<f64>() < config.classifier_accuracy;
        let predicted = if correct {
            phrase.index()
        } else {
            let j = rng.random_range(0..N_PHRASES - 1);
            if j < phrase.index() {
                j
            } else {
                j + 1
            }
        };
        let c = if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        };
        let mut row = [(1.0 - c) / (N_PHRASES - 1) as f64; N_PHRASES];
        row[predicted] = c;
        table.insert(utt, row)?;
    }
    Ok(table)
}
