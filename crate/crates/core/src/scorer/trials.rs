use std::collections::HashMap;

use rayon::prelude::*;

use super::{cosine, fuse, gate, minmax, s_norm, Calibration, Cohort, NormStats, ScoringOptions};
use crate::error::{Error, Result};
use crate::model::{Embedding, EmbeddingSet, PosteriorTable, ScoreRecord, SpeakerModel, Trial};

/// Output of [`score_trials`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRun {
    pub channels: Vec<String>,
    pub records: Vec<ScoreRecord>,
    /// Number of cohort-statistic computations performed, over all channels.
    pub stats_computed: usize,
    /// How many of those hit `std_floor`.
    pub stats_floored: usize,
}

struct ResolvedTrial<'a> {
    model: usize,
    test: usize,
    phrase_prob: f64,
    model_ref: &'a SpeakerModel,
}

/// Scores every trial through cosine, S-norm, calibration, fusion and
/// phrase gating. `tests[i]` and `cohorts[i]` hold channel `i`; records come
/// back in trial order.
///
/// Cohort statistics are computed once per distinct enrollment model and
/// once per distinct test utterance on each channel.
pub fn score_trials(
    models: &[SpeakerModel],
    tests: &[EmbeddingSet],
    trials: &[Trial],
    cohorts: &[EmbeddingSet],
    posteriors: &PosteriorTable,
    opts: &ScoringOptions,
) -> Result<ScoredRun> {
    opts.validate()?;
    if tests.is_empty() {
        return Err(Error::Contract("no channels to score".into()));
    }
    if cohorts.len() != tests.len() {
        return Err(Error::Contract(format!(
            "{} cohort sets for {} channels",
            cohorts.len(),
            tests.len()
        )));
    }
    for (t, c) in tests.iter().zip(cohorts) {
        if t.channel() != c.channel() {
            return Err(Error::Contract(format!(
                "cohort channel `{}` does not match test channel `{}`",
                c.channel(),
                t.channel()
            )));
        }
    }
    if let Some(w) = &opts.fusion_weights {
        if w.len() != tests.len() {
            return Err(Error::Contract(format!(
                "{} fusion weights for {} channels",
                w.len(),
                tests.len()
            )));
        }
    }
    if trials.is_empty() {
        return Err(Error::Data("no trials to score".into()));
    }

    let model_index: HashMap<&str, &SpeakerModel> =
        models.iter().map(|m| (m.model_id.as_str(), m)).collect();

    // Distinct models and test utterances, in first-appearance order.
    let mut model_slots: HashMap<&str, usize> = HashMap::new();
    let mut model_order: Vec<&SpeakerModel> = Vec::new();
    let mut test_slots: HashMap<&str, usize> = HashMap::new();
    let mut test_order: Vec<&str> = Vec::new();
    let mut resolved = Vec::with_capacity(trials.len());
    for t in trials {
        let model = *model_index.get(t.model_id.as_str()).ok_or_else(|| {
            Error::Data(format!("trial references unknown model `{}`", t.model_id))
        })?;
        let phrase_prob = posteriors
            .prob(&t.test_utterance_id, model.phrase)
            .ok_or_else(|| {
                Error::Data(format!(
                    "no phrase posterior for utterance `{}`",
                    t.test_utterance_id
                ))
            })?;
        let m = *model_slots
            .entry(model.model_id.as_str())
            .or_insert_with(|| {
                model_order.push(model);
                model_order.len() - 1
            });
        let u = *test_slots
            .entry(t.test_utterance_id.as_str())
            .or_insert_with(|| {
                test_order.push(t.test_utterance_id.as_str());
                test_order.len() - 1
            });
        resolved.push(ResolvedTrial {
            model: m,
            test: u,
            phrase_prob,
            model_ref: model,
        });
    }

    let mut stats_computed = 0;
    let mut stats_floored = 0;
    let mut normalized_by_channel: Vec<Vec<f64>> = Vec::with_capacity(tests.len());
    let mut raw_by_channel: Vec<Vec<f64>> = Vec::with_capacity(tests.len());

    for (test_set, cohort_set) in tests.iter().zip(cohorts) {
        let channel = &test_set.channel().name;
        let enrolls: Vec<&Embedding> = model_order
            .iter()
            .map(|m| {
                m.enrollment(channel).ok_or_else(|| {
                    Error::Data(format!(
                        "model `{}` has no `{channel}` enrollment",
                        m.model_id
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let test_embs: Vec<&Embedding> = test_order
            .iter()
            .map(|id| {
                test_set.get(id).ok_or_else(|| {
                    Error::Data(format!(
                        "no `{channel}` embedding for test utterance `{id}`"
                    ))
                })
            })
            .collect::<Result<_>>()?;

        let cohort = Cohort::new(cohort_set, opts.cohort_limit)?;
        let enroll_stats = cohort.stats_batch(&enrolls, opts)?;
        let test_stats = cohort.stats_batch(&test_embs, opts)?;
        stats_computed += enroll_stats.len() + test_stats.len();
        stats_floored += enroll_stats
            .iter()
            .chain(&test_stats)
            .filter(|s: &&NormStats| s.floored)
            .count();

        let pairs: Vec<(f64, f64)> = resolved
            .par_iter()
            .map(|r| {
                let raw = cosine(enrolls[r.model], test_embs[r.test])?;
                Ok((
                    raw,
                    s_norm(raw, &enroll_stats[r.model], &test_stats[r.test]),
                ))
            })
            .collect::<Result<_>>()?;
        let (raw, normalized): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        raw_by_channel.push(raw);
        normalized_by_channel.push(normalized);
    }

    let calibrated_by_channel: Vec<Vec<f64>> = normalized_by_channel
        .iter()
        .map(|scores| match opts.calibration {
            Calibration::MinMax => minmax(scores),
            Calibration::Logistic { scale } => scores
                .iter()
                .map(|&x| 1.0 / (1.0 + (-scale * x).exp()))
                .collect(),
        })
        .collect();

    let n_channels = tests.len();
    let records = resolved
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let column = |by: &Vec<Vec<f64>>| (0..n_channels).map(|c| by[c][i]).collect::<Vec<_>>();
            let calibrated = column(&calibrated_by_channel);
            let fused = fuse(&calibrated, opts.fusion_weights.as_deref())?;
            let final_score = gate(fused, r.phrase_prob)?;
            Ok(ScoreRecord {
                model_id: r.model_ref.model_id.clone(),
                test_utterance_id: trials[i].test_utterance_id.clone(),
                raw: column(&raw_by_channel),
                normalized: column(&normalized_by_channel),
                calibrated,
                fused,
                phrase_posterior: r.phrase_prob,
                final_score,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ScoredRun {
        channels: tests.iter().map(|t| t.channel().name.clone()).collect(),
        records,
        stats_computed,
        stats_floored,
    })
}
