use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tdsv_core::dsp::{self, Waveform};
use tdsv_core::metrics::{det_csv, report_text, subset_eval};
use tdsv_core::model::{
    read_embeddings, read_enrollments, read_posteriors, read_scores, read_trials, write_embeddings,
    write_enrollments, write_ground_truth, write_posteriors, write_scores, write_trials, Embedding,
    EmbeddingSet, ScoreFile, SpeakerModel,
};
use tdsv_core::scorer::{enroll_aggregate, score_trials};
use tdsv_core::sim::{gen_phrase_posteriors, gen_population, gen_trials};
use tdsv_core::Error;

use crate::config::{stage_seed, AugmentKind, Config};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| {
        CliError::Core(Error::Data(format!(
            "cannot create {}: {e}",
            path.display()
        )))
    })
}

fn channel_file(cfg: &Config, dir: &Path, channel: &str) -> PathBuf {
    dir.join(format!("{channel}.{}", cfg.embedding_format.extension()))
}

/// Reads one embedding set per configured channel and checks its header.
fn read_channel_sets(cfg: &Config, dir: &Path) -> Result<Vec<EmbeddingSet>> {
    cfg.channels
        .iter()
        .map(|ch| {
            let path = channel_file(cfg, dir, &ch.name);
            let set = read_embeddings(&path, cfg.embedding_format)?;
            if set.channel() != ch {
                return Err(CliError::Core(Error::Format(format!(
                    "{}: holds channel {}, expected {ch}",
                    path.display(),
                    set.channel()
                ))));
            }
            Ok(set)
        })
        .collect()
}

/// Generates embeddings, cohorts, enrollment lists, trials, posteriors and
/// ground truth.
pub fn simulate(cfg: &Config) -> Result<()> {
    let pop = gen_population(&cfg.sim)?;
    let trials = gen_trials(&cfg.sim, &pop)?;
    let posteriors = gen_phrase_posteriors(&cfg.sim, &trials, &pop.ground_truth)?;

    let emb_dir = cfg.out.join("embeddings");
    let cohort_dir = cfg.out.join("cohort");
    mkdir(&emb_dir)?;
    mkdir(&cohort_dir)?;
    for (set, cohort) in pop.embeddings.iter().zip(&pop.cohorts) {
        let name = &set.channel().name;
        write_embeddings(
            set,
            &channel_file(cfg, &emb_dir, name),
            cfg.embedding_format,
        )?;
        write_embeddings(
            cohort,
            &channel_file(cfg, &cohort_dir, name),
            cfg.embedding_format,
        )?;
    }
    write_enrollments(&pop.enrollments, &cfg.out.join("enrollments.tsv"))?;
    write_trials(&trials, &cfg.out.join("trials.tsv"))?;
    write_posteriors(&posteriors, &cfg.out.join("posteriors.tsv"))?;
    write_ground_truth(&pop.ground_truth, &cfg.out.join("ground_truth.tsv"))?;
    eprintln!(
        "simulate: {} utterances, {} models, {} trials",
        pop.ground_truth.len(),
        pop.enrollments.len(),
        trials.len()
    );
    Ok(())
}

/// Builds one model embedding per enrollment list and channel.
pub fn enroll(cfg: &Config) -> Result<()> {
    let enrollments = read_enrollments(&cfg.paths.enrollments)?;
    let sets = read_channel_sets(cfg, &cfg.paths.embeddings_dir)?;
    let dir = cfg.out.join("models");
    mkdir(&dir)?;
    for set in &sets {
        let models = enrollments
            .par_iter()
            .map(|e| {
                let utts = e
                    .utterances
                    .iter()
                    .map(|u| {
                        set.get(u).cloned().ok_or_else(|| {
                            Error::Data(format!(
                                "enrollment utterance `{u}` of model `{}` missing from channel {}",
                                e.model_id,
                                set.channel().name
                            ))
                        })
                    })
                    .collect::<tdsv_core::Result<Vec<Embedding>>>()?;
                enroll_aggregate(&e.model_id, &utts)
            })
            .collect::<tdsv_core::Result<Vec<_>>>()?;
        let out = EmbeddingSet::new(set.channel().clone(), models)?;
        write_embeddings(
            &out,
            &channel_file(cfg, &dir, &set.channel().name),
            cfg.embedding_format,
        )?;
    }
    eprintln!(
        "enroll: {} models on {} channels",
        enrollments.len(),
        sets.len()
    );
    Ok(())
}

/// Scores every trial and writes the score table.
pub fn score(cfg: &Config) -> Result<()> {
    let enrollments = read_enrollments(&cfg.paths.enrollments)?;
    let model_sets = read_channel_sets(cfg, &cfg.paths.models_dir)?;
    let tests = read_channel_sets(cfg, &cfg.paths.embeddings_dir)?;
    let cohorts = read_channel_sets(cfg, &cfg.paths.cohort_dir)?;
    let trials = read_trials(&cfg.paths.trials)?;
    let posteriors = read_posteriors(&cfg.paths.posteriors)?;

    let models = enrollments
        .into_iter()
        .map(|e| {
            let embs = model_sets
                .iter()
                .map(|set| {
                    set.get(&e.model_id).cloned().ok_or_else(|| {
                        Error::Data(format!(
                            "model `{}` missing from channel {}",
                            e.model_id,
                            set.channel().name
                        ))
                    })
                })
                .collect::<tdsv_core::Result<Vec<_>>>()?;
            Ok(SpeakerModel {
                model_id: e.model_id,
                phrase: e.phrase,
                enrollments: embs,
                source_utterance_ids: e.utterances,
            })
        })
        .collect::<tdsv_core::Result<Vec<_>>>()?;

    let run = score_trials(
        &models,
        &tests,
        &trials,
        &cohorts,
        &posteriors,
        &cfg.scoring,
    )?;
    mkdir(&cfg.out)?;
    write_scores(
        &ScoreFile {
            channels: run.channels,
            records: run.records,
        },
        &cfg.out.join("scores.tsv"),
    )?;
    eprintln!(
        "score: {} trials; cohort statistics computed {}, floored {}",
        trials.len(),
        run.stats_computed,
        run.stats_floored
    );
    Ok(())
}

/// Writes `report.txt` and one DET table per evaluable subset.
pub fn eval(cfg: &Config) -> Result<()> {
    let scores = read_scores(&cfg.paths.scores)?;
    let trials = read_trials(&cfg.paths.trials)?;
    let report = subset_eval(&scores.records, &trials, &cfg.subsets, &cfg.dcf)?;
    let det_dir = cfg.out.join("det");
    mkdir(&det_dir)?;
    write_text(&cfg.out.join("report.txt"), &report_text(&report, &cfg.dcf))?;
    for (name, sub) in &report.subset_reports {
        if let Some(sub) = sub {
            write_text(&det_dir.join(format!("{name}.csv")), &det_csv(&sub.det))?;
        }
    }
    eprintln!(
        "eval: overall eer {:.6}, min_dcf {:.6}",
        report.eer, report.min_dcf
    );
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)
        .map_err(|e| CliError::Core(Error::Data(format!("cannot write {}: {e}", path.display()))))
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str, stage: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CliError::Usage(format!("{stage} needs --{}", key.replace('_', "-"))))
}

/// Applies one augmentation to a WAV file.
pub fn augment(cfg: &Config) -> Result<()> {
    let a = &cfg.augment;
    let input = dsp::read_wav(required(&a.input, "input", "augment")?)?;
    let output = required(&a.output, "output", "augment")?;
    let seed = stage_seed(cfg.seed, "augment");
    let result: Waveform = match a.kind {
        AugmentKind::Noise => {
            let noise = dsp::read_wav(required(&a.noise, "noise", "augment=noise")?)?;
            let snr = match a.snr_db {
                Some(s) => s,
                None => {
                    let (lo, hi) = a.params.snr_db;
                    ChaCha8Rng::seed_from_u64(seed).random_range(lo..=hi)
                }
            };
            let mix = dsp::add_noise_detailed(&input, &noise, snr)?;
            eprintln!(
                "augment: snr {snr:.3} dB, noise gain {:.6}, rescale {:.6}",
                mix.gain, mix.scale
            );
            mix.output
        }
        AugmentKind::Reverb => dsp::reverb(
            &input,
            &dsp::read_wav(required(&a.rir, "rir", "augment=reverb")?)?,
        )?,
        AugmentKind::FreqDrop => dsp::freq_drop(&input, &a.params, seed)?,
        AugmentKind::TimeDrop => dsp::time_drop(&input, &a.params, seed)?,
    };
    dsp::write_wav(&result, output)?;
    Ok(())
}

/// Trims leading and trailing silence from a WAV file.
pub fn vad(cfg: &Config) -> Result<()> {
    let input = dsp::read_wav(required(&cfg.augment.input, "input", "vad")?)?;
    let output = required(&cfg.augment.output, "output", "vad")?;
    let span = dsp::vad_span(&input, &cfg.vad)?;
    eprintln!(
        "vad: kept samples {}..{} of {}",
        span.start,
        span.end,
        input.len()
    );
    dsp::write_wav(&dsp::vad_trim(&input, &cfg.vad)?, output)?;
    Ok(())
}

/// simulate, enroll, score and eval in sequence.
pub fn pipeline(cfg: &Config) -> Result<()> {
    simulate(cfg)?;
    enroll(cfg)?;
    score(cfg)?;
    eval(cfg)
}
