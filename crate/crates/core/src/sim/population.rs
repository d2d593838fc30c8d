use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{substream, SimConfig, N_ENROLL};
use crate::error::Result;
use crate::model::{ChannelSpec, Embedding, EmbeddingSet, Enrollment, GroundTruth, PhraseId};

/// Everything `gen_population` produces. Embedding sets and cohorts are
/// ordered like `config.channels`.
#[derive(Debug, Clone)]
pub struct Population {
    pub embeddings: Vec<EmbeddingSet>,
    pub cohorts: Vec<EmbeddingSet>,
    pub ground_truth: Vec<GroundTruth>,
    pub enrollments: Vec<Enrollment>,
}

pub fn speaker_id(s: usize) -> String {
    format!("spk{s:03}")
}

pub fn model_id(s: usize, phrase: PhraseId) -> String {
    format!("spk{s:03}-ph{:02}", phrase.id())
}

pub fn utterance_id(s: usize, phrase: PhraseId, u: usize) -> String {
    format!("spk{s:03}-ph{:02}-u{u:02}", phrase.id())
}

fn cohort_id(i: usize) -> String {
    format!("coh{i:05}")
}

fn normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Row-major `dim x latent_dim` projection for one channel.
fn projection(seed: u64, ch: &ChannelSpec, latent_dim: usize) -> Vec<f64> {
    normals(
        &mut substream(seed, &format!("projection/{}", ch.name)),
        ch.dim * latent_dim,
    )
}

fn project(r: &[f64], x: &[f64]) -> Vec<f32> {
    let out: Vec<f64> = r
        .chunks_exact(x.len())
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect();
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    out.iter().map(|v| (v / norm) as f32).collect()
}

/// Clean latent (speaker plus phrase) of one utterance; channel noise is
/// added per channel.
struct Source {
    id: String,
    latent: Vec<f64>,
}

fn speaker_latent(config: &SimConfig, key: &str) -> Vec<f64> {
    let key = if config.speaker_factor {
        key
    } else {
        "speaker/shared"
    };
    normals(&mut substream(config.seed, key), config.latent_dim)
}

fn mix(z: &[f64], q: &[f64], sigma: f64) -> Vec<f64> {
    z.iter().zip(q).map(|(a, b)| a + sigma * b).collect()
}

fn embed(
    config: &SimConfig,
    sources: &[Source],
    ch: &ChannelSpec,
    noise_prefix: &str,
) -> Result<EmbeddingSet> {
    let r = projection(config.seed, ch, config.latent_dim);
    let embs = sources
        .par_iter()
        .map(|src| {
            let mut rng = substream(
                config.seed,
                &format!("{noise_prefix}/{}/{}", src.id, ch.name),
            );
            let eps = normals(&mut rng, config.latent_dim);
            let x = mix(&src.latent, &eps, config.sigma_channel);
            Embedding::new(src.id.clone(), ch.name.clone(), project(&r, &x))
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingSet::new(ch.clone(), embs)
}

/// Generates the evaluation population, its enrollment lists and one
/// background cohort per channel.
pub fn gen_population(config: &SimConfig) -> Result<Population> {
    config.validate()?;
    let phrase_latents: Vec<(PhraseId, Vec<f64>)> = config
        .phrases
        .iter()
        .map(|&p| {
            (
                p,
                normals(
                    &mut substream(config.seed, &format!("phrase/{}", p.id())),
                    config.latent_dim,
                ),
            )
        })
        .collect();

    let mut sources = Vec::new();
    let mut ground_truth = Vec::new();
    let mut enrollments = Vec::new();
    for s in 0..config.n_speakers {
        let z = speaker_latent(config, &format!("speaker/{s}"));
        for (phrase, q) in &phrase_latents {
            let clean = mix(&z, q, config.sigma_phrase);
            let ids: Vec<String> = (0..config.utterances_per_speaker_phrase)
                .map(|u| utterance_id(s, *phrase, u))
                .collect();
            enrollments.push(Enrollment {
                model_id: model_id(s, *phrase),
                phrase: *phrase,
                utterances: std::array::from_fn(|i| ids[i].clone()),
            });
            for id in ids {
                ground_truth.push(GroundTruth {
                    utterance_id: id.clone(),
                    speaker_id: speaker_id(s),
                    phrase: *phrase,
                });
                sources.push(Source {
                    id,
                    latent: clean.clone(),
                });
            }
        }
    }
    debug_assert!(enrollments.iter().all(|e| e.utterances.len() == N_ENROLL));

    let cohort_sources: Vec<Source> = (0..config.cohort_size)
        .map(|i| {
            let id = cohort_id(i);
            let z = speaker_latent(config, &format!("cohort/{i}"));
            let k = substream(config.seed, &format!("cohort-phrase/{i}"))
                .random_range(0..phrase_latents.len());
            Source {
                latent: mix(&z, &phrase_latents[k].1, config.sigma_phrase),
                id,
            }
        })
        .collect();

    let mut embeddings = Vec::new();
    let mut cohorts = Vec::new();
    for ch in &config.channels {
        embeddings.push(embed(config, &sources, ch, "noise")?);
        cohorts.push(embed(config, &cohort_sources, ch, "cohort-noise")?);
    }
    Ok(Population {
        embeddings,
        cohorts,
        ground_truth,
        enrollments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        SimConfig {
            n_speakers: 3,
            utterances_per_speaker_phrase: 5,
            latent_dim: 8,
            cohort_size: 20,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn shapes_and_ids() {
        let c = small();
        let p = gen_population(&c).unwrap();
        assert_eq!(p.ground_truth.len(), 3 * 10 * 5);
        assert_eq!(p.enrollments.len(), 30);
        assert_eq!(p.embeddings.len(), 3);
        for (set, ch) in p.embeddings.iter().zip(&c.channels) {
            assert_eq!(set.len(), 150);
            assert_eq!(set.channel().dim, ch.dim);
        }
        assert_eq!(p.cohorts[0].len(), 20);
        assert_eq!(p.enrollments[0].model_id, "spk000-ph01");
        assert_eq!(p.enrollments[0].utterances[2], "spk000-ph01-u02");
        assert_eq!(p.ground_truth[149].utterance_id, "spk002-ph10-u04");
    }

    #[test]
    fn unit_norm() {
        let p = gen_population(&small()).unwrap();
        for set in p.embeddings.iter().chain(&p.cohorts) {
            for e in set.embeddings() {
                assert!((e.norm() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn no_channel_noise_repeats_vectors() {
        let c = SimConfig {
            sigma_channel: 0.0,
            ..small()
        };
        let p = gen_population(&c).unwrap();
        let set = &p.embeddings[1];
        let a = set.get("spk001-ph04-u00").unwrap();
        for u in 1..5 {
            assert_eq!(
                set.get(&format!("spk001-ph04-u{u:02}")).unwrap().vector,
                a.vector
            );
        }
        assert_ne!(set.get("spk001-ph05-u00").unwrap().vector, a.vector);
    }

    #[test]
    fn deterministic_and_independent_of_population_size() {
        let a = gen_population(&small()).unwrap();
        let b = gen_population(&small()).unwrap();
        assert_eq!(a.embeddings[0].embeddings(), b.embeddings[0].embeddings());
        // Per-entity substreams: adding speakers leaves existing ones untouched.
        let bigger = gen_population(&SimConfig {
            n_speakers: 5,
            ..small()
        })
        .unwrap();
        let id = "spk002-ph07-u03";
        assert_eq!(a.embeddings[2].get(id), bigger.embeddings[2].get(id));
    }

    #[test]
    fn thread_count_does_not_matter() {
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| gen_population(&small()).unwrap())
        };
        let (a, b) = (run(1), run(4));
        for (x, y) in a.embeddings.iter().zip(&b.embeddings) {
            assert_eq!(x.embeddings(), y.embeddings());
        }
    }

    #[test]
    fn disabled_speaker_factor_shares_latent() {
        let c = SimConfig {
            speaker_factor: false,
            sigma_channel: 0.0,
            ..small()
        };
        let p = gen_population(&c).unwrap();
        let set = &p.embeddings[0];
        assert_eq!(
            set.get("spk000-ph03-u00").unwrap().vector,
            set.get("spk002-ph03-u01").unwrap().vector
        );
    }
}
