use rayon::prelude::*;

use super::{NormStats, ScoringOptions};
use crate::error::{Error, Result};
use crate::model::{Embedding, EmbeddingSet};

/// Probes scored together so each cohort row is loaded once per block.
const PROBE_BLOCK: usize = 32;
const COHORT_CHUNK: usize = 128;

/// A cohort prepared for repeated scoring: the first `cohort_limit`
/// embeddings of a channel, L2-normalized and stored row-major in f64.
#[derive(Debug, Clone)]
pub struct Cohort {
    channel: String,
    dim: usize,
    rows: Vec<f64>,
}

impl Cohort {
    pub fn new(set: &EmbeddingSet, cohort_limit: usize) -> Result<Self> {
        Self::from_embeddings(
            set.channel().name.clone(),
            set.channel().dim,
            set.embeddings(),
            cohort_limit,
        )
    }

    pub fn from_embeddings(
        channel: String,
        dim: usize,
        embeddings: &[Embedding],
        cohort_limit: usize,
    ) -> Result<Self> {
        let used = &embeddings[..embeddings.len().min(cohort_limit)];
        if used.len() < 2 {
            return Err(Error::Data(format!(
                "cohort for channel `{channel}` has {} embeddings, need at least 2",
                used.len()
            )));
        }
        let mut rows = Vec::with_capacity(used.len() * dim);
        for e in used {
            if e.channel != channel || e.dim() != dim {
                return Err(Error::Contract(format!(
                    "cohort embedding `{}` is not a `{channel}` vector of dim {dim}",
                    e.utterance_id
                )));
            }
            rows.extend(unit_vector(e)?);
        }
        Ok(Cohort { channel, dim, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn channel(&self) -> &str {
        &self.channel
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    fn check_probe(&self, probe: &Embedding) -> Result<()> {
        if probe.channel != self.channel || probe.dim() != self.dim {
            return Err(Error::Contract(format!(
                "probe `{}` ({}, dim {}) does not match cohort channel `{}` (dim {})",
                probe.utterance_id,
                probe.channel,
                probe.dim(),
                self.channel,
                self.dim
            )));
        }
        Ok(())
    }

    /// Cohort statistics for one probe.
    pub fn stats(&self, probe: &Embedding, opts: &ScoringOptions) -> Result<NormStats> {
        self.check_probe(probe)?;
        let unit = unit_vector(probe)?;
        let scores: Vec<f64> = (0..self.len())
            .map(|i| clamped_dot(&unit, self.row(i)))
            .collect();
        Ok(summarize(scores, opts))
    }

    /// Cohort statistics for many probes, computed in parallel blocks. Each
    /// entry equals what [`Cohort::stats`] returns for that probe.
    pub fn stats_batch(
        &self,
        probes: &[&Embedding],
        opts: &ScoringOptions,
    ) -> Result<Vec<NormStats>> {
        let units = probes
            .iter()
            .map(|p| {
                self.check_probe(p)?;
                unit_vector(p)
            })
            .collect::<Result<Vec<_>>>()?;
        let n = self.len();
        let per_block: Vec<Vec<NormStats>> = units
            .par_chunks(PROBE_BLOCK)
            .map(|block| {
                let mut scores = vec![vec![0.0; n]; block.len()];
                for start in (0..n).step_by(COHORT_CHUNK) {
                    let end = (start + COHORT_CHUNK).min(n);
                    for (probe, out) in block.iter().zip(scores.iter_mut()) {
                        for (i, s) in out[start..end].iter_mut().enumerate() {
                            *s = clamped_dot(probe, self.row(start + i));
                        }
                    }
                }
                scores.into_iter().map(|s| summarize(s, opts)).collect()
            })
            .collect();
        Ok(per_block.into_iter().flatten().collect())
    }
}

/// Statistics of `cosine(probe, c)` over the first `cohort_limit` cohort
/// embeddings.
pub fn cohort_stats(
    probe: &Embedding,
    cohort: &[Embedding],
    opts: &ScoringOptions,
) -> Result<NormStats> {
    opts.validate()?;
    let prepared = Cohort::from_embeddings(
        probe.channel.clone(),
        probe.dim(),
        cohort,
        opts.cohort_limit,
    )?;
    prepared.stats(probe, opts)
}

fn unit_vector(e: &Embedding) -> Result<Vec<f64>> {
    let norm = e.norm();
    if norm == 0.0 {
        return Err(Error::Degenerate(format!(
            "`{}` has zero norm",
            e.utterance_id
        )));
    }
    Ok(e.vector.iter().map(|&v| f64::from(v) / norm).collect())
}

fn clamped_dot(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0)
}

/// Dot product with eight independent accumulators so the compiler can
/// vectorize it. The summation order is fixed, so results do not depend on
/// how callers block or schedule the work.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

fn summarize(mut scores: Vec<f64>, opts: &ScoringOptions) -> NormStats {
    if let Some(k) = opts.adaptive_top_k {
        // With k covering the whole cohort the full-cohort path is taken
        // unchanged, so the two agree bit for bit.
        if k < scores.len() {
            scores.sort_unstable_by(|a, b| b.total_cmp(a));
            scores.truncate(k);
        }
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let floored = !(std >= opts.std_floor);
    NormStats {
        mean,
        std: if floored { opts.std_floor } else { std },
        cohort_size: scores.len(),
        floored,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn emb(id: &str, v: &[f32]) -> Embedding {
        Embedding::new(id, "c", v.to_vec()).unwrap()
    }

    #[test]
    fn hand_computed_stats() {
        let cohort = [
            emb("a", &[1.0, 0.0]),
            emb("b", &[0.0, 1.0]),
            emb("c", &[-1.0, 0.0]),
        ];
        let s = cohort_stats(&emb("p", &[1.0, 0.0]), &cohort, &ScoringOptions::default()).unwrap();
        assert!(s.mean.abs() < 1e-15);
        assert!((s.std - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(s.cohort_size, 3);
        assert!(!s.floored);
    }

    #[test]
    fn identical_cohort_hits_floor() {
        let p = emb("p", &[0.3, 0.4]);
        let cohort: Vec<_> = (0..5).map(|i| emb(&format!("c{i}"), &[0.3, 0.4])).collect();
        let s = cohort_stats(&p, &cohort, &ScoringOptions::default()).unwrap();
        assert!((s.mean - 1.0).abs() < 1e-12);
        assert_eq!(s.std, 1e-12);
        assert!(s.floored);
    }

    #[test]
    fn cohort_errors() {
        let p = emb("p", &[1.0, 0.0]);
        let opts = ScoringOptions::default();
        assert!(cohort_stats(&p, &[emb("a", &[1.0, 0.0])], &opts).is_err());
        let limited = ScoringOptions {
            cohort_limit: 2,
            ..Default::default()
        };
        let cohort = [
            emb("a", &[1.0, 0.0]),
            emb("b", &[0.0, 1.0]),
            emb("c", &[-1.0, 0.0]),
        ];
        // Truncation keeps the first two in file order.
        let s = cohort_stats(&p, &cohort, &limited).unwrap();
        assert!((s.mean - 0.5).abs() < 1e-15);
        let wrong = Embedding::new("q", "other", vec![1.0, 0.0]).unwrap();
        assert!(cohort_stats(&wrong, &cohort, &opts).is_err());
    }

    #[test]
    fn top_k_selects_highest() {
        let cohort = [
            emb("a", &[1.0, 0.0]),
            emb("b", &[0.0, 1.0]),
            emb("c", &[-1.0, 0.0]),
        ];
        let opts = ScoringOptions {
            adaptive_top_k: Some(2),
            ..Default::default()
        };
        let s = cohort_stats(&emb("p", &[1.0, 0.0]), &cohort, &opts).unwrap();
        assert!((s.mean - 0.5).abs() < 1e-15);
        assert!((s.std - 0.5).abs() < 1e-15);
        assert_eq!(s.cohort_size, 2);
    }

    #[test]
    fn batch_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut v = |n: usize| -> Vec<Embedding> {
            (0..n)
                .map(|i| {
                    Embedding::new(
                        format!("e{i}"),
                        "c",
                        (0..19).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    )
                    .unwrap()
                })
                .collect()
        };
        let cohort_embs = v(301);
        let probes = v(70);
        let cohort = Cohort::from_embeddings("c".into(), 19, &cohort_embs, 10_000).unwrap();
        let opts = ScoringOptions::default();
        let refs: Vec<&Embedding> = probes.iter().collect();
        let batch = cohort.stats_batch(&refs, &opts).unwrap();
        for (p, b) in probes.iter().zip(&batch) {
            assert_eq!(cohort.stats(p, &opts).unwrap(), *b);
        }
    }

    #[test]
    fn dot_handles_remainders() {
        let a: Vec<f64> = (0..13).map(f64::from).collect();
        let b: Vec<f64> = (0..13).map(|i| f64::from(i) * 0.5).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert_eq!(dot(&a, &b), naive);
    }
}
