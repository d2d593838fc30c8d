//! Tab-separated tables: trials, scores, phrase posteriors, enrollment lists
//! and simulator ground truth. Unknown or extra columns are errors.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::format::{data_lines, fmt6, parse_f64, read_text, write_bytes};
use super::{valid_id, PhraseId, ScoreRecord, Trial, N_PHRASES};
use crate::error::{Error, Result};

const ABSENT: &str = "-";

fn columns<'a>(path: &Path, line: usize, content: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let cols: Vec<&str> = content.split('\t').collect();
    if cols.len() != n {
        return Err(Error::parse(
            path,
            line,
            format!("expected {n} columns, found {}", cols.len()),
        ));
    }
    Ok(cols)
}

fn id_col<'a>(path: &Path, line: usize, tok: &'a str, what: &str) -> Result<&'a str> {
    if !valid_id(tok) || tok == ABSENT {
        return Err(Error::parse(path, line, format!("invalid {what} `{tok}`")));
    }
    Ok(tok)
}

fn optional<T>(path: &Path, line: usize, tok: &str) -> Result<Option<T>>
where
    T: std::str::FromStr<Err = String>,
{
    if tok == ABSENT {
        Ok(None)
    } else {
        tok.parse()
            .map(Some)
            .map_err(|e| Error::parse(path, line, e))
    }
}

fn phrase_col(path: &Path, line: usize, tok: &str) -> Result<PhraseId> {
    tok.parse::<u8>()
        .ok()
        .and_then(|id| PhraseId::new(id).ok())
        .ok_or_else(|| Error::parse(path, line, format!("invalid phrase id `{tok}`")))
}

// ---------------------------------------------------------------------------
// Trials

pub fn read_trials(path: &Path) -> Result<Vec<Trial>> {
    let text = read_text(path)?;
    let mut trials = Vec::new();
    for (line, content) in data_lines(&text) {
        let c = columns(path, line, content, 5)?;
        trials.push(Trial {
            model_id: id_col(path, line, c[0], "model id")?.to_string(),
            test_utterance_id: id_col(path, line, c[1], "test utterance id")?.to_string(),
            label: optional(path, line, c[2])?,
            gender: optional(path, line, c[3])?,
            language: optional(path, line, c[4])?,
        });
    }
    Ok(trials)
}

pub fn write_trials(trials: &[Trial], path: &Path) -> Result<()> {
    let mut out = String::new();
    for t in trials {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            t.model_id,
            t.test_utterance_id,
            t.label.map_or(ABSENT, |l| l.as_str()),
            t.gender.map_or(ABSENT, |g| g.as_str()),
            t.language.map_or(ABSENT, |l| l.as_str()),
        );
    }
    write_bytes(path, out.as_bytes())
}

// ---------------------------------------------------------------------------
// Scores

/// A score table together with the channel names heading its per-channel
/// column groups.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreFile {
    pub channels: Vec<String>,
    pub records: Vec<ScoreRecord>,
}

const SCORE_HEADER: &str = "#model_id\ttest_utterance_id";

pub fn write_scores(file: &ScoreFile, path: &Path) -> Result<()> {
    let n = file.channels.len();
    let mut out = String::from(SCORE_HEADER);
    for stage in ["raw", "norm", "cal"] {
        for ch in &file.channels {
            let _ = write!(out, "\t{stage}:{ch}");
        }
    }
    out.push_str("\tfused\tphrase\tfinal\n");
    for r in &file.records {
        if r.raw.len() != n || r.normalized.len() != n || r.calibrated.len() != n {
            return Err(Error::Contract(format!(
                "score record {}/{} does not have {n} channels",
                r.model_id, r.test_utterance_id
            )));
        }
        out.push_str(&r.model_id);
        out.push('\t');
        out.push_str(&r.test_utterance_id);
        for v in r.raw.iter().chain(&r.normalized).chain(&r.calibrated) {
            out.push('\t');
            out.push_str(&fmt6(*v));
        }
        for v in [r.fused, r.phrase_posterior, r.final_score] {
            out.push('\t');
            out.push_str(&fmt6(v));
        }
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_scores(path: &Path) -> Result<ScoreFile> {
    let text = read_text(path)?;
    let mut channels: Option<Vec<String>> = text
        .lines()
        .next()
        .filter(|l| l.starts_with(SCORE_HEADER))
        .map(|l| {
            l.split('\t')
                .skip(2)
                .filter_map(|c| c.strip_prefix("raw:"))
                .map(str::to_string)
                .collect()
        });

    let mut records = Vec::new();
    for (line, content) in data_lines(&text) {
        let cols: Vec<&str> = content.split('\t').collect();
        let n = match &channels {
            Some(ch) => ch.len(),
            None => {
                if cols.len() < 8 || (cols.len() - 5) % 3 != 0 {
                    return Err(Error::parse(
                        path,
                        line,
                        format!("{} columns is not 5 + 3N", cols.len()),
                    ));
                }
                let n = (cols.len() - 5) / 3;
                channels = Some((1..=n).map(|i| format!("ch{i}")).collect());
                n
            }
        };
        let c = columns(path, line, content, 5 + 3 * n)?;
        let nums = c[2..]
            .iter()
            .map(|t| parse_f64(path, line, t, "score"))
            .collect::<Result<Vec<_>>>()?;
        records.push(ScoreRecord {
            model_id: id_col(path, line, c[0], "model id")?.to_string(),
            test_utterance_id: id_col(path, line, c[1], "test utterance id")?.to_string(),
            raw: nums[..n].to_vec(),
            normalized: nums[n..2 * n].to_vec(),
            calibrated: nums[2 * n..3 * n].to_vec(),
            fused: nums[3 * n],
            phrase_posterior: nums[3 * n + 1],
            final_score: nums[3 * n + 2],
        });
    }
    Ok(ScoreFile {
        channels: channels.unwrap_or_default(),
        records,
    })
}

// ---------------------------------------------------------------------------
// Phrase posteriors

/// Posterior over the ten phrases for each test utterance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PosteriorTable {
    rows: Vec<(String, [f64; N_PHRASES])>,
    index: HashMap<String, usize>,
}

impl PosteriorTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a row; probabilities must lie in [0,1] and sum to 1 within 1e-6.
    pub fn insert(&mut self, utterance_id: impl Into<String>, row: [f64; N_PHRASES]) -> Result<()> {
        let id = utterance_id.into();
        if !valid_id(&id) {
            return Err(Error::Data(format!("invalid utterance id `{id}`")));
        }
        if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Data(format!(
                "posterior for `{id}` has a value outside [0,1]"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Data(format!("posterior for `{id}` sums to {sum}")));
        }
        if self.index.contains_key(&id) {
            return Err(Error::Data(format!("duplicate posterior row for `{id}`")));
        }
        self.index.insert(id.clone(), self.rows.len());
        self.rows.push((id, row));
        Ok(())
    }

    pub fn get(&self, utterance_id: &str) -> Option<&[f64; N_PHRASES]> {
        self.index.get(utterance_id).map(|&i| &self.rows[i].1)
    }

    /// Posterior of `phrase` for `utterance_id`.
    pub fn prob(&self, utterance_id: &str, phrase: PhraseId) -> Option<f64> {
        self.get(utterance_id).map(|row| row[phrase.index()])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64; N_PHRASES])> {
        self.rows.iter().map(|(id, r)| (id.as_str(), r))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Rounds a probability row to integer micro-units whose total is exactly
/// one million, using largest-remainder apportionment.
fn micro_units(row: &[f64; N_PHRASES]) -> [u64; N_PHRASES] {
    let scaled: Vec<f64> = row.iter().map(|p| p * 1e6).collect();
    let mut units = [0u64; N_PHRASES];
    for (u, s) in units.iter_mut().zip(&scaled) {
        *u = s.floor() as u64;
    }
    let total: u64 = units.iter().sum();
    let target = (row.iter().sum::<f64>() * 1e6).round() as u64;
    let mut order: Vec<usize> = (0..N_PHRASES).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(target.saturating_sub(total) as usize) {
        units[i] += 1;
    }
    units
}

pub fn write_posteriors(table: &PosteriorTable, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (id, row) in table.rows() {
        out.push_str(id);
        for u in micro_units(row) {
            let _ = write!(out, "\t{}.{:06}", u / 1_000_000, u % 1_000_000);
        }
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_posteriors(path: &Path) -> Result<PosteriorTable> {
    let text = read_text(path)?;
    let mut table = PosteriorTable::new();
    for (line, content) in data_lines(&text) {
        let c = columns(path, line, content, 1 + N_PHRASES)?;
        let id = id_col(path, line, c[0], "utterance id")?;
        let mut row = [0.0; N_PHRASES];
        for (r, tok) in row.iter_mut().zip(&c[1..]) {
            *r = parse_f64(path, line, tok, "posterior")?;
        }
        table
            .insert(id, row)
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// Enrollment lists and ground truth

/// Which three utterances enroll a model, and its passphrase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enrollment {
    pub model_id: String,
    pub phrase: PhraseId,
    pub utterances: [String; 3],
}

pub fn write_enrollments(list: &[Enrollment], path: &Path) -> Result<()> {
    let mut out = String::new();
    for e in list {
        let [a, b, c] = &e.utterances;
        let _ = writeln!(out, "{}\t{}\t{a}\t{b}\t{c}", e.model_id, e.phrase);
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_enrollments(path: &Path) -> Result<Vec<Enrollment>> {
    let text = read_text(path)?;
    let mut list = Vec::new();
    let mut seen = HashMap::new();
    for (line, content) in data_lines(&text) {
        let c = columns(path, line, content, 5)?;
        let model_id = id_col(path, line, c[0], "model id")?.to_string();
        if seen.insert(model_id.clone(), line).is_some() {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate model `{model_id}`"),
            ));
        }
        list.push(Enrollment {
            model_id,
            phrase: phrase_col(path, line, c[1])?,
            utterances: [
                id_col(path, line, c[2], "utterance id")?.to_string(),
                id_col(path, line, c[3], "utterance id")?.to_string(),
                id_col(path, line, c[4], "utterance id")?.to_string(),
            ],
        });
    }
    Ok(list)
}

/// Simulator ground truth for one utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub utterance_id: String,
    pub speaker_id: String,
    pub phrase: PhraseId,
}

pub fn write_ground_truth(rows: &[GroundTruth], path: &Path) -> Result<()> {
    let mut out = String::new();
    for g in rows {
        let _ = writeln!(out, "{}\t{}\t{}", g.utterance_id, g.speaker_id, g.phrase);
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruth>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (line, content) in data_lines(&text) {
        let c = columns(path, line, content, 3)?;
        rows.push(GroundTruth {
            utterance_id: id_col(path, line, c[0], "utterance id")?.to_string(),
            speaker_id: id_col(path, line, c[1], "speaker id")?.to_string(),
            phrase: phrase_col(path, line, c[2])?,
        });
    }
    Ok(rows)
}
