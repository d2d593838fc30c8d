//! Flat `key=value` configuration. Every key has a `--kebab-case` flag twin;
//! flags override the file, and the file overrides the defaults below.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use tdsv_core::dsp::{AugmentParams, StftParams, TimeDropMode, TimeUnit, VadParams};
use tdsv_core::metrics::{DcfParams, SubsetSpec};
use tdsv_core::model::{validate_channels, ChannelSpec, EmbeddingFormat, PhraseId};
use tdsv_core::scorer::{Calibration, ScoringOptions};
use tdsv_core::sim::{SimConfig, TrialBalance};

use crate::CliError;

macro_rules! config_keys {
    ($( $(#[doc = $doc:literal])* $key:ident = $default:literal; )*) => {
        /// One optional flag per config key.
        #[derive(clap::Args, Debug, Clone, Default)]
        pub struct KeyFlags {
            $(
                $(#[doc = $doc])*
                #[arg(long, value_name = "VALUE")]
                pub $key: Option<String>,
            )*
        }

        impl KeyFlags {
            pub fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = self.$key.as_deref() {
                        out.push((stringify!($key), v));
                    }
                )*
                out
            }
        }

        /// Every key with its default value.
        pub const DEFAULTS: &[(&str, &str)] = &[$((stringify!($key), $default),)*];
    };
}

config_keys! {
    /// Master seed; every stage derives its own seed from it.
    seed = "0";
    /// Output directory.
    out = "out";
    /// Worker threads: a positive integer or `auto`.
    threads = "auto";
    /// Embedding file format: `bin` or `tsv`.
    embedding_format = "bin";
    /// Comma-separated `name:dim` channel list.
    channels = "next_tdnn:192,resnet_tdnn:256,efficientnet_a0:256";

    /// Simulated speakers.
    n_speakers = "50";
    /// Utterances per (speaker, phrase); the first 3 enroll.
    utterances_per_speaker_phrase = "6";
    latent_dim = "64";
    sigma_phrase = "0.5";
    sigma_channel = "0.3";
    classifier_accuracy = "0.95";
    confidence_min = "0.7";
    confidence_max = "0.99";
    /// Phrase ids in play: `all` or a comma list such as `1,2,7`.
    phrases = "all";
    /// `false` gives every speaker the same latent (chance-level data).
    speaker_factor = "true";
    cohort_size = "1000";
    /// Trials per model and class; `auto` uses every test utterance of one
    /// (speaker, phrase).
    trials_tc = "auto";
    trials_tw = "auto";
    trials_ic = "auto";
    trials_iw = "auto";

    /// Input overrides; empty means the matching path under `out`.
    embeddings_dir = "";
    cohort_dir = "";
    models_dir = "";
    enrollments = "";
    trials = "";
    posteriors = "";
    scores = "";

    cohort_limit = "10000";
    /// Top-k cohort selection: `none` or an integer of at least 2.
    adaptive_top_k = "none";
    std_floor = "1e-12";
    /// `minmax` or `logistic`.
    calibration = "minmax";
    logistic_scale = "1";
    /// `uniform` or one comma-separated weight per channel.
    fusion_weights = "uniform";

    c_miss = "10";
    c_fa = "1";
    p_target = "0.01";
    /// `default` or a comma list of subset names.
    subsets = "default";

    /// Input WAV for `augment` and `vad`.
    input = "";
    /// Output WAV for `augment` and `vad`.
    output = "";
    /// Augmentation kind: `noise`, `reverb`, `freq_drop` or `time_drop`.
    augment = "noise";
    /// Noise WAV for `augment=noise`.
    noise = "";
    /// Impulse-response WAV for `augment=reverb`.
    rir = "";
    /// Fixed SNR in dB, or `random` to draw from [snr_min, snr_max].
    snr_db = "random";
    snr_min = "0";
    snr_max = "15";
    freq_bands_min = "1";
    freq_bands_max = "3";
    freq_band_width_min = "2";
    freq_band_width_max = "16";
    time_drops_min = "1";
    time_drops_max = "5";
    time_drop_len_min = "1000";
    time_drop_len_max = "2000";
    /// `ms` or `samples`.
    time_drop_unit = "ms";
    /// `zero` or `excise`.
    time_drop_mode = "zero";
    vad_frame_ms = "25";
    vad_hop_ms = "10";
    vad_threshold_db = "-30";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentKind {
    Noise,
    Reverb,
    FreqDrop,
    TimeDrop,
}

impl FromStr for AugmentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "noise" => Ok(AugmentKind::Noise),
            "reverb" => Ok(AugmentKind::Reverb),
            "freq_drop" => Ok(AugmentKind::FreqDrop),
            "time_drop" => Ok(AugmentKind::TimeDrop),
            _ => Err(format!("unknown augmentation `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentSettings {
    pub kind: AugmentKind,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub noise: Option<PathBuf>,
    pub rir: Option<PathBuf>,
    pub snr_db: Option<f64>,
    pub params: AugmentParams,
}

/// Resolved file locations. Inputs default to the layout a previous stage
/// writes under `out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    pub embeddings_dir: PathBuf,
    pub cohort_dir: PathBuf,
    pub models_dir: PathBuf,
    pub enrollments: PathBuf,
    pub trials: PathBuf,
    pub posteriors: PathBuf,
    pub scores: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub out: PathBuf,
    /// `None` means one thread per core.
    pub threads: Option<usize>,
    pub embedding_format: EmbeddingFormat,
    pub channels: Vec<ChannelSpec>,
    pub sim: SimConfig,
    pub paths: Paths,
    pub scoring: ScoringOptions,
    pub dcf: DcfParams,
    pub subsets: Vec<SubsetSpec>,
    pub augment: AugmentSettings,
    pub vad: VadParams,
}

/// Stable per-stage seed: the first 8 bytes of SHA-256(seed, stage name).
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(stage.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

/// Parses a config file body into raw pairs, rejecting unknown and
/// repeated keys.
pub fn parse_file_text(text: &str, origin: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = || format!("{origin}:{}", i + 1);
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}: expected key=value", at())))?;
        let k = k.trim();
        if !DEFAULTS.iter().any(|(d, _)| *d == k) {
            return Err(CliError::Usage(format!("{}: unknown key `{k}`", at())));
        }
        if map.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("{}: duplicate key `{k}`", at())));
        }
    }
    Ok(map)
}

/// Merges defaults, the optional file and flag overrides, then types and
/// validates the result.
pub fn parse_config(file: Option<&Path>, flags: &KeyFlags) -> Result<Config, CliError> {
    let mut raw: BTreeMap<String, String> = DEFAULTS
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        raw.extend(parse_file_text(&text, &path.display().to_string())?);
    }
    for (k, v) in flags.pairs() {
        raw.insert(k.to_string(), v.to_string());
    }
    resolve(&Values(raw))
}

struct Values(BTreeMap<String, String>);

fn usage(msg: impl Display) -> CliError {
    CliError::Usage(msg.to_string())
}

impl Values {
    fn str(&self, key: &str) -> &str {
        self.0
            .get(key)
            .map(String::as_str)
            .expect("every key has a default")
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = self.str(key);
        v.parse()
            .map_err(|e| usage(format!("{key}: cannot parse `{v}`: {e}")))
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        Some(self.str(key))
            .filter(|s| !s.is_empty())
            .map(PathBuf::from)
    }

    /// `keyword` maps to `None`; anything else must parse.
    fn optional<T: FromStr>(&self, key: &str, keyword: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        if self.str(key) == keyword {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        self.str(key)
            .split(',')
            .map(|item| {
                item.trim()
                    .parse()
                    .map_err(|e| usage(format!("{key}: cannot parse `{item}`: {e}")))
            })
            .collect()
    }
}

fn contract(e: tdsv_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn resolve(v: &Values) -> Result<Config, CliError> {
    let seed: u64 = v.get("seed")?;
    let out = v
        .path("out")
        .ok_or_else(|| usage("out: must not be empty"))?;
    let threads = match v.str("threads") {
        "auto" => None,
        _ => match v.get::<usize>("threads")? {
            0 => return Err(usage("threads: must be positive or `auto`")),
            n => Some(n),
        },
    };
    let channels: Vec<ChannelSpec> = v.list("channels")?;
    validate_channels(&channels).map_err(contract)?;

    let phrases = match v.str("phrases") {
        "all" => PhraseId::all().collect(),
        _ => v
            .list::<u8>("phrases")?
            .into_iter()
            .map(PhraseId::new)
            .collect::<Result<Vec<_>, _>>()
            .map_err(contract)?,
    };
    let utts: usize = v.get("utterances_per_speaker_phrase")?;
    let auto = utts.saturating_sub(3);
    let count =
        |key: &str| -> Result<usize, CliError> { Ok(v.optional(key, "auto")?.unwrap_or(auto)) };
    let balance = TrialBalance {
        tc: count("trials_tc")?,
        tw: count("trials_tw")?,
        ic: count("trials_ic")?,
        iw: count("trials_iw")?,
    };
    let sim = SimConfig {
        n_speakers: v.get("n_speakers")?,
        utterances_per_speaker_phrase: utts,
        latent_dim: v.get("latent_dim")?,
        sigma_phrase: v.get("sigma_phrase")?,
        sigma_channel: v.get("sigma_channel")?,
        classifier_accuracy: v.get("classifier_accuracy")?,
        posterior_confidence_range: (v.get("confidence_min")?, v.get("confidence_max")?),
        seed: stage_seed(seed, "simulate"),
        channels: channels.clone(),
        phrases,
        speaker_factor: v.get("speaker_factor")?,
        cohort_size: v.get("cohort_size")?,
        balance: Some(balance),
    };
    sim.validate().map_err(contract)?;

    let under = |key: &str, rel: &str| v.path(key).unwrap_or_else(|| out.join(rel));
    let paths = Paths {
        embeddings_dir: under("embeddings_dir", "embeddings"),
        cohort_dir: under("cohort_dir", "cohort"),
        models_dir: under("models_dir", "models"),
        enrollments: under("enrollments", "enrollments.tsv"),
        trials: under("trials", "trials.tsv"),
        posteriors: under("posteriors", "posteriors.tsv"),
        scores: under("scores", "scores.tsv"),
    };

    let calibration = match v.str("calibration") {
        "minmax" => Calibration::MinMax,
        "logistic" => Calibration::Logistic {
            scale: v.get("logistic_scale")?,
        },
        other => return Err(usage(format!("calibration: unknown method `{other}`"))),
    };
    let fusion_weights = match v.str("fusion_weights") {
        "uniform" => None,
        _ => {
            let w: Vec<f64> = v.list("fusion_weights")?;
            if w.len() != channels.len() {
                return Err(usage(format!(
                    "fusion_weights: {} weights for {} channels",
                    w.len(),
                    channels.len()
                )));
            }
            Some(w)
        }
    };
    let scoring = ScoringOptions {
        cohort_limit: v.get("cohort_limit")?,
        adaptive_top_k: v.optional("adaptive_top_k", "none")?,
        std_floor: v.get("std_floor")?,
        calibration,
        fusion_weights,
    };
    scoring.validate().map_err(contract)?;

    let dcf = DcfParams {
        c_miss: v.get("c_miss")?,
        c_fa: v.get("c_fa")?,
        p_target: v.get("p_target")?,
    };
    dcf.validate().map_err(contract)?;
    let subsets = match v.str("subsets") {
        "default" => SubsetSpec::builtins(),
        _ => v.list("subsets")?,
    };

    let params = AugmentParams {
        snr_db: (v.get("snr_min")?, v.get("snr_max")?),
        n_freq_bands: (v.get("freq_bands_min")?, v.get("freq_bands_max")?),
        freq_band_width: (v.get("freq_band_width_min")?, v.get("freq_band_width_max")?),
        n_time_drops: (v.get("time_drops_min")?, v.get("time_drops_max")?),
        time_drop_len: (v.get("time_drop_len_min")?, v.get("time_drop_len_max")?),
        time_unit: v.get::<TimeUnit>("time_drop_unit")?,
        time_drop_mode: v.get::<TimeDropMode>("time_drop_mode")?,
        stft: StftParams::default(),
    };
    params.validate().map_err(contract)?;
    let augment = AugmentSettings {
        kind: v.get("augment")?,
        input: v.path("input"),
        output: v.path("output"),
        noise: v.path("noise"),
        rir: v.path("rir"),
        snr_db: v.optional("snr_db", "random")?,
        params,
    };
    let vad = VadParams {
        frame_ms: v.get("vad_frame_ms")?,
        hop_ms: v.get("vad_hop_ms")?,
        threshold_db: v.get("vad_threshold_db")?,
    };
    if !(vad.frame_ms > 0.0 && vad.hop_ms > 0.0 && vad.threshold_db < 0.0) {
        return Err(usage(
            "vad: frame and hop must be positive and the threshold negative",
        ));
    }

    Ok(Config {
        seed,
        out,
        threads,
        embedding_format: v.get("embedding_format")?,
        channels,
        sim,
        paths,
        scoring,
        dcf,
        subsets,
        augment,
        vad,
    })
}
