//! Domain types shared by every stage of the pipeline, plus the text and
//! binary file formats they travel in.

mod embedding_io;
mod format;
mod table_io;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use embedding_io::{read_embeddings, write_embeddings, EmbeddingFormat, EmbeddingSet};
pub use format::fmt6;
pub use table_io::{
    read_enrollments, read_ground_truth, read_posteriors, read_scores, read_trials,
    write_enrollments, write_ground_truth, write_posteriors, write_scores, write_trials,
    Enrollment, GroundTruth, PosteriorTable, ScoreFile,
};

/// Number of passphrases in the registry.
pub const N_PHRASES: usize = 10;

/// A named embedding channel, one per speaker-embedding extractor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChannelSpec {
    pub name: String,
    pub dim: usize,
}

impl ChannelSpec {
    pub fn new(name: impl Into<String>, dim: usize) -> Result<Self> {
        let name = name.into();
        if dim == 0 {
            return Err(Error::Contract(format!(
                "channel `{name}` has zero dimension"
            )));
        }
        if !is_identifier(&name) {
            return Err(Error::Contract(format!("invalid channel name `{name}`")));
        }
        Ok(ChannelSpec { name, dim })
    }

    /// The three extractor channels: NeXt-TDNN (192), ResNet-TDNN (256) and
    /// EfficientNet-A0 (256).
    pub fn defaults() -> Vec<ChannelSpec> {
        vec![
            ChannelSpec {
                name: "next_tdnn".into(),
                dim: 192,
            },
            ChannelSpec {
                name: "resnet_tdnn".into(),
                dim: 256,
            },
            ChannelSpec {
                name: "efficientnet_a0".into(),
                dim: 256,
            },
        ]
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.dim)
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    /// Parses `name:dim`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, dim) = s
            .split_once(':')
            .ok_or_else(|| Error::Format(format!("channel `{s}` is not of the form name:dim")))?;
        let dim = dim
            .parse::<usize>()
            .map_err(|_| Error::Format(format!("channel `{s}` has a non-integer dimension")))?;
        ChannelSpec::new(name, dim)
    }
}

/// Checks that channel names are unique.
pub fn validate_channels(channels: &[ChannelSpec]) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::Contract("at least one channel is required".into()));
    }
    for (i, a) in channels.iter().enumerate() {
        if channels[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::Contract(format!("duplicate channel `{}`", a.name)));
        }
    }
    Ok(())
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Utterance and model ids: nonempty, no whitespace.
pub(crate) fn valid_id(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Language {
    Farsi,
    English,
}

impl Language {
    pub fn as_str(self) -> &'static str {
        match self {
            Language::Farsi => "farsi",
            Language::English => "english",
        }
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "farsi" => Ok(Language::Farsi),
            "english" => Ok(Language::English),
            _ => Err(format!("unknown language `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "male" => Ok(Gender::Male),
            "female" => Ok(Gender::Female),
            _ => Err(format!("unknown gender `{s}`")),
        }
    }
}

const PHRASE_TEXT: [&str; N_PHRASES] = [
    "sedaye man neshandahandeye hoviyyate man ast.",
    "sedaye har kas monhaser be fard ast.",
    "hoviyyate man ra ba sedaye man tayid kon.",
    "sedaye man ramze obure man ast.",
    "baniadam azaye yekdigarand.",
    "My voice is my password.",
    "OK Google.",
    "Artificial intelligence is for real.",
    "Actions speak louder than words.",
    "There is no such thing as a free lunch.",
];

/// One of the ten challenge passphrases; ids run 1 through 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhraseId(u8);

impl PhraseId {
    pub fn new(id: u8) -> Result<Self> {
        if (1..=N_PHRASES as u8).contains(&id) {
            Ok(PhraseId(id))
        } else {
            Err(Error::Contract(format!("phrase id {id} outside 1..=10")))
        }
    }

    pub fn all() -> impl Iterator<Item = PhraseId> {
        (1..=N_PHRASES as u8).map(PhraseId)
    }

    pub fn id(self) -> u8 {
        self.0
    }

    /// Zero-based column in a posterior row.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn text(self) -> &'static str {
        PHRASE_TEXT[self.index()]
    }

    /// Ids 1-5 are the Farsi phrases, 6-10 the English ones.
    pub fn language(self) -> Language {
        if self.0 <= 5 {
            Language::Farsi
        } else {
            Language::English
        }
    }

    pub fn from_text(text: &str) -> Option<PhraseId> {
        PhraseId::all().find(|p| p.text() == text)
    }
}

impl fmt::Display for PhraseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An embedding vector for one utterance on one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub utterance_id: String,
    pub channel: String,
    pub vector: Vec<f32>,
}

impl Embedding {
    pub fn new(
        utterance_id: impl Into<String>,
        channel: impl Into<String>,
        vector: Vec<f32>,
    ) -> Result<Self> {
        let e = Embedding {
            utterance_id: utterance_id.into(),
            channel: channel.into(),
            vector,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !valid_id(&self.utterance_id) {
            return Err(Error::Data(format!(
                "invalid utterance id `{}`",
                self.utterance_id
            )));
        }
        if self.vector.is_empty() {
            return Err(Error::Data(format!(
                "empty vector for `{}`",
                self.utterance_id
            )));
        }
        if let Some(i) = self.vector.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite component {i} in `{}`",
                self.utterance_id
            )));
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.vector
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }
}

/// Four-way trial class. Only `TC` is a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrialLabel {
    /// Target speaker, correct phrase.
    TC,
    /// Target speaker, wrong phrase.
    TW,
    /// Imposter, correct phrase.
    IC,
    /// Imposter, wrong phrase.
    IW,
}

impl TrialLabel {
    pub const ALL: [TrialLabel; 4] = [
        TrialLabel::TC,
        TrialLabel::TW,
        TrialLabel::IC,
        TrialLabel::IW,
    ];

    pub fn is_target(self) -> bool {
        self == TrialLabel::TC
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrialLabel::TC => "TC",
            TrialLabel::TW => "TW",
            TrialLabel::IC => "IC",
            TrialLabel::IW => "IW",
        }
    }
}

impl FromStr for TrialLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "TC" => Ok(TrialLabel::TC),
            "TW" => Ok(TrialLabel::TW),
            "IC" => Ok(TrialLabel::IC),
            "IW" => Ok(TrialLabel::IW),
            _ => Err(format!("unknown label `{s}`")),
        }
    }
}

/// One verification attempt against an enrolled speaker-phrase model.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trial {
    pub model_id: String,
    pub test_utterance_id: String,
    pub label: Option<TrialLabel>,
    pub gender: Option<Gender>,
    pub language: Option<Language>,
}

impl Trial {
    pub fn new(model_id: impl Into<String>, test_utterance_id: impl Into<String>) -> Self {
        Trial {
            model_id: model_id.into(),
            test_utterance_id: test_utterance_id.into(),
            label: None,
            gender: None,
            language: None,
        }
    }

    pub fn is_target(&self) -> Option<bool> {
        self.label.map(TrialLabel::is_target)
    }
}

/// An enrolled speaker for one passphrase: one aggregated embedding per
/// channel, built from three enrollment utterances.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerModel {
    pub model_id: String,
    pub phrase: PhraseId,
    pub enrollments: Vec<Embedding>,
    pub source_utterance_ids: [String; 3],
}

impl SpeakerModel {
    pub fn enrollment(&self, channel: &str) -> Option<&Embedding> {
        self.enrollments.iter().find(|e| e.channel == channel)
    }
}

/// Per-trial score ledger, one entry per channel for the per-channel stages.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub model_id: String,
    pub test_utterance_id: String,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    pub calibrated: Vec<f64>,
    pub fused: f64,
    pub phrase_posterior: f64,
    pub final_score: f64,
}
