//! Scoring and evaluation back end for text-dependent speaker verification.
//!
//! The pipeline takes per-extractor speaker embeddings and produces a final
//! decision score per trial:
//!
//! 1. enrollment aggregation ([`scorer::enroll_aggregate`]),
//! 2. cosine scoring against the enrolled model,
//! 3. symmetric cohort normalization ([`scorer::s_norm`]),
//! 4. per-channel probability calibration and mean fusion,
//! 5. gating by the phrase classifier's posterior for the enrolled phrase.
//!
//! [`metrics`] turns scored trials into EER / MinDCF / DET reports, [`dsp`]
//! holds the waveform preprocessing and augmentation used for training data,
//! and [`sim`] generates synthetic embeddings with known ground truth.

pub mod dsp;
pub mod error;
pub mod metrics;
pub mod model;
pub mod scorer;
pub mod sim;

pub use error::{Error, Result};
