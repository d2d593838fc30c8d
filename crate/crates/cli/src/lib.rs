//! The `tdsv` command line: one subcommand per pipeline stage plus
//! `pipeline`, which chains simulate, enroll, score and eval.

pub mod config;
pub mod stages;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{parse_config, Config, KeyFlags};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] tdsv_core::Error),
}

impl CliError {
    /// 1 for usage and configuration errors, 2 for data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(_) => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "tdsv",
    version,
    about = "Text-dependent speaker verification scoring pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct StageArgs {
    /// Flat key=value config file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(flatten)]
    keys: KeyFlags,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic embeddings, cohorts, trials and phrase posteriors.
    Simulate(StageArgs),
    /// Build speaker models from enrollment utterances.
    Enroll(StageArgs),
    /// Score trials: cosine, S-norm, calibration, fusion, phrase gating.
    Score(StageArgs),
    /// Compute EER, MinDCF and DET tables per subset.
    Eval(StageArgs),
    /// Augment a WAV file.
    Augment(StageArgs),
    /// Trim leading and trailing silence from a WAV file.
    Vad(StageArgs),
    /// Run simulate, enroll, score and eval in one go.
    Pipeline(StageArgs),
}

/// Parses arguments, runs the chosen stage and returns the process exit
/// code. `TDSV_THREADS` overrides the configured thread count.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_threads(args, std::env::var("TDSV_THREADS").ok())
}

/// [`run`] with an explicit value standing in for `TDSV_THREADS`.
pub fn run_with_threads<I, T>(args: I, threads_override: Option<String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli, threads_override) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("tdsv: error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, threads_override: Option<String>) -> Result<(), CliError> {
    let (stage, args): (fn(&Config) -> Result<(), CliError>, StageArgs) = match cli.command {
        Command::Simulate(a) => (stages::simulate, a),
        Command::Enroll(a) => (stages::enroll, a),
        Command::Score(a) => (stages::score, a),
        Command::Eval(a) => (stages::eval, a),
        Command::Augment(a) => (stages::augment, a),
        Command::Vad(a) => (stages::vad, a),
        Command::Pipeline(a) => (stages::pipeline, a),
    };
    let mut keys = args.keys;
    if let Some(t) = threads_override {
        keys.threads = Some(t);
    }
    let cfg = parse_config(args.config.as_deref(), &keys)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| stage(&cfg))
}
