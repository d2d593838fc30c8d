use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::{eer, min_dcf, probit, sweep, DcfParams, ErrorCurve};
use crate::error::{Error, Result};
use crate::model::{fmt6, Gender, Language, ScoreRecord, Trial, TrialLabel};

/// DET coordinates are clamped to `[PROBIT_CLAMP, 1 - PROBIT_CLAMP]` before
/// the probit transform.
pub const PROBIT_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint {
    pub threshold: f64,
    pub p_fa: f64,
    pub p_miss: f64,
    pub probit_fa: f64,
    pub probit_miss: f64,
}

/// DET rows, ordered by increasing false-alarm rate.
pub fn det_points(curve: &ErrorCurve) -> Vec<DetPoint> {
    let warp = |p: f64| {
        probit(p.clamp(PROBIT_CLAMP, 1.0 - PROBIT_CLAMP))
            .expect("clamped probability is inside (0, 1)")
    };
    curve
        .points
        .iter()
        .rev()
        .map(|p| DetPoint {
            threshold: p.threshold,
            p_fa: p.p_fa,
            p_miss: p.p_miss,
            probit_fa: warp(p.p_fa),
            probit_miss: warp(p.p_miss),
        })
        .collect()
}

pub fn det_csv(det: &[DetPoint]) -> String {
    let mut out = String::from("threshold,p_fa,p_miss,probit_fa,probit_miss\n");
    for d in det {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt6(d.threshold),
            fmt6(d.p_fa),
            fmt6(d.p_miss),
            fmt6(d.probit_fa),
            fmt6(d.probit_miss)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub eer: f64,
    pub eer_threshold: f64,
    pub min_dcf: f64,
    pub min_dcf_threshold: f64,
    pub n_target: usize,
    pub n_nontarget: usize,
    pub det: Vec<DetPoint>,
    /// Requested subsets by name; `None` marks a subset that lacked one of
    /// the two classes.
    pub subset_reports: BTreeMap<String, Option<EvalReport>>,
}

/// EER, MinDCF and DET for one labeled score list.
pub fn evaluate(scores: &[f64], labels: &[bool], params: &DcfParams) -> Result<EvalReport> {
    params.validate()?;
    let curve = sweep(scores, labels)?;
    let (e, et) = eer(&curve);
    let (m, mt) = min_dcf(&curve, params);
    Ok(EvalReport {
        eer: e,
        eer_threshold: et,
        min_dcf: m,
        min_dcf_threshold: mt,
        n_target: curve.n_target,
        n_nontarget: curve.n_nontarget,
        det: det_points(&curve),
        subset_reports: BTreeMap::new(),
    })
}

/// Trial filters for per-condition reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubsetSpec {
    Overall,
    Male,
    Female,
    Farsi,
    English,
    /// TC targets against IC non-targets only.
    TcVsIc,
    /// TC targets against TW non-targets only.
    TcVsTw,
}

impl SubsetSpec {
    pub fn builtins() -> Vec<SubsetSpec> {
        vec![
            SubsetSpec::Overall,
            SubsetSpec::Male,
            SubsetSpec::Female,
            SubsetSpec::Farsi,
            SubsetSpec::English,
            SubsetSpec::TcVsIc,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            SubsetSpec::Overall => "overall",
            SubsetSpec::Male => "male",
            SubsetSpec::Female => "female",
            SubsetSpec::Farsi => "farsi",
            SubsetSpec::English => "english",
            SubsetSpec::TcVsIc => "tc_vs_ic",
            SubsetSpec::TcVsTw => "tc_vs_tw",
        }
    }

    pub fn keeps(self, trial: &Trial) -> bool {
        match self {
            SubsetSpec::Overall => true,
            SubsetSpec::Male => trial.gender == Some(Gender::Male),
            SubsetSpec::Female => trial.gender == Some(Gender::Female),
            SubsetSpec::Farsi => trial.language == Some(Language::Farsi),
            SubsetSpec::English => trial.language == Some(Language::English),
            SubsetSpec::TcVsIc => matches!(trial.label, Some(TrialLabel::TC | TrialLabel::IC)),
            SubsetSpec::TcVsTw => matches!(trial.label, Some(TrialLabel::TC | TrialLabel::TW)),
        }
    }
}

impl FromStr for SubsetSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            SubsetSpec::Overall,
            SubsetSpec::Male,
            SubsetSpec::Female,
            SubsetSpec::Farsi,
            SubsetSpec::English,
            SubsetSpec::TcVsIc,
            SubsetSpec::TcVsTw,
        ]
        .into_iter()
        .find(|spec| spec.name() == s)
        .ok_or_else(|| format!("unknown subset `{s}`"))
    }
}

/// Evaluates the final scores over all labeled trials, and over each
/// requested subset. `records[i]` must belong to `trials[i]`; unlabeled
/// trials are skipped.
pub fn subset_eval(
    records: &[ScoreRecord],
    trials: &[Trial],
    subsets: &[SubsetSpec],
    params: &DcfParams,
) -> Result<EvalReport> {
    subset_eval_by(records, trials, subsets, params, |r| r.final_score)
}

/// Like [`subset_eval`], with a caller-chosen score per record.
pub fn subset_eval_by(
    records: &[ScoreRecord],
    trials: &[Trial],
    subsets: &[SubsetSpec],
    params: &DcfParams,
    score: impl Fn(&ScoreRecord) -> f64,
) -> Result<EvalReport> {
    if records.len() != trials.len() {
        return Err(Error::Data(format!(
            "{} score records for {} trials",
            records.len(),
            trials.len()
        )));
    }
    for (i, (r, t)) in records.iter().zip(trials).enumerate() {
        if r.model_id != t.model_id || r.test_utterance_id != t.test_utterance_id {
            return Err(Error::Data(format!(
                "score record {} ({} / {}) does not match trial ({} / {})",
                i + 1,
                r.model_id,
                r.test_utterance_id,
                t.model_id,
                t.test_utterance_id
            )));
        }
    }
    let labeled: Vec<(f64, &Trial)> = records
        .iter()
        .zip(trials)
        .filter(|(_, t)| t.label.is_some())
        .map(|(r, t)| (score(r), t))
        .collect();
    if labeled.is_empty() {
        return Err(Error::Data("no labeled trials to evaluate".into()));
    }

    let run = |spec: SubsetSpec| -> Result<Option<EvalReport>> {
        let (scores, labels): (Vec<f64>, Vec<bool>) = labeled
            .iter()
            .filter(|(_, t)| spec.keeps(t))
            .map(|&(s, t)| (s, t.label.is_some_and(TrialLabel::is_target)))
            .unzip();
        let n_target = labels.iter().filter(|&&l| l).count();
        if n_target == 0 || n_target == labels.len() {
            return Ok(None);
        }
        evaluate(&scores, &labels, params).map(Some)
    };

    let mut report = run(SubsetSpec::Overall)?.ok_or_else(|| {
        Error::Data("labeled trials do not contain both targets and non-targets".into())
    })?;
    for &spec in subsets {
        let sub = run(spec)?;
        report.subset_reports.insert(spec.name().to_string(), sub);
    }
    Ok(report)
}

/// Flat `key=value` rendering, ordered by key.
pub fn report_text(report: &EvalReport, params: &DcfParams) -> String {
    let mut lines = vec![
        format!("dcf.c_fa={}", fmt6(params.c_fa)),
        format!("dcf.c_miss={}", fmt6(params.c_miss)),
        format!("dcf.p_target={}", fmt6(params.p_target)),
    ];
    let mut entries: BTreeMap<&str, Option<&EvalReport>> = report
        .subset_reports
        .iter()
        .map(|(k, v)| (k.as_str(), v.as_ref()))
        .collect();
    entries.entry("overall").or_insert(Some(report));
    for (name, sub) in entries {
        match sub {
            Some(r) => {
                lines.push(format!("{name}.eer={}", fmt6(r.eer)));
                lines.push(format!("{name}.eer_threshold={}", fmt6(r.eer_threshold)));
                lines.push(format!("{name}.min_dcf={}", fmt6(r.min_dcf)));
                lines.push(format!(
                    "{name}.min_dcf_threshold={}",
                    fmt6(r.min_dcf_threshold)
                ));
                lines.push(format!("{name}.n_nontarget={}", r.n_nontarget));
                lines.push(format!("{name}.n_target={}", r.n_target));
            }
            None => lines.push(format!("{name}.status=absent")),
        }
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}
