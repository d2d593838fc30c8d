//! Threshold-sweep error analysis: EER, normalized MinDCF and DET data.
//!
//! Decisions accept a trial iff `score >= threshold`. A miss is a target
//! scoring strictly below the threshold; a false alarm is a non-target at or
//! above it.

mod probit;
mod report;

use crate::error::{Error, Result};

pub use probit::probit;
pub use report::{
    det_csv, det_points, evaluate, report_text, subset_eval, subset_eval_by, DetPoint, EvalReport,
    SubsetSpec, PROBIT_CLAMP,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub p_miss: f64,
    pub p_fa: f64,
}

/// Miss / false-alarm rates at every distinct score, plus a reject-all
/// sentinel above the largest score.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub points: Vec<OperatingPoint>,
    pub n_target: usize,
    pub n_nontarget: usize,
}

/// Detection cost weights; the defaults are the SRE08 values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcfParams {
    pub c_miss: f64,
    pub c_fa: f64,
    pub p_target: f64,
}

impl Default for DcfParams {
    fn default() -> Self {
        DcfParams {
            c_miss: 10.0,
            c_fa: 1.0,
            p_target: 0.01,
        }
    }
}

impl DcfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_miss > 0.0 && self.c_miss.is_finite()) {
            return Err(Error::Contract(format!(
                "c_miss must be positive, got {}",
                self.c_miss
            )));
        }
        if !(self.c_fa > 0.0 && self.c_fa.is_finite()) {
            return Err(Error::Contract(format!(
                "c_fa must be positive, got {}",
                self.c_fa
            )));
        }
        if !(self.p_target > 0.0 && self.p_target < 1.0) {
            return Err(Error::Contract(format!(
                "p_target must lie in (0, 1), got {}",
                self.p_target
            )));
        }
        Ok(())
    }

    /// Cost of the better of the two trivial systems (accept all / reject all).
    pub fn normalizer(&self) -> f64 {
        (self.c_miss * self.p_target).min(self.c_fa * (1.0 - self.p_target))
    }

    pub fn normalized_dcf(&self, p_miss: f64, p_fa: f64) -> f64 {
        (self.c_miss * p_miss * self.p_target + self.c_fa * p_fa * (1.0 - self.p_target))
            / self.normalizer()
    }
}

/// Sweeps the threshold over every distinct score.
///
/// `labels[i]` is true for targets.
pub fn sweep(scores: &[f64], labels: &[bool]) -> Result<ErrorCurve> {
    if scores.len() != labels.len() {
        return Err(Error::Contract(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::Data(format!("score {i} is not finite")));
    }
    let n_target = labels.iter().filter(|&&l| l).count();
    let n_nontarget = labels.len() - n_target;
    if n_target == 0 || n_nontarget == 0 {
        return Err(Error::Data(format!(
            "need both classes, got {n_target} targets and {n_nontarget} non-targets"
        )));
    }

    let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (nt, nn) = (n_target as f64, n_nontarget as f64);
    let mut points = Vec::new();
    let mut targets_below = 0usize;
    let mut nontargets_below = 0usize;
    let mut i = 0;
    while i < pairs.len() {
        let threshold = pairs[i].0;
        points.push(OperatingPoint {
            threshold,
            p_miss: targets_below as f64 / nt,
            p_fa: (n_nontarget - nontargets_below) as f64 / nn,
        });
        while i < pairs.len() && pairs[i].0 == threshold {
            if pairs[i].1 {
                targets_below += 1;
            } else {
                nontargets_below += 1;
            }
            i += 1;
        }
    }
    let top = pairs[pairs.len() - 1].0;
    points.push(OperatingPoint {
        threshold: reject_all_threshold(top),
        p_miss: 1.0,
        p_fa: 0.0,
    });
    Ok(ErrorCurve {
        points,
        n_target,
        n_nontarget,
    })
}

/// A finite threshold strictly above every score.
fn reject_all_threshold(top: f64) -> f64 {
    let t = top + 1.0;
    if t > top {
        t
    } else {
        top.next_up()
    }
}

/// Equal error rate, by linear interpolation across the segment where
/// `p_miss - p_fa` changes sign. Returns `(eer, threshold)`.
pub fn eer(curve: &ErrorCurve) -> (f64, f64) {
    let pts = &curve.points;
    for (k, p) in pts.iter().enumerate() {
        let d = p.p_miss - p.p_fa;
        if d == 0.0 {
            return (p.p_miss, p.threshold);
        }
        if d > 0.0 {
            // The first point always has d <= 0 (p_miss = 0), so k > 0.
            let q = &pts[k - 1];
            let dq = q.p_miss - q.p_fa;
            let t = dq / (dq - d);
            let rate = q.p_miss + t * (p.p_miss - q.p_miss);
            let threshold = q.threshold + t * (p.threshold - q.threshold);
            return (rate, threshold);
        }
    }
    // Unreachable for a valid curve: the last point has p_miss = 1, p_fa = 0.
    let last = pts[pts.len() - 1];
    (last.p_miss, last.threshold)
}

/// Minimum normalized detection cost over all operating points; ties go to
/// the lowest threshold. Returns `(min_dcf, threshold)`.
pub fn min_dcf(curve: &ErrorCurve, params: &DcfParams) -> (f64, f64) {
    let mut best = (f64::INFINITY, f64::NAN);
    for p in &curve.points {
        let c = params.normalized_dcf(p.p_miss, p.p_fa);
        if c < best.0 {
            best = (c, p.threshold);
        }
    }
    best
}
