//! Detection metrics. Spoof is the positive class and a clip is predicted
//! spoof iff `score >= threshold`.
//!
//! * ROC: one point per distinct score (descending), anchored at (0,0).
//! * AUC: Mann-Whitney rank statistic, ties counted as one half.
//! * EER: the FPR = FNR crossing on the linearly interpolated ROC.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::Label;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("metric needs both bonafide and spoof samples (got {n_bonafide} bonafide, {n_spoof} spoof)")]
    OneClass { n_bonafide: usize, n_spoof: usize },
    #[error("no samples to evaluate")]
    EmptyInput,
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score {value} at index {index} is not a finite value in [0, 1]")]
    InvalidScore { index: usize, value: f64 },
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
}

/// Parallel score and label vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores {
    scores: Vec<f64>,
    labels: Vec<Label>,
    n_spoof: usize,
}

impl LabeledScores {
    pub fn new(scores: Vec<f64>, labels: Vec<Label>) -> Result<Self, MetricsError> {
        if scores.len() != labels.len() {
            return Err(MetricsError::LengthMismatch {
                scores: scores.len(),
                labels: labels.len(),
            });
        }
        if scores.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        if let Some((index, &value)) = scores
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && (0.0..=1.0).contains(*s)))
        {
            return Err(MetricsError::InvalidScore { index, value });
        }
        let n_spoof = labels.iter().filter(|&&l| l == Label::Spoof).count();
        Ok(LabeledScores {
            scores,
            labels,
            n_spoof,
        })
    }

    /// Build from separate spoof and bonafide score lists.
    pub fn from_classes(spoof: &[f64], bonafide: &[f64]) -> Result<Self, MetricsError> {
        let scores = spoof.iter().chain(bonafide).copied().collect();
        let labels = std::iter::repeat_n(Label::Spoof, spoof.len())
            .chain(std::iter::repeat_n(Label::Bonafide, bonafide.len()))
            .collect();
        Self::new(scores, labels)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn n_spoof(&self) -> usize {
        self.n_spoof
    }

    pub fn n_bonafide(&self) -> usize {
        self.scores.len() - self.n_spoof
    }

    fn require_both(&self) -> Result<(), MetricsError> {
        if self.n_spoof == 0 || self.n_bonafide() == 0 {
            return Err(MetricsError::OneClass {
                n_bonafide: self.n_bonafide(),
                n_spoof: self.n_spoof,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Thresholds strictly decreasing; the first point is the (0,0) anchor at
    /// threshold +inf, the last is (1,1) at the smallest score.
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }
}

pub fn roc_curve(data: &LabeledScores) -> Result<RocCurve, MetricsError> {
    data.require_both()?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| data.scores[b].total_cmp(&data.scores[a]));

    let n_pos = data.n_spoof() as f64;
    let n_neg = data.n_bonafide() as f64;
    let mut points = Vec::with_capacity(data.len() + 1);
    points.push(RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    });
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = data.scores[order[i]];
        while i < order.len() && data.scores[order[i]] == t {
            match data.labels[order[i]] {
                Label::Spoof => tp += 1,
                Label::Bonafide => fp += 1,
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / n_neg,
            tpr: tp as f64 / n_pos,
        });
    }
    Ok(RocCurve { points })
}

/// Exact rank statistic `P(spoof > bonafide) + P(tie) / 2`.
pub fn auc(data: &LabeledScores) -> Result<f64, MetricsError> {
    data.require_both()?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| data.scores[a].total_cmp(&data.scores[b]));

    // Twice the rank sum of the spoof class, using mid-ranks for ties.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let t = data.scores[order[i]];
        let mut j = i;
        let mut spoof_in_run = 0u128;
        while j < order.len() && data.scores[order[j]] == t {
            if data.labels[order[j]] == Label::Spoof {
                spoof_in_run += 1;
            }
            j += 1;
        }
        // ranks i+1 ..= j, mid-rank (i+1+j)/2
        twice_rank_sum += spoof_in_run * (i as u128 + 1 + j as u128);
        i = j;
    }
    let n_pos = data.n_spoof() as u128;
    let n_neg = data.n_bonafide() as u128;
    let twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualErrorRate {
    pub eer: f64,
    pub threshold: f64,
}

/// Equal error rate on the interpolated ROC, with the interpolated threshold.
///
/// When the crossing lies on the segment leaving the (0,0) anchor, whose
/// threshold is infinite, the threshold of the first finite point is returned.
pub fn eer(data: &LabeledScores) -> Result<EqualErrorRate, MetricsError> {
    let roc = roc_curve(data)?;
    let gap = |p: &RocPoint| (1.0 - p.tpr) - p.fpr;
    let pts = &roc.points;
    let i = pts
        .iter()
        .position(|p| gap(p) <= 0.0)
        .expect("the final ROC point has FNR - FPR = -1");
    let cur = pts[i];
    if gap(&cur) == 0.0 {
        return Ok(EqualErrorRate {
            eer: cur.fpr,
            threshold: cur.threshold,
        });
    }
    let prev = pts[i - 1];
    let (g0, g1) = (gap(&prev), gap(&cur));
    let alpha = g0 / (g0 - g1);
    let fpr = prev.fpr + alpha * (cur.fpr - prev.fpr);
    let fnr = (1.0 - prev.tpr) + alpha * (prev.tpr - cur.tpr);
    let threshold = if prev.threshold.is_finite() {
        prev.threshold + alpha * (cur.threshold - prev.threshold)
    } else {
        cur.threshold
    };
    Ok(EqualErrorRate {
        eer: (fpr + fnr) / 2.0,
        threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
    pub false_positive: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confusion {
    pub accuracy: f64,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub counts: ConfusionCounts,
}

pub fn confusion_at_threshold(data: &LabeledScores, threshold: f64) -> Result<Confusion, MetricsError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(MetricsError::InvalidThreshold(threshold));
    }
    if data.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut c = ConfusionCounts {
        true_positive: 0,
        false_negative: 0,
        true_negative: 0,
        false_positive: 0,
    };
    for (&s, &l) in data.scores.iter().zip(&data.labels) {
        match (l, s >= threshold) {
            (Label::Spoof, true) => c.true_positive += 1,
            (Label::Spoof, false) => c.false_negative += 1,
            (Label::Bonafide, false) => c.true_negative += 1,
            (Label::Bonafide, true) => c.false_positive += 1,
        }
    }
    let n_pos = c.true_positive + c.false_negative;
    let n_neg = c.true_negative + c.false_positive;
    Ok(Confusion {
        accuracy: (c.true_positive + c.true_negative) as f64 / data.len() as f64,
        tpr: (n_pos > 0).then(|| c.true_positive as f64 / n_pos as f64),
        tnr: (n_neg > 0).then(|| c.true_negative as f64 / n_neg as f64),
        counts: c,
    })
}

/// Per-dataset metrics. Metrics that are undefined for the available classes
/// are `None` (serialized as `null`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dataset_id: String,
    pub n_bonafide: usize,
    pub n_spoof: usize,
    pub eer: Option<f64>,
    pub eer_threshold: Option<f64>,
    pub auc: Option<f64>,
    pub threshold_used: f64,
    pub accuracy: Option<f64>,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub skipped_files: usize,
}

impl MetricsReport {
    /// Compute every metric defined for the given scores. Empty input yields a
    /// report with counts only.
    pub fn compute(
        dataset_id: &str,
        scores: &[f64],
        labels: &[Label],
        threshold: f64,
        skipped_files: usize,
    ) -> Result<Self, MetricsError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(MetricsError::InvalidThreshold(threshold));
        }
        let mut report = MetricsReport {
            dataset_id: dataset_id.to_string(),
            n_bonafide: 0,
            n_spoof: 0,
            eer: None,
            eer_threshold: None,
            auc: None,
            threshold_used: threshold,
            accuracy: None,
            tpr: None,
            tnr: None,
            skipped_files,
        };
        if scores.is_empty() && labels.is_empty() {
            return Ok(report);
        }
        let data = LabeledScores::new(scores.to_vec(), labels.to_vec())?;
        report.n_bonafide = data.n_bonafide();
        report.n_spoof = data.n_spoof();
        if report.n_bonafide > 0 && report.n_spoof > 0 {
            let e = eer(&data)?;
            report.eer = Some(e.eer);
            report.eer_threshold = Some(e.threshold);
            report.auc = Some(auc(&data)?);
        }
        let c = confusion_at_threshold(&data, threshold)?;
        report.accuracy = Some(c.accuracy);
        report.tpr = c.tpr;
        report.tnr = c.tnr;
        Ok(report)
    }
}
