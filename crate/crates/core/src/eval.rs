//! ROC curves, equal error rate, threshold metrics and average precision.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Scores `>= threshold` are predicted positive. The first point uses
    /// `+inf`.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub eer: f64,
}

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::invalid("no scores"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    Ok(())
}

/// Descending by score, stable for ties.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    order
}

/// Equal error rate of an ROC polyline: the first point where
/// `fpr = 1 - tpr`, linearly interpolated between vertices.
pub fn eer_from_points(points: &[(f64, f64)]) -> f64 {
    let gap = |(fpr, tpr): (f64, f64)| fpr + tpr - 1.0;
    let mut prev = points[0];
    for &p in points {
        let d = gap(p);
        if d >= 0.0 {
            if d == 0.0 {
                return p.0;
            }
            let d0 = gap(prev);
            let t = -d0 / (d - d0);
            return prev.0 + t * (p.0 - prev.0);
        }
        prev = p;
    }
    // unreachable for a curve ending at (1,1)
    1.0
}

pub fn roc(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    check_inputs(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateData(
            "ROC needs both positive and negative labels".into(),
        ));
    }

    let order = ranking(scores);
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }

    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum();
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.fpr, p.tpr)).collect();
    let eer = eer_from_points(&xy);
    Ok(RocCurve { points, auc, eer })
}

impl RocCurve {
    /// CSV with header `threshold,fpr,tpr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr);
        }
        out
    }

    /// Standalone SVG line plot of the curve.
    pub fn to_svg(&self, title: &str) -> String {
        let size = 320.0;
        let pad = 30.0;
        let span = size - 2.0 * pad;
        let pts: Vec<String> = self
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", pad + p.fpr * span, size - pad - p.tpr * span))
            .collect();
        format!(
            concat!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n",
                "<rect x=\"{p}\" y=\"{p}\" width=\"{w}\" height=\"{w}\" fill=\"none\" stroke=\"#888\"/>\n",
                "<line x1=\"{p}\" y1=\"{b}\" x2=\"{e}\" y2=\"{p}\" stroke=\"#ccc\" stroke-dasharray=\"4\"/>\n",
                "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"{pts}\"/>\n",
                "<text x=\"{p}\" y=\"20\" font-family=\"sans-serif\" font-size=\"12\">{t} (AUC {auc:.3}, EER {eer:.3})</text>\n",
                "</svg>\n"
            ),
            s = size,
            p = pad,
            w = span,
            b = size - pad,
            e = size - pad,
            pts = pts.join(" "),
            t = title,
            auc = self.auc,
            eer = self.eer,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
}

/// Precision, recall and accuracy with positives predicted by
/// `score > threshold`. Precision is 1 when nothing is predicted positive and
/// nothing is positive, and 0 when nothing is predicted but positives exist.
/// Recall is 1 when there are no positives.
pub fn threshold_metrics(scores: &[f64], labels: &[bool], threshold: f64) -> Result<ThresholdMetrics> {
    check_inputs(scores, labels)?;
    let (mut tp, mut fp, mut tn, mut fneg) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s > threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fneg += 1,
        }
    }
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else if tp + fneg == 0 {
        1.0
    } else {
        0.0
    };
    let recall = if tp + fneg > 0 {
        tp as f64 / (tp + fneg) as f64
    } else {
        1.0
    };
    Ok(ThresholdMetrics {
        precision,
        recall,
        accuracy: (tp + tn) as f64 / scores.len() as f64,
    })
}

/// Mean of precision@rank over the ranks holding positives. With a cutoff
/// `K`, only the top `K` ranks count and the sum is divided by
/// `min(K, positives)`.
pub fn average_precision(scores: &[f64], labels: &[bool], cutoff: Option<usize>) -> Result<f64> {
    check_inputs(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Err(Error::UndefinedMetric("average precision needs a positive".into()));
    }
    let k = cutoff.unwrap_or(scores.len()).min(scores.len());
    if k == 0 {
        return Err(Error::invalid("cutoff must be positive"));
    }
    let order = ranking(scores);
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().take(k).enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / n_pos.min(k) as f64)
}

/// Summary written by the evaluate command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub eer: f64,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub ap: f64,
}

impl MetricsReport {
    pub fn compute(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Self> {
        let curve = roc(scores, labels)?;
        let t = threshold_metrics(scores, labels, threshold)?;
        Ok(MetricsReport {
            auc: curve.auc,
            eer: curve.eer,
            precision: t.precision,
            recall: t.recall,
            accuracy: t.accuracy,
            ap: average_precision(scores, labels, None)?,
        })
    }
}
