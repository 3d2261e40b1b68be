//! Empirical ROC curves, trapezoidal AUC and the Youden-optimal cutoff.

use serde::Serialize;

use crate::error::{Error, Result};

/// Direction in which the marker predicts the positive class.
///
/// Hazard-ratio style markers (smaller = larger benefit) use
/// `LowerPredictsPositive`; difference measures use `HigherPredictsPositive`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerOrientation {
    HigherPredictsPositive,
    LowerPredictsPositive,
}

/// One operating point. The threshold is on the original marker scale;
/// the two sentinel points carry infinite thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub orientation: MarkerOrientation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YoudenPoint {
    pub threshold: f64,
    pub j: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Build the empirical ROC curve with one operating point per unique marker
/// value (decision rule: orientation-adjusted marker >= threshold predicts
/// positive) plus the two sentinel points.
///
/// Rows with an absent marker are dropped listwise before the curve is built.
pub fn roc_curve(
    markers: &[Option<f64>],
    labels: &[bool],
    orient: MarkerOrientation,
) -> Result<RocCurve> {
    if markers.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "markers has {} entries, labels has {}",
            markers.len(),
            labels.len()
        )));
    }
    // adjusted value: negate so the >= rule is uniform across orientations
    let sign = match orient {
        MarkerOrientation::HigherPredictsPositive => 1.0,
        MarkerOrientation::LowerPredictsPositive => -1.0,
    };
    let mut data: Vec<(f64, bool)> = markers
        .iter()
        .zip(labels)
        .filter_map(|(m, &l)| m.map(|v| (sign * v, l)))
        .collect();
    let n_pos = data.iter().filter(|(_, l)| *l).count();
    let n_neg = data.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels(format!(
            "need at least one positive and one negative after listwise deletion, got {n_pos} positives / {n_neg} negatives"
        )));
    }
    data.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut points = vec![RocPoint {
        threshold: sign * f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < data.len() {
        let v = data[i].0;
        while i < data.len() && data[i].0 == v {
            if data[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: sign * v,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    points.push(RocPoint {
        threshold: sign * f64::NEG_INFINITY,
        fpr: 1.0,
        tpr: 1.0,
    });

    let auc = trapezoid(&points);
    Ok(RocCurve { points, auc, n_pos, n_neg, orientation: orient })
}

fn trapezoid(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

/// All-pairs AUC oracle: P(pos > neg) + 0.5 * P(pos == neg) by explicit
/// double loop. Kept independent of the trapezoidal path on purpose.
pub fn auc_pairs(marker_pos: &[f64], marker_neg: &[f64]) -> Result<f64> {
    if marker_pos.is_empty() || marker_neg.is_empty() {
        return Err(Error::DegenerateLabels(
            "auc_pairs requires non-empty positive and negative samples".to_string(),
        ));
    }
    let mut score = 0.0;
    for &p in marker_pos {
        for &n in marker_neg {
            if p > n {
                score += 1.0;
            } else if p == n {
                score += 0.5;
            }
        }
    }
    Ok(score / (marker_pos.len() as f64 * marker_neg.len() as f64))
}

/// Operating point maximizing J = TPR - FPR over the non-sentinel thresholds.
/// Ties resolve toward higher specificity, then toward the smaller threshold.
pub fn youden(curve: &RocCurve) -> Result<YoudenPoint> {
    let inner = &curve.points[1..curve.points.len() - 1];
    if inner.is_empty() {
        return Err(Error::EmptyInput("curve has no non-sentinel operating point".to_string()));
    }
    let mut best: Option<YoudenPoint> = None;
    for p in inner {
        let cand = YoudenPoint {
            threshold: p.threshold,
            j: p.tpr - p.fpr,
            sensitivity: p.tpr,
            specificity: 1.0 - p.fpr,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                cand.j > b.j
                    || (cand.j == b.j
                        && (cand.specificity > b.specificity
                            || (cand.specificity == b.specificity && cand.threshold < b.threshold)))
            }
        };
        if better {
            best = Some(cand);
        }
    }
    Ok(best.unwrap())
}
