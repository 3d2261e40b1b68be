//! 2x2 cross-tables, sensitivity/specificity and the odds ratio.

use serde::Serialize;

use crate::error::{Error, Result};

/// Counts of comparisons by predicted vs actual significance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConfusionTable {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionTable {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn cross_table(predicted: &[bool], actual: &[bool]) -> Result<ConfusionTable> {
    if predicted.len() != actual.len() {
        return Err(Error::Dimension(format!(
            "predicted has {} entries, actual has {}",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput("cross_table requires at least one pair".to_string()));
    }
    let mut t = ConfusionTable::new(0, 0, 0, 0);
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p, a) {
            (true, true) => t.tp += 1,
            (true, false) => t.fp += 1,
            (false, true) => t.fn_ += 1,
            (false, false) => t.tn += 1,
        }
    }
    Ok(t)
}

/// (tp*tn)/(fp*fn). Zero cells are an error unless the Haldane-Anscombe
/// +0.5 correction is requested.
pub fn odds_ratio(t: &ConfusionTable, haldane: bool) -> Result<f64> {
    if haldane {
        let (a, b, c, d) = (
            t.tp as f64 + 0.5,
            t.fp as f64 + 0.5,
            t.fn_ as f64 + 0.5,
            t.tn as f64 + 0.5,
        );
        return Ok(a * d / (b * c));
    }
    if t.tp == 0 || t.fp == 0 || t.fn_ == 0 || t.tn == 0 {
        return Err(Error::UndefinedOddsRatio(format!(
            "tp={} fp={} fn={} tn={}",
            t.tp, t.fp, t.fn_, t.tn
        )));
    }
    Ok((t.tp as f64 * t.tn as f64) / (t.fp as f64 * t.fn_ as f64))
}

pub fn sens_spec(t: &ConfusionTable) -> Result<(f64, f64)> {
    let pos = t.tp + t.fn_;
    let neg = t.fp + t.tn;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedRate(format!(
            "empty margin: positives={pos}, negatives={neg}"
        )));
    }
    Ok((t.tp as f64 / pos as f64, t.tn as f64 / neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_table_identity() {
        let t = cross_table(&[true, false], &[true, false]).unwrap();
        assert_eq!(t, ConfusionTable::new(1, 0, 0, 1));
    }

    #[test]
    fn cross_table_all_false_predictions() {
        let t = cross_table(&[false, false, false], &[true, true, false]).unwrap();
        assert_eq!(t, ConfusionTable::new(0, 0, 2, 1));
    }

    #[test]
    fn cross_table_published_counts() {
        // 33 significant-PFS comparisons, 12 with significant OS; 41 without, 4 with
        let mut pred = vec![true; 33];
        pred.extend(vec![false; 41]);
        let mut actual = vec![true; 12];
        actual.extend(vec![false; 21]);
        actual.extend(vec![true; 4]);
        actual.extend(vec![false; 37]);
        let t = cross_table(&pred, &actual).unwrap();
        assert_eq!(t, ConfusionTable::new(12, 21, 4, 37));
        assert_eq!(t.total(), 74);
    }

    #[test]
    fn cross_table_length_mismatch() {
        assert!(matches!(cross_table(&[true], &[true, false]), Err(Error::Dimension(_))));
    }

    #[test]
    fn odds_ratio_published_value() {
        let or = odds_ratio(&ConfusionTable::new(12, 21, 4, 37), false).unwrap();
        assert!((or - 5.285714285714286).abs() < 1e-12);
        assert_eq!(format!("{or:.2}"), "5.29");
    }

    #[test]
    fn odds_ratio_no_association_and_direct() {
        assert_eq!(odds_ratio(&ConfusionTable::new(1, 1, 1, 1), false).unwrap(), 1.0);
        assert_eq!(odds_ratio(&ConfusionTable::new(2, 1, 1, 2), false).unwrap(), 4.0);
    }

    #[test]
    fn odds_ratio_zero_cell() {
        let t = ConfusionTable::new(0, 2, 3, 4);
        assert!(matches!(odds_ratio(&t, false), Err(Error::UndefinedOddsRatio(_))));
        let corrected = odds_ratio(&t, true).unwrap();
        assert!((corrected - (0.5 * 4.5) / (2.5 * 3.5)).abs() < 1e-12);
    }

    #[test]
    fn odds_ratio_flip_inverse_property() {
        for t in [
            ConfusionTable::new(12, 21, 4, 37),
            ConfusionTable::new(3, 5, 7, 11),
            ConfusionTable::new(1, 9, 2, 8),
        ] {
            // flipping predictions swaps tp<->fn and fp<->tn
            let flipped = ConfusionTable::new(t.fn_, t.tn, t.tp, t.fp);
            let prod = odds_ratio(&t, false).unwrap() * odds_ratio(&flipped, false).unwrap();
            assert!((prod - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sens_spec_published_cutoffs() {
        let (se, sp) = sens_spec(&ConfusionTable::new(13, 13, 3, 43)).unwrap();
        assert!((se - 0.8125).abs() < 1e-12);
        assert!((sp - 43.0 / 56.0).abs() < 1e-12);
        // published rounding: 81.3% / 76.8%, within +-0.05 percentage points
        assert!((100.0 * se - 81.3).abs() <= 0.05);
        assert!((100.0 * sp - 76.8).abs() <= 0.05);

        let (se, sp) = sens_spec(&ConfusionTable::new(14, 21, 2, 35)).unwrap();
        assert_eq!((se, sp), (0.875, 0.625));
    }

    #[test]
    fn sens_spec_degenerate_rows() {
        let (se, sp) = sens_spec(&ConfusionTable::new(0, 0, 1, 1)).unwrap();
        assert_eq!((se, sp), (0.0, 1.0));
        assert!(matches!(
            sens_spec(&ConfusionTable::new(0, 1, 0, 1)),
            Err(Error::UndefinedRate(_))
        ));
    }

    #[test]
    fn rates_bounded() {
        for t in [
            ConfusionTable::new(5, 0, 0, 5),
            ConfusionTable::new(1, 2, 3, 4),
            ConfusionTable::new(0, 9, 9, 1),
        ] {
            let (se, sp) = sens_spec(&t).unwrap();
            assert!((0.0..=1.0).contains(&se));
            assert!((0.0..=1.0).contains(&sp));
        }
    }
}
