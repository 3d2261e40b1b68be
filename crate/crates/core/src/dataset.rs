//! Trial-level comparison records: CSV parsing, validation, derived effect
//! measures and descriptive summaries.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Exact CSV header, in canonical column order.
pub const CSV_COLUMNS: [&str; 18] = [
    "study_id",
    "pub_year",
    "phase",
    "randomized",
    "blinding",
    "control_type",
    "therapy_line",
    "sample_size",
    "deaths",
    "med_pfs_control",
    "med_pfs_treatment",
    "hr_pfs",
    "pfs_p_value",
    "pfs_significant_reported",
    "hr_os",
    "os_p_value",
    "os_significant_reported",
    "endpoint_is_ttp",
];

macro_rules! token_enum {
    ($name:ident { $($variant:ident => $token:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub fn parse(s: &str) -> Option<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($token => Some(Self::$variant),)+
                    _ => None,
                }
            }

            pub fn as_token(&self) -> &'static str {
                match self {
                    $(Self::$variant => $token,)+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_token())
            }
        }
    };
}

token_enum!(Phase { Ii => "ii", Iib => "iib", Iii => "iii", Unknown => "unknown" });
token_enum!(Blinding { Open => "open", Blinded => "blinded", Unknown => "unknown" });
token_enum!(ControlType { Active => "active", Placebo => "placebo", StandardCare => "standard_care" });
token_enum!(TherapyLine { First => "first", SecondPlus => "second_plus" });

/// One treatment-to-control comparison extracted from a publication.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRecord {
    pub study_id: String,
    pub pub_year: i32,
    pub phase: Phase,
    pub randomized: bool,
    pub blinding: Blinding,
    pub control_type: ControlType,
    pub therapy_line: TherapyLine,
    pub sample_size: u32,
    pub deaths: Option<u32>,
    pub med_pfs_control: Option<f64>,
    pub med_pfs_treatment: Option<f64>,
    pub hr_pfs: Option<f64>,
    pub pfs_p_value: Option<f64>,
    pub pfs_significant_reported: Option<bool>,
    pub hr_os: Option<f64>,
    pub os_p_value: Option<f64>,
    pub os_significant_reported: Option<bool>,
    pub endpoint_is_ttp: bool,
}

/// The three comparative PFS measures plus the binary OS-significance label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedMeasures {
    pub hr_pfs: Option<f64>,
    pub delta_med: Option<f64>,
    pub pct_delta_med: Option<f64>,
    pub os_significant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericSummary {
    pub n: usize,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelCount {
    pub count: usize,
    pub percent: f64,
}

/// Per-variable descriptive statistics in Table-2 layout.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryStats {
    pub n_records: usize,
    pub numeric: BTreeMap<String, NumericSummary>,
    pub categorical: BTreeMap<String, BTreeMap<String, LevelCount>>,
}

struct RowCtx<'a> {
    row: usize,
    cols: &'a BTreeMap<&'static str, usize>,
    cells: &'a csv::StringRecord,
}

impl<'a> RowCtx<'a> {
    fn cell(&self, col: &'static str) -> &str {
        self.cells.get(self.cols[col]).unwrap_or("").trim()
    }

    fn err(&self, col: &'static str, message: impl Into<String>) -> Error {
        Error::Parse {
            row: self.row,
            column: col.to_string(),
            message: message.into(),
        }
    }

    fn required<T, F: Fn(&str) -> Option<T>>(&self, col: &'static str, f: F) -> Result<T> {
        let raw = self.cell(col);
        if raw.is_empty() {
            return Err(self.err(col, "required value is empty"));
        }
        f(raw).ok_or_else(|| self.err(col, format!("cannot parse `{raw}`")))
    }

    fn optional<T, F: Fn(&str) -> Option<T>>(&self, col: &'static str, f: F) -> Result<Option<T>> {
        let raw = self.cell(col);
        if raw.is_empty() {
            return Ok(None);
        }
        f(raw)
            .map(Some)
            .ok_or_else(|| self.err(col, format!("cannot parse `{raw}`")))
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parse the documented CSV schema into validated records.
///
/// Columns may appear in any order; empty cells map to absent optionals;
/// enum tokens are matched case-insensitively.
pub fn parse_csv(raw: &[u8]) -> Result<Vec<ComparisonRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(raw);
    let header = reader
        .headers()
        .map_err(|e| Error::Schema { column: format!("<header unreadable: {e}>") })?
        .clone();

    let mut cols: BTreeMap<&'static str, usize> = BTreeMap::new();
    for col in CSV_COLUMNS {
        match header.iter().position(|h| h.trim() == col) {
            Some(i) => {
                cols.insert(col, i);
            }
            None => return Err(Error::Schema { column: col.to_string() }),
        }
    }

    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1; // 1-based data row index
        let cells = rec.map_err(|e| Error::Parse {
            row,
            column: "<row>".to_string(),
            message: e.to_string(),
        })?;
        let ctx = RowCtx { row, cols: &cols, cells: &cells };
        let record = parse_row(&ctx)?;
        validate(&record, row)?;
        records.push(record);
    }
    Ok(records)
}

fn parse_row(ctx: &RowCtx) -> Result<ComparisonRecord> {
    Ok(ComparisonRecord {
        study_id: ctx.required("study_id", |s| Some(s.to_string()))?,
        pub_year: ctx.required("pub_year", |s| s.parse().ok())?,
        phase: ctx.required("phase", Phase::parse)?,
        randomized: ctx.required("randomized", parse_bool)?,
        blinding: ctx.required("blinding", Blinding::parse)?,
        control_type: ctx.required("control_type", ControlType::parse)?,
        therapy_line: ctx.required("therapy_line", TherapyLine::parse)?,
        sample_size: ctx.required("sample_size", |s| s.parse().ok())?,
        deaths: ctx.optional("deaths", |s| s.parse().ok())?,
        med_pfs_control: ctx.optional("med_pfs_control", parse_f64)?,
        med_pfs_treatment: ctx.optional("med_pfs_treatment", parse_f64)?,
        hr_pfs: ctx.optional("hr_pfs", parse_f64)?,
        pfs_p_value: ctx.optional("pfs_p_value", parse_f64)?,
        pfs_significant_reported: ctx.optional("pfs_significant_reported", parse_bool)?,
        hr_os: ctx.optional("hr_os", parse_f64)?,
        os_p_value: ctx.optional("os_p_value", parse_f64)?,
        os_significant_reported: ctx.optional("os_significant_reported", parse_bool)?,
        endpoint_is_ttp: ctx.required("endpoint_is_ttp", parse_bool)?,
    })
}

fn validate(rec: &ComparisonRecord, row: usize) -> Result<()> {
    let mut bad = Vec::new();
    if rec.sample_size < 2 {
        bad.push("sample_size must be >= 2".to_string());
    }
    if let Some(d) = rec.deaths {
        if d > rec.sample_size {
            bad.push(format!("deaths ({d}) exceeds sample_size ({})", rec.sample_size));
        }
    }
    for (name, v) in [
        ("med_pfs_control", rec.med_pfs_control),
        ("med_pfs_treatment", rec.med_pfs_treatment),
        ("hr_pfs", rec.hr_pfs),
        ("hr_os", rec.hr_os),
    ] {
        if let Some(v) = v {
            if v <= 0.0 {
                bad.push(format!("{name} must be positive, got {v}"));
            }
        }
    }
    for (name, v) in [("pfs_p_value", rec.pfs_p_value), ("os_p_value", rec.os_p_value)] {
        if let Some(v) = v {
            if !(0.0..=1.0).contains(&v) {
                bad.push(format!("{name} must lie in [0,1], got {v}"));
            }
        }
    }
    if rec.os_p_value.is_none() && rec.os_significant_reported.is_none() {
        bad.push("one of os_p_value or os_significant_reported is required".to_string());
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation { row, message: bad.join("; ") })
    }
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn fmt_opt_bool(v: Option<bool>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Serialize records back to the documented CSV schema (canonical column order).
pub fn records_to_csv(records: &[ComparisonRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in records {
        let fields = [
            r.study_id.clone(),
            r.pub_year.to_string(),
            r.phase.to_string(),
            r.randomized.to_string(),
            r.blinding.to_string(),
            r.control_type.to_string(),
            r.therapy_line.to_string(),
            r.sample_size.to_string(),
            r.deaths.map(|d| d.to_string()).unwrap_or_default(),
            fmt_opt_f64(r.med_pfs_control),
            fmt_opt_f64(r.med_pfs_treatment),
            fmt_opt_f64(r.hr_pfs),
            fmt_opt_f64(r.pfs_p_value),
            fmt_opt_bool(r.pfs_significant_reported),
            fmt_opt_f64(r.hr_os),
            fmt_opt_f64(r.os_p_value),
            fmt_opt_bool(r.os_significant_reported),
            r.endpoint_is_ttp.to_string(),
        ];
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(out)
}

/// Significance of the OS effect in favor of the treatment.
///
/// A numeric p-value takes precedence over the reported flag; the comparison
/// must also not point against the treatment (hr_os < 1 when present).
fn significant(p_value: Option<f64>, reported: Option<bool>, hr: Option<f64>, alpha: f64) -> Result<bool> {
    let raw = match (p_value, reported) {
        (Some(p), _) => p < alpha,
        (None, Some(flag)) => flag,
        (None, None) => return Err(Error::LabelUnderivable),
    };
    Ok(raw && hr.map_or(true, |h| h < 1.0))
}

/// Compute the comparative PFS measures and the OS-significance label.
pub fn derive_measures(rec: &ComparisonRecord, alpha: f64) -> Result<DerivedMeasures> {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    let delta_med = match (rec.med_pfs_control, rec.med_pfs_treatment) {
        (Some(c), Some(t)) => Some(t - c),
        _ => None,
    };
    let pct_delta_med = match (delta_med, rec.med_pfs_control) {
        (Some(d), Some(c)) if c > 0.0 => Some(100.0 * d / c),
        _ => None,
    };
    Ok(DerivedMeasures {
        hr_pfs: rec.hr_pfs,
        delta_med,
        pct_delta_med,
        os_significant: significant(rec.os_p_value, rec.os_significant_reported, rec.hr_os, alpha)?,
    })
}

/// Significance of the PFS effect, when derivable; used for the PFS-vs-OS
/// cross table. Same precedence and direction rules as the OS label.
pub fn pfs_significant(rec: &ComparisonRecord, alpha: f64) -> Option<bool> {
    significant(rec.pfs_p_value, rec.pfs_significant_reported, rec.hr_pfs, alpha).ok()
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn numeric_summary(values: impl Iterator<Item = Option<f64>>) -> Option<NumericSummary> {
    let mut present: Vec<f64> = values.flatten().collect();
    if present.is_empty() {
        return None;
    }
    present.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(NumericSummary {
        n: present.len(),
        median: median_of_sorted(&present),
        min: present[0],
        max: *present.last().unwrap(),
    })
}

/// Table-2 style descriptive summary over the whole dataset.
pub fn summarize(records: &[ComparisonRecord]) -> Result<SummaryStats> {
    if records.is_empty() {
        return Err(Error::EmptyInput("summarize requires at least one record".to_string()));
    }
    let n = records.len();
    let derived: Vec<(Option<f64>, Option<f64>)> = records
        .iter()
        .map(|r| {
            let delta = match (r.med_pfs_control, r.med_pfs_treatment) {
                (Some(c), Some(t)) => Some(t - c),
                _ => None,
            };
            let pct = match (delta, r.med_pfs_control) {
                (Some(d), Some(c)) if c > 0.0 => Some(100.0 * d / c),
                _ => None,
            };
            (delta, pct)
        })
        .collect();

    let mut numeric = BTreeMap::new();
    let pairs: Vec<(&str, Vec<Option<f64>>)> = vec![
        ("sample_size", records.iter().map(|r| Some(r.sample_size as f64)).collect()),
        ("deaths", records.iter().map(|r| r.deaths.map(|d| d as f64)).collect()),
        ("med_pfs_control", records.iter().map(|r| r.med_pfs_control).collect()),
        ("med_pfs_treatment", records.iter().map(|r| r.med_pfs_treatment).collect()),
        ("hr_pfs", records.iter().map(|r| r.hr_pfs).collect()),
        ("hr_os", records.iter().map(|r| r.hr_os).collect()),
        ("delta_med", derived.iter().map(|d| d.0).collect()),
        ("pct_delta_med", derived.iter().map(|d| d.1).collect()),
    ];
    for (name, values) in pairs {
        if let Some(s) = numeric_summary(values.into_iter()) {
            numeric.insert(name.to_string(), s);
        }
    }

    let mut categorical = BTreeMap::new();
    let cat_pairs: Vec<(&str, Vec<String>)> = vec![
        ("phase", records.iter().map(|r| r.phase.to_string()).collect()),
        ("blinding", records.iter().map(|r| r.blinding.to_string()).collect()),
        ("control_type", records.iter().map(|r| r.control_type.to_string()).collect()),
        ("therapy_line", records.iter().map(|r| r.therapy_line.to_string()).collect()),
        ("randomized", records.iter().map(|r| r.randomized.to_string()).collect()),
    ];
    for (name, levels) in cat_pairs {
        let mut counts: BTreeMap<String, LevelCount> = BTreeMap::new();
        for level in levels {
            counts
                .entry(level)
                .or_insert(LevelCount { count: 0, percent: 0.0 })
                .count += 1;
        }
        for c in counts.values_mut() {
            c.percent = 100.0 * c.count as f64 / n as f64;
        }
        categorical.insert(name.to_string(), counts);
    }

    Ok(SummaryStats { n_records: n, numeric, categorical })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn minimal_row(study_id: &str) -> String {
        format!("{study_id},2012,iii,true,open,active,first,100,40,2.0,3.0,0.8,0.02,,0.9,0.30,,false")
    }

    fn header() -> String {
        CSV_COLUMNS.join(",")
    }

    #[test]
    fn parses_single_valid_row() {
        let csv = format!("{}\n{}\n", header(), minimal_row("S1"));
        let recs = parse_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].study_id, "S1");
        assert_eq!(recs[0].phase, Phase::Iii);
        assert_eq!(recs[0].deaths, Some(40));
    }

    #[test]
    fn empty_optional_cell_maps_to_absent() {
        let row = "S1,2012,iii,true,open,active,first,100,,2.0,3.0,0.8,,,0.9,0.30,,false";
        let csv = format!("{}\n{row}\n", header());
        let recs = parse_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].deaths, None);
        assert_eq!(recs[0].pfs_p_value, None);
    }

    #[test]
    fn non_numeric_cell_is_row_level_error() {
        let row = "S1,2012,iii,true,open,active,first,100,40,abc,3.0,0.8,0.02,,0.9,0.30,,false";
        let csv = format!("{}\n{row}\n", header());
        match parse_csv(csv.as_bytes()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "med_pfs_control");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_schema_error() {
        let csv = "study_id,pub_year\nS1,2012\n";
        match parse_csv(csv.as_bytes()) {
            Err(Error::Schema { column }) => assert_eq!(column, "phase"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn missing_label_sources_fail_validation() {
        let row = "S1,2012,iii,true,open,active,first,100,40,2.0,3.0,0.8,0.02,,0.9,,,false";
        let csv = format!("{}\n{row}\n", header());
        assert!(matches!(parse_csv(csv.as_bytes()), Err(Error::Validation { row: 1, .. })));
    }

    #[test]
    fn enums_parse_case_insensitively() {
        let row = "S1,2012,III,true,Open,Active,First,100,40,2.0,3.0,0.8,0.02,,0.9,0.30,,false";
        let csv = format!("{}\n{row}\n", header());
        let recs = parse_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].phase, Phase::Iii);
    }

    fn rec() -> ComparisonRecord {
        parse_csv(format!("{}\n{}\n", header(), minimal_row("S1")).as_bytes())
            .unwrap()
            .remove(0)
    }

    #[test]
    fn derive_direct_arithmetic() {
        let mut r = rec();
        r.med_pfs_control = Some(2.0);
        r.med_pfs_treatment = Some(3.0);
        let m = derive_measures(&r, 0.05).unwrap();
        assert_eq!(m.delta_med, Some(1.0));
        assert_eq!(m.pct_delta_med, Some(50.0));
    }

    #[test]
    fn derive_identity_case() {
        let mut r = rec();
        r.med_pfs_control = Some(4.0);
        r.med_pfs_treatment = Some(4.0);
        let m = derive_measures(&r, 0.05).unwrap();
        assert_eq!(m.delta_med, Some(0.0));
        assert_eq!(m.pct_delta_med, Some(0.0));
    }

    #[test]
    fn derive_negative_difference_matches_dataset_extremes() {
        // matches the published dataset minimums -0.50 months and -10.42 %
        let mut r = rec();
        r.med_pfs_control = Some(4.8);
        r.med_pfs_treatment = Some(4.3);
        let m = derive_measures(&r, 0.05).unwrap();
        assert!((m.delta_med.unwrap() - (-0.50)).abs() < 1e-12);
        assert!((m.pct_delta_med.unwrap() - (-10.416666666666666)).abs() < 1e-12);
        assert_eq!(format!("{:.2}", m.pct_delta_med.unwrap()), "-10.42");
    }

    #[test]
    fn significance_boundary_is_strict() {
        let mut r = rec();
        r.hr_os = Some(0.8);
        r.os_p_value = Some(0.049);
        assert!(derive_measures(&r, 0.05).unwrap().os_significant);
        r.os_p_value = Some(0.05);
        assert!(!derive_measures(&r, 0.05).unwrap().os_significant);
    }

    #[test]
    fn significance_requires_hr_os_in_favor() {
        let mut r = rec();
        r.os_p_value = Some(0.01);
        r.hr_os = Some(1.10);
        assert!(!derive_measures(&r, 0.05).unwrap().os_significant);
        r.hr_os = Some(0.70);
        assert!(derive_measures(&r, 0.05).unwrap().os_significant);
        r.hr_os = None;
        assert!(derive_measures(&r, 0.05).unwrap().os_significant);
    }

    #[test]
    fn p_value_beats_reported_flag() {
        let mut r = rec();
        r.os_p_value = Some(0.5);
        r.os_significant_reported = Some(true);
        assert!(!derive_measures(&r, 0.05).unwrap().os_significant);
    }

    #[test]
    fn label_error_when_no_source() {
        let mut r = rec();
        r.os_p_value = None;
        r.os_significant_reported = None;
        assert!(matches!(derive_measures(&r, 0.05), Err(Error::LabelUnderivable)));
    }

    #[test]
    fn summarize_median_conventions() {
        let mut recs = Vec::new();
        for (i, hr) in [1.0, 2.0, 3.0].iter().enumerate() {
            let mut r = rec();
            r.study_id = format!("S{i}");
            r.hr_os = Some(*hr);
            recs.push(r);
        }
        let s = summarize(&recs).unwrap();
        let hr = &s.numeric["hr_os"];
        assert_eq!((hr.median, hr.min, hr.max), (2.0, 1.0, 3.0));

        let mut r = rec();
        r.hr_os = Some(10.0);
        recs.push(r);
        let s = summarize(&recs).unwrap();
        assert_eq!(s.numeric["hr_os"].median, 2.5);
    }

    #[test]
    fn summarize_categorical_hand_count() {
        let phases = [Phase::Iii, Phase::Iii, Phase::Ii, Phase::Unknown];
        let recs: Vec<_> = phases
            .iter()
            .map(|p| {
                let mut r = rec();
                r.phase = *p;
                r
            })
            .collect();
        let s = summarize(&recs).unwrap();
        let iii = &s.categorical["phase"]["iii"];
        assert_eq!(iii.count, 2);
        assert_eq!(iii.percent, 50.0);
    }

    #[test]
    fn summarize_empty_is_error() {
        assert!(matches!(summarize(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn summarize_is_permutation_invariant() {
        let mut recs = Vec::new();
        for i in 0..7 {
            let mut r = rec();
            r.study_id = format!("S{i}");
            r.hr_pfs = Some(0.5 + 0.05 * i as f64);
            r.phase = if i % 2 == 0 { Phase::Ii } else { Phase::Iii };
            recs.push(r);
        }
        let a = serde_json::to_string(&summarize(&recs).unwrap()).unwrap();
        recs.reverse();
        recs.swap(1, 4);
        let b = serde_json::to_string(&summarize(&recs).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pct_delta_consistency_property() {
        for (c, t) in [(2.0, 3.0), (4.8, 4.3), (0.7, 9.9), (3.3, 3.3)] {
            let mut r = rec();
            r.med_pfs_control = Some(c);
            r.med_pfs_treatment = Some(t);
            let m = derive_measures(&r, 0.05).unwrap();
            let (d, p) = (m.delta_med.unwrap(), m.pct_delta_med.unwrap());
            assert!((p * c / 100.0 - d).abs() <= 1e-12 * d.abs().max(1.0));
        }
    }
}
