//! Assembles the full surrogacy analysis into one structured, canonically
//! serializable report.

use serde::Serialize;

use crate::cart::{self, CartConfig, FeatureMatrix, FeatureRow, MissingPolicy, Tree, TreeNode};
use crate::dataset::{self, ComparisonRecord, DerivedMeasures, SummaryStats};
use crate::diagnostics::{self, ConfusionTable};
use crate::ensemble::{self, BaggingConfig, ImportanceReport};
use crate::error::{Error, Result};
use crate::roc::{self, MarkerOrientation, RocCurve, YoudenPoint};

/// The three comparative PFS measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    HrPfs,
    DeltaMed,
    PctDeltaMed,
}

pub const ALL_MEASURES: [Measure; 3] = [Measure::HrPfs, Measure::DeltaMed, Measure::PctDeltaMed];

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::HrPfs => "hr_pfs",
            Measure::DeltaMed => "delta_med",
            Measure::PctDeltaMed => "pct_delta_med",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hr_pfs" => Some(Measure::HrPfs),
            "delta_med" => Some(Measure::DeltaMed),
            "pct_delta_med" => Some(Measure::PctDeltaMed),
            _ => None,
        }
    }

    /// A lower hazard ratio means a larger benefit; the difference measures
    /// point the other way.
    pub fn orientation(&self) -> MarkerOrientation {
        match self {
            Measure::HrPfs => MarkerOrientation::LowerPredictsPositive,
            _ => MarkerOrientation::HigherPredictsPositive,
        }
    }

    pub fn extract(&self, d: &DerivedMeasures) -> Option<f64> {
        match self {
            Measure::HrPfs => d.hr_pfs,
            Measure::DeltaMed => d.delta_med,
            Measure::PctDeltaMed => d.pct_delta_med,
        }
    }
}

/// Default partitioning variables for the tree and ensemble sections.
pub const TREE_FEATURES: [&str; 5] = ["hr_pfs", "delta_med", "pct_delta_med", "sample_size", "deaths"];

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub input_digest: Option<String>,
    pub tool_version: String,
    pub seed: u64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossTableSection {
    pub n_used: usize,
    pub table: ConfusionTable,
    /// Absent when a zero cell makes the ratio undefined and no Haldane
    /// correction was requested.
    pub odds_ratio: Option<f64>,
    pub haldane: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureSection {
    pub measure: Measure,
    pub n_used: usize,
    pub auc: f64,
    pub youden: YoudenPoint,
    pub curve: RocCurve,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeSection {
    pub missing_policy: MissingPolicy,
    pub n_used: usize,
    pub tree: Tree,
}

#[derive(Debug, Clone, Serialize)]
pub struct SteThreshold {
    pub feature: String,
    pub threshold: f64,
}

/// Surrogate-threshold-effect summary: the Youden cutoffs per measure and the
/// split path leading to the leaf with the highest positive rate.
#[derive(Debug, Clone, Serialize)]
pub struct SteSummary {
    pub roc_thresholds: Vec<(String, f64)>,
    pub tree_thresholds: Vec<SteThreshold>,
    /// "positives/total" per leaf, preorder.
    pub leaf_narrative: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub dataset_summary: SummaryStats,
    pub cross_table: Option<CrossTableSection>,
    pub roc: Vec<MeasureSection>,
    pub tree: TreeSection,
    /// Listwise re-run, emitted when the configured policy keeps rows with
    /// missing partitioning values (mirrors the published 74- vs 58-case runs).
    pub tree_listwise: Option<TreeSection>,
    pub importance: ImportanceReport,
    pub cart_config: CartConfig,
    pub bagging_config: BaggingConfig,
    pub ste: SteSummary,
}

pub struct AnalysisOptions<'a> {
    pub alpha: f64,
    pub cart: CartConfig,
    pub bagging: BaggingConfig,
    pub measures: &'a [Measure],
    pub features: Vec<String>,
    pub haldane: bool,
    pub input_digest: Option<String>,
    pub parallel: bool,
}

impl<'a> AnalysisOptions<'a> {
    pub fn new(seed: u64) -> Self {
        Self {
            alpha: 0.05,
            cart: CartConfig::default(),
            bagging: BaggingConfig::new(seed),
            measures: &ALL_MEASURES,
            features: TREE_FEATURES.iter().map(|s| s.to_string()).collect(),
            haldane: false,
            input_digest: None,
            parallel: true,
        }
    }
}

fn feature_value(name: &str, rec: &ComparisonRecord, d: &DerivedMeasures) -> Option<f64> {
    match name {
        "hr_pfs" => d.hr_pfs,
        "delta_med" => d.delta_med,
        "pct_delta_med" => d.pct_delta_med,
        "sample_size" => Some(rec.sample_size as f64),
        "deaths" => rec.deaths.map(|v| v as f64),
        _ => None,
    }
}

pub fn build_feature_matrix(
    records: &[ComparisonRecord],
    derived: &[DerivedMeasures],
    features: &[String],
    listwise: bool,
) -> Result<FeatureMatrix> {
    let mut rows = Vec::new();
    for (i, (rec, d)) in records.iter().zip(derived).enumerate() {
        let values: Vec<Option<f64>> = features.iter().map(|f| feature_value(f, rec, d)).collect();
        if listwise && values.iter().any(|v| v.is_none()) {
            continue;
        }
        rows.push(FeatureRow { id: i, values, label: d.os_significant });
    }
    FeatureMatrix::new(features.to_vec(), rows)
}

fn highest_positive_leaf_path(tree: &Tree) -> Vec<SteThreshold> {
    fn best_rate(node: &TreeNode) -> f64 {
        match &node.split {
            None => node.class_counts.pos as f64 / node.class_counts.total() as f64,
            Some(s) => best_rate(&s.left).max(best_rate(&s.right)),
        }
    }
    let mut path = Vec::new();
    let mut node = &tree.root;
    while let Some(s) = &node.split {
        path.push(SteThreshold {
            feature: tree.feature_names[s.rule.feature_index].clone(),
            threshold: s.rule.threshold,
        });
        // ties toward the left child keep the walk deterministic
        node = if best_rate(&s.right) > best_rate(&s.left) { &s.right } else { &s.left };
    }
    path
}

fn leaf_narrative(node: &TreeNode, out: &mut Vec<String>) {
    match &node.split {
        None => out.push(format!("{}/{}", node.class_counts.pos, node.class_counts.total())),
        Some(s) => {
            leaf_narrative(&s.left, out);
            leaf_narrative(&s.right, out);
        }
    }
}

/// Run the whole pipeline: derive, summarize, cross-table, per-measure
/// ROC/Youden, tree, bagging importance and the STE summary.
pub fn run_analysis(records: &[ComparisonRecord], opts: &AnalysisOptions) -> Result<AnalysisReport> {
    if records.len() < 2 {
        return Err(Error::EmptyInput("analysis requires at least two records".to_string()).in_stage("derive"));
    }
    if opts.measures.is_empty() {
        return Err(Error::EmptyInput("at least one measure must be selected".to_string()).in_stage("roc"));
    }

    let derived: Vec<DerivedMeasures> = records
        .iter()
        .map(|r| dataset::derive_measures(r, opts.alpha))
        .collect::<Result<_>>()
        .map_err(|e| e.in_stage("derive"))?;
    let labels: Vec<bool> = derived.iter().map(|d| d.os_significant).collect();

    let dataset_summary = dataset::summarize(records).map_err(|e| e.in_stage("summarize"))?;

    let mut pred = Vec::new();
    let mut actual = Vec::new();
    for (rec, d) in records.iter().zip(&derived) {
        if let Some(p) = dataset::pfs_significant(rec, opts.alpha) {
            pred.push(p);
            actual.push(d.os_significant);
        }
    }
    let cross_table = if pred.is_empty() {
        None
    } else {
        let table = diagnostics::cross_table(&pred, &actual).map_err(|e| e.in_stage("cross_table"))?;
        let odds_ratio = match diagnostics::odds_ratio(&table, opts.haldane) {
            Ok(v) => Some(v),
            Err(Error::UndefinedOddsRatio(_)) => None,
            Err(e) => return Err(e.in_stage("cross_table")),
        };
        Some(CrossTableSection { n_used: pred.len(), table, odds_ratio, haldane: opts.haldane })
    };

    let mut roc_sections = Vec::new();
    for m in opts.measures {
        let markers: Vec<Option<f64>> = derived.iter().map(|d| m.extract(d)).collect();
        let curve = roc::roc_curve(&markers, &labels, m.orientation()).map_err(|e| e.in_stage("roc"))?;
        let youden = roc::youden(&curve).map_err(|e| e.in_stage("roc"))?;
        roc_sections.push(MeasureSection {
            measure: *m,
            n_used: curve.n_pos + curve.n_neg,
            auc: curve.auc,
            youden,
            curve,
        });
    }

    let listwise_requested = opts.cart.missing_policy == MissingPolicy::Listwise;
    let main_matrix = build_feature_matrix(records, &derived, &opts.features, listwise_requested)
        .map_err(|e| e.in_stage("tree"))?;
    let main_tree = cart::fit_tree(&main_matrix, &opts.cart).map_err(|e| e.in_stage("tree"))?;
    let tree_section = TreeSection {
        missing_policy: opts.cart.missing_policy,
        n_used: main_matrix.rows.len(),
        tree: main_tree,
    };

    let has_missing = !listwise_requested
        && main_matrix.rows.iter().any(|r| r.values.iter().any(|v| v.is_none()));
    let tree_listwise = if has_missing {
        let lw_matrix = build_feature_matrix(records, &derived, &opts.features, true).map_err(|e| e.in_stage("tree"))?;
        let lw_config = CartConfig { missing_policy: MissingPolicy::Listwise, ..opts.cart };
        let lw_tree = cart::fit_tree(&lw_matrix, &lw_config).map_err(|e| e.in_stage("tree"))?;
        Some(TreeSection {
            missing_policy: MissingPolicy::Listwise,
            n_used: lw_matrix.rows.len(),
            tree: lw_tree,
        })
    } else {
        None
    };

    let mut bagging = opts.bagging;
    bagging.base = opts.cart;
    let forest = ensemble::fit_bagging_with(&main_matrix, &bagging, opts.parallel)
        .map_err(|e| e.in_stage("ensemble"))?;
    let importance = ensemble::importance(&forest, &main_matrix, bagging.importance_method)
        .map_err(|e| e.in_stage("ensemble"))?;

    let ste_tree = tree_listwise.as_ref().unwrap_or(&tree_section);
    let mut narrative = Vec::new();
    leaf_narrative(&ste_tree.tree.root, &mut narrative);
    let ste = SteSummary {
        roc_thresholds: roc_sections
            .iter()
            .map(|s| (s.measure.name().to_string(), s.youden.threshold))
            .collect(),
        tree_thresholds: highest_positive_leaf_path(&ste_tree.tree),
        leaf_narrative: narrative,
    };

    Ok(AnalysisReport {
        provenance: Provenance {
            input_digest: opts.input_digest.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: bagging.seed,
            alpha: opts.alpha,
        },
        dataset_summary,
        cross_table,
        roc: roc_sections,
        tree: tree_section,
        tree_listwise,
        importance,
        cart_config: opts.cart,
        bagging_config: bagging,
        ste,
    })
}

/// Round to 6 significant digits; canonical report precision.
pub fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap()
}

fn round_value(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                Value::Number(n)
            } else {
                match n.as_f64().map(round_sig6).and_then(serde_json::Number::from_f64) {
                    Some(r) => Value::Number(r),
                    None => Value::Null,
                }
            }
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Canonical JSON: sorted keys, floats at 6 significant digits, non-finite
/// numbers as null. Identical inputs yield byte-identical output.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)
        .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
    let mut s = serde_json::to_string_pretty(&round_value(v))
        .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_csv;

    fn toy_csv() -> String {
        let header = crate::dataset::CSV_COLUMNS.join(",");
        // two clear positives (high pct, low hr_os p) and two negatives
        let rows = [
            "S1,2010,iii,true,open,active,first,200,100,2.0,4.0,0.5,0.01,,0.7,0.01,,false",
            "S2,2011,iii,true,open,active,first,220,110,2.0,3.6,0.6,0.02,,0.7,0.02,,false",
            "S3,2012,ii,true,blinded,placebo,second_plus,180,90,3.0,3.3,0.9,0.40,,0.95,0.60,,false",
            "S4,2013,iii,false,open,active,first,210,105,3.0,3.0,1.0,0.80,,1.0,0.90,,false",
        ];
        format!("{header}\n{}\n", rows.join("\n"))
    }

    fn toy_opts(seed: u64) -> AnalysisOptions<'static> {
        let mut opts = AnalysisOptions::new(seed);
        opts.cart = CartConfig { min_split: 2, min_leaf: 1, ..CartConfig::default() };
        opts.bagging.n_trees = 20;
        opts
    }

    #[test]
    fn toy_report_populates_all_sections() {
        let records = parse_csv(toy_csv().as_bytes()).unwrap();
        let report = run_analysis(&records, &toy_opts(1)).unwrap();
        assert_eq!(report.dataset_summary.n_records, 4);
        let ct = report.cross_table.as_ref().unwrap();
        assert_eq!(ct.n_used, 4);
        assert_eq!((ct.table.tp, ct.table.tn), (2, 2));
        assert_eq!(report.roc.len(), 3);
        for s in &report.roc {
            assert_eq!(s.n_used, 4);
            assert_eq!(s.auc, 1.0); // toy set is separable under every measure
        }
        assert_eq!(report.tree.n_used, 4);
        assert!(report.tree_listwise.is_none()); // no missing values
        assert_eq!(report.importance.features.len(), 5);
        assert_eq!(report.ste.roc_thresholds.len(), 3);
    }

    #[test]
    fn missing_pfs_significance_drops_cross_table() {
        let mut records = parse_csv(toy_csv().as_bytes()).unwrap();
        for r in &mut records {
            r.pfs_p_value = None;
            r.pfs_significant_reported = None;
        }
        let report = run_analysis(&records, &toy_opts(1)).unwrap();
        assert!(report.cross_table.is_none());
        assert_eq!(report.roc.len(), 3);
    }

    #[test]
    fn missing_deaths_triggers_listwise_companion_run() {
        let mut records = parse_csv(toy_csv().as_bytes()).unwrap();
        records[0].deaths = None;
        let report = run_analysis(&records, &toy_opts(1)).unwrap();
        assert_eq!(report.tree.n_used, 4);
        let lw = report.tree_listwise.as_ref().unwrap();
        assert_eq!(lw.n_used, 3);
        assert_eq!(lw.missing_policy, MissingPolicy::Listwise);
    }

    #[test]
    fn canonical_json_is_reproducible() {
        let records = parse_csv(toy_csv().as_bytes()).unwrap();
        let a = canonical_json(&run_analysis(&records, &toy_opts(7)).unwrap()).unwrap();
        let b = canonical_json(&run_analysis(&records, &toy_opts(7)).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"seed\": 7"));
    }

    #[test]
    fn round_sig6_behaviour() {
        assert_eq!(round_sig6(0.0), 0.0);
        assert_eq!(round_sig6(1.0 / 3.0), 0.333333);
        assert_eq!(round_sig6(123456789.0), 123457000.0);
        assert_eq!(round_sig6(-10.416666666), -10.4167);
    }

    #[test]
    fn error_names_failing_stage() {
        let mut records = parse_csv(toy_csv().as_bytes()).unwrap();
        for r in &mut records {
            r.os_p_value = Some(0.9); // all labels negative
        }
        match run_analysis(&records, &toy_opts(1)) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "roc"),
            other => panic!("expected staged error, got {other:?}"),
        }
    }
}
