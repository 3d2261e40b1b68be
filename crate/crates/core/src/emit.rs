//! Plain-text artifact emitters: ROC CSV/SVG, tree DOT, importance CSV and
//! the Table-2 style console summary.

use std::fmt::Write as _;

use crate::cart::{Tree, TreeNode};
use crate::dataset::SummaryStats;
use crate::ensemble::ImportanceReport;
use crate::roc::RocCurve;

fn fmt_threshold(t: f64) -> String {
    if t.is_infinite() {
        return if t > 0.0 { "inf".to_string() } else { "-inf".to_string() };
    }
    let s = format!("{t:.2}");
    s.strip_suffix(".00").map(|p| p.to_string()).unwrap_or(s)
}

pub fn roc_points_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in &curve.points {
        let thr = if p.threshold.is_infinite() {
            if p.threshold > 0.0 { "inf".to_string() } else { "-inf".to_string() }
        } else {
            format!("{}", p.threshold)
        };
        let _ = writeln!(out, "{},{},{}", thr, p.fpr, p.tpr);
    }
    out
}

/// Hand-emitted 640x640 ROC plot: axes at 10% margins, the chance diagonal,
/// the empirical polyline and an AUC annotation.
pub fn roc_svg(curve: &RocCurve, title: &str) -> String {
    const SIZE: f64 = 640.0;
    const MARGIN: f64 = 64.0;
    let span = SIZE - 2.0 * MARGIN;
    let x = |fpr: f64| MARGIN + fpr * span;
    let y = |tpr: f64| SIZE - MARGIN - tpr * span;

    let polyline: Vec<String> = curve
        .points
        .iter()
        .map(|p| format!("{:.2},{:.2}", x(p.fpr), y(p.tpr)))
        .collect();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SIZE} {SIZE}\" width=\"{SIZE}\" height=\"{SIZE}\">"
    );
    let _ = writeln!(svg, "  <rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>");
    // axes
    let _ = writeln!(
        svg,
        "  <line x1=\"{m}\" y1=\"{b}\" x2=\"{e}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = SIZE - MARGIN,
        e = SIZE - MARGIN
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = SIZE - MARGIN
    );
    // chance diagonal
    let _ = writeln!(
        svg,
        "  <line x1=\"{m}\" y1=\"{b}\" x2=\"{e}\" y2=\"{m}\" stroke=\"grey\" stroke-dasharray=\"6 4\"/>",
        m = MARGIN,
        b = SIZE - MARGIN,
        e = SIZE - MARGIN
    );
    let _ = writeln!(
        svg,
        "  <polyline points=\"{}\" fill=\"none\" stroke=\"crimson\" stroke-width=\"2\"/>",
        polyline.join(" ")
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"18\">{} (AUC = {:.2})</text>",
        MARGIN + 12.0,
        MARGIN + 24.0,
        title,
        curve.auc
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\">false positive rate</text>",
        SIZE / 2.0 - 60.0,
        SIZE - MARGIN / 2.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 {} {})\">true positive rate</text>",
        MARGIN / 2.0,
        SIZE / 2.0 + 50.0,
        MARGIN / 2.0,
        SIZE / 2.0 + 50.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Graphviz rendering of a fitted tree: split rules on internal nodes,
/// threshold comparisons on the edges, leaf counts as "positives/total".
pub fn tree_dot(tree: &Tree) -> String {
    fn label_suffix(feature: &str) -> &'static str {
        if feature == "pct_delta_med" { "%" } else { "" }
    }

    fn walk(node: &TreeNode, tree: &Tree, id: &mut usize, out: &mut String) -> usize {
        let my_id = *id;
        *id += 1;
        match &node.split {
            None => {
                let _ = writeln!(
                    out,
                    "  n{my_id} [shape=box, label=\"significant HR_OS: {}/{}\"];",
                    node.class_counts.pos,
                    node.class_counts.total()
                );
            }
            Some(s) => {
                let feature = &tree.feature_names[s.rule.feature_index];
                let thr = fmt_threshold(s.rule.threshold);
                let sfx = label_suffix(feature);
                let _ = writeln!(out, "  n{my_id} [label=\"{feature}\"];");
                let left = walk(&s.left, tree, id, out);
                let right = walk(&s.right, tree, id, out);
                let _ = writeln!(out, "  n{my_id} -> n{left} [label=\"< {thr}{sfx}\"];");
                let _ = writeln!(out, "  n{my_id} -> n{right} [label=\"≥ {thr}{sfx}\"];");
            }
        }
        my_id
    }

    let mut out = String::from("digraph classification_tree {\n  node [fontname=\"sans-serif\"];\n");
    let mut id = 0;
    walk(&tree.root, tree, &mut id, &mut out);
    out.push_str("}\n");
    out
}

pub fn importance_csv(report: &ImportanceReport) -> String {
    let mut out = String::from("feature,score,rank\n");
    for f in &report.features {
        let _ = writeln!(out, "{},{},{}", f.name, f.score, f.rank);
    }
    out
}

/// Console rendering of the dataset summary in "Median (Min, Max)" layout.
pub fn summary_text(stats: &SummaryStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Summary of {} comparisons", stats.n_records);
    for (name, levels) in &stats.categorical {
        let _ = writeln!(out, "{name} -- n(%)");
        for (level, c) in levels {
            let _ = writeln!(out, "  {level}: {} ({:.1}%)", c.count, c.percent);
        }
    }
    for (name, s) in &stats.numeric {
        let _ = writeln!(out, "{name} (n={})", s.n);
        let _ = writeln!(out, "  Median (Min, Max): {:.2} ({:.2}, {:.2})", s.median, s.min, s.max);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roc::{roc_curve, MarkerOrientation};

    fn sample_curve() -> RocCurve {
        roc_curve(
            &[Some(1.0), Some(3.0), Some(0.0), Some(2.0)],
            &[true, true, false, false],
            MarkerOrientation::HigherPredictsPositive,
        )
        .unwrap()
    }

    #[test]
    fn roc_csv_has_header_and_sentinels() {
        let csv = roc_points_csv(&sample_curve());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "threshold,fpr,tpr");
        assert_eq!(lines[1], "inf,0,0");
        assert_eq!(*lines.last().unwrap(), "-inf,1,1");
    }

    #[test]
    fn svg_contains_polyline_and_auc() {
        let svg = roc_svg(&sample_curve(), "pct_delta_med");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("AUC = 0.75"));
    }

    #[test]
    fn dot_renders_fixture_tree() {
        let m = crate::cart::test_fixture::reference_matrix();
        let tree = crate::cart::fit_tree(&m, &crate::cart::CartConfig::default()).unwrap();
        let dot = tree_dot(&tree);
        assert!(dot.contains("pct_delta_med"));
        assert!(dot.contains("< 48.27%"));
        assert!(dot.contains("≥ 227"));
        assert!(dot.contains("significant HR_OS: 3/39"));
        assert!(dot.contains("significant HR_OS: 6/7"));
    }
}
