//! Binary classification trees: exhaustive midpoint search over continuous
//! predictors, Gini impurity, cost-complexity pruning and a majority-direction
//! policy for missing values.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    /// Index into the source record list.
    pub id: usize,
    pub values: Vec<Option<f64>>,
    pub label: bool,
}

/// Rows x features design matrix with one optional value slot per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn new(feature_names: Vec<String>, rows: Vec<FeatureRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("feature matrix needs at least one row".to_string()));
        }
        for row in &rows {
            if row.values.len() != feature_names.len() {
                return Err(Error::Dimension(format!(
                    "row {} has {} values for {} features",
                    row.id,
                    row.values.len(),
                    feature_names.len()
                )));
            }
        }
        Ok(Self { feature_names, rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    Listwise,
    MajorityDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CartConfig {
    pub min_split: usize,
    pub min_leaf: usize,
    pub max_depth: usize,
    pub cp: f64,
    pub missing_policy: MissingPolicy,
}

impl Default for CartConfig {
    fn default() -> Self {
        Self {
            min_split: 10,
            min_leaf: 5,
            max_depth: 5,
            cp: 0.01,
            missing_policy: MissingPolicy::MajorityDirection,
        }
    }
}

/// Rule: value >= threshold goes right; rows with a missing value follow
/// `missing_goes_right` (majority-direction policy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Split {
    pub feature_index: usize,
    pub threshold: f64,
    pub gain: f64,
    pub missing_goes_right: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub neg: usize,
    pub pos: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.neg + self.pos
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    pub class_counts: ClassCounts,
    pub predicted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<Box<SplitNode>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitNode {
    pub rule: Split,
    /// Non-missing rows seen by the split search; pruning weight.
    pub n_split: usize,
    pub left: TreeNode,
    pub right: TreeNode,
}

/// A fitted tree plus the feature names it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tree {
    pub feature_names: Vec<String>,
    pub config: CartConfig,
    pub root: TreeNode,
}

/// Gini impurity 1 - p_neg^2 - p_pos^2.
pub fn gini(counts: ClassCounts) -> Result<f64> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::EmptyInput("gini of an empty node is undefined".to_string()));
    }
    let pn = counts.neg as f64 / n as f64;
    let pp = counts.pos as f64 / n as f64;
    Ok(1.0 - pn * pn - pp * pp)
}

fn counts_of<'a>(labels: impl Iterator<Item = &'a bool>) -> ClassCounts {
    let mut c = ClassCounts { neg: 0, pos: 0 };
    for &l in labels {
        if l {
            c.pos += 1;
        } else {
            c.neg += 1;
        }
    }
    c
}

/// Best admissible split of `rows` on one feature, or None.
///
/// Every midpoint between adjacent distinct present values is evaluated; the
/// gain is the impurity decrease over non-missing rows with child-fraction
/// weights, and both children must hold at least `min_leaf` non-missing rows.
pub fn best_split(
    matrix: &FeatureMatrix,
    row_indices: &[usize],
    feature_index: usize,
    config: &CartConfig,
) -> Option<Split> {
    let mut present: Vec<(f64, bool)> = row_indices
        .iter()
        .filter_map(|&i| {
            let row = &matrix.rows[i];
            row.values[feature_index].map(|v| (v, row.label))
        })
        .collect();
    if present.len() < 2 {
        return None;
    }
    present.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total = counts_of(present.iter().map(|(_, l)| l));
    let n = present.len() as f64;
    let parent = gini(total).expect("non-empty");

    let mut best: Option<Split> = None;
    let mut left = ClassCounts { neg: 0, pos: 0 };
    for i in 0..present.len() - 1 {
        if present[i].1 {
            left.pos += 1;
        } else {
            left.neg += 1;
        }
        if present[i].0 == present[i + 1].0 {
            continue;
        }
        let right = ClassCounts {
            neg: total.neg - left.neg,
            pos: total.pos - left.pos,
        };
        if left.total() < config.min_leaf || right.total() < config.min_leaf {
            continue;
        }
        let threshold = (present[i].0 + present[i + 1].0) / 2.0;
        let weighted = (left.total() as f64 / n) * gini(left).unwrap()
            + (right.total() as f64 / n) * gini(right).unwrap();
        let gain = parent - weighted;
        if gain <= 0.0 {
            continue;
        }
        // ties keep the smaller threshold (first seen in ascending order)
        if best.as_ref().map_or(true, |b| gain > b.gain) {
            best = Some(Split {
                feature_index,
                threshold,
                gain,
                missing_goes_right: right.total() > left.total(),
            });
        }
    }
    best
}

fn grow(matrix: &FeatureMatrix, rows: &[usize], depth: usize, config: &CartConfig) -> TreeNode {
    let counts = counts_of(rows.iter().map(|&i| &matrix.rows[i].label));
    let predicted = counts.pos > counts.neg;
    let leaf = TreeNode { class_counts: counts, predicted, split: None };
    if counts.neg == 0 || counts.pos == 0 || rows.len() < config.min_split || depth >= config.max_depth {
        return leaf;
    }

    let mut chosen: Option<Split> = None;
    for fi in 0..matrix.feature_names.len() {
        if let Some(s) = best_split(matrix, rows, fi, config) {
            let better = match &chosen {
                None => true,
                // argmax gain; ties: lower feature index, then smaller threshold
                Some(c) => {
                    s.gain > c.gain
                        || (s.gain == c.gain
                            && (s.feature_index < c.feature_index
                                || (s.feature_index == c.feature_index && s.threshold < c.threshold)))
                }
            };
            if better {
                chosen = Some(s);
            }
        }
    }
    let Some(split) = chosen else { return leaf };

    let mut left_rows = Vec::new();
    let mut right_rows = Vec::new();
    let mut n_split = 0usize;
    for &i in rows {
        match matrix.rows[i].values[split.feature_index] {
            Some(v) => {
                n_split += 1;
                if v >= split.threshold {
                    right_rows.push(i);
                } else {
                    left_rows.push(i);
                }
            }
            None => match config.missing_policy {
                MissingPolicy::MajorityDirection => {
                    if split.missing_goes_right {
                        right_rows.push(i);
                    } else {
                        left_rows.push(i);
                    }
                }
                MissingPolicy::Listwise => {}
            },
        }
    }

    TreeNode {
        class_counts: counts,
        predicted,
        split: Some(Box::new(SplitNode {
            rule: split,
            n_split,
            left: grow(matrix, &left_rows, depth + 1, config),
            right: grow(matrix, &right_rows, depth + 1, config),
        })),
    }
}

fn subtree_stats(node: &TreeNode, n_root: f64) -> (f64, usize) {
    match &node.split {
        None => (0.0, 0),
        Some(s) => {
            let (lg, ln) = subtree_stats(&s.left, n_root);
            let (rg, rn) = subtree_stats(&s.right, n_root);
            (lg + rg + (s.n_split as f64 / n_root) * s.rule.gain, ln + rn + 1)
        }
    }
}

/// Preorder scan for the internal node with the lowest per-split
/// impurity-decrease rate; first occurrence wins ties.
fn find_weakest(node: &TreeNode, n_root: f64, idx: &mut usize) -> Option<(f64, usize)> {
    let s = node.split.as_ref()?;
    let my_idx = *idx;
    *idx += 1;
    let (total, n_splits) = subtree_stats(node, n_root);
    let mut weakest = (total / n_splits as f64, my_idx);
    for child in [&s.left, &s.right] {
        if let Some(c) = find_weakest(child, n_root, idx) {
            if c.0 < weakest.0 {
                weakest = c;
            }
        }
    }
    Some(weakest)
}

fn collapse_at(node: &mut TreeNode, target: usize, idx: &mut usize) -> bool {
    if node.split.is_none() {
        return false;
    }
    let my_idx = *idx;
    *idx += 1;
    if my_idx == target {
        node.split = None;
        return true;
    }
    let s = node.split.as_mut().unwrap();
    collapse_at(&mut s.left, target, idx) || collapse_at(&mut s.right, target, idx)
}

fn prune(root: &mut TreeNode, root_gini: f64, cp: f64) {
    if root_gini <= 0.0 {
        return;
    }
    let n_root = root.class_counts.total() as f64;
    loop {
        let Some((rate, target)) = find_weakest(root, n_root, &mut 0) else { return };
        if rate / root_gini < cp {
            collapse_at(root, target, &mut 0);
        } else {
            return;
        }
    }
}

/// Grow a tree by recursive argmax-gain splitting, then apply weakest-link
/// cost-complexity pruning with parameter `cp`.
pub fn fit_tree(matrix: &FeatureMatrix, config: &CartConfig) -> Result<Tree> {
    if matrix.rows.is_empty() {
        return Err(Error::EmptyInput("cannot fit a tree on an empty matrix".to_string()));
    }
    if matrix.feature_names.is_empty() {
        return Err(Error::EmptyInput("cannot fit a tree without features".to_string()));
    }
    let all: Vec<usize> = (0..matrix.rows.len()).collect();
    let mut root = grow(matrix, &all, 0, config);
    let root_gini = gini(root.class_counts)?;
    prune(&mut root, root_gini, config.cp);
    Ok(Tree {
        feature_names: matrix.feature_names.clone(),
        config: *config,
        root,
    })
}

/// Route one row to a leaf; returns the leaf majority class and its
/// positive-class fraction.
pub fn predict(tree: &Tree, row: &[Option<f64>]) -> Result<(bool, f64)> {
    if row.len() != tree.feature_names.len() {
        return Err(Error::Dimension(format!(
            "row has {} values for {} features",
            row.len(),
            tree.feature_names.len()
        )));
    }
    let mut node = &tree.root;
    while let Some(s) = &node.split {
        let goes_right = match row[s.rule.feature_index] {
            Some(v) => v >= s.rule.threshold,
            None => s.rule.missing_goes_right,
        };
        node = if goes_right { &s.right } else { &s.left };
    }
    let c = node.class_counts;
    Ok((node.predicted, c.pos as f64 / c.total() as f64))
}

#[cfg(test)]
pub(crate) mod test_fixture {
    use super::*;

    /// The 58-row fixture: two informative features (pct_delta_med, deaths)
    /// among five, constructed so exhaustive split search recovers the
    /// pct@48.27 / deaths@227 topology with leaf counts 36/3, 7/5, 1/6.
    pub fn reference_matrix() -> FeatureMatrix {
        // (n_neg, n_pos, med_c, med_t, deaths)
        let groups = [
            (18usize, 1usize, 5.0, 6.5, 250.0),
            (18, 2, 10.0, 13.0, 250.0),
            (7, 5, 2.5, 4.1635, 224.0),
            (1, 6, 2.5, 4.1635, 230.0),
        ];
        let names = ["hr_pfs", "delta_med", "pct_delta_med", "sample_size", "deaths"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut rows = Vec::new();
        for &(n_neg, n_pos, c, t, deaths) in &groups {
            let delta = t - c;
            let pct = 100.0 * delta / c;
            for k in 0..n_neg + n_pos {
                rows.push(FeatureRow {
                    id: rows.len(),
                    values: vec![Some(0.80), Some(delta), Some(pct), Some(259.0), Some(deaths)],
                    label: k >= n_neg,
                });
            }
        }
        FeatureMatrix::new(names, rows).unwrap()
    }
}
