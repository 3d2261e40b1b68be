//! Bagged classification trees with out-of-bag error and variable importance.
//!
//! All randomness derives from counter-based ChaCha streams keyed by
//! (seed, tree index) so serial and concurrent fits produce identical output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cart::{self, CartConfig, FeatureMatrix, Tree};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMethod {
    PermutationOob,
    MeanDecreaseGini,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaggingConfig {
    pub n_trees: usize,
    pub seed: u64,
    pub sample_fraction: f64,
    pub importance_method: ImportanceMethod,
    pub base: CartConfig,
}

impl BaggingConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            n_trees: 500,
            seed,
            sample_fraction: 1.0,
            importance_method: ImportanceMethod::PermutationOob,
            base: CartConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaggedTree {
    pub tree: Tree,
    /// Row indices drawn into the bootstrap sample (with multiplicity).
    pub in_bag: Vec<usize>,
    /// Rows never drawn; this tree's out-of-bag set, ascending.
    pub oob: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<BaggedTree>,
    pub config: BaggingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureImportance {
    pub name: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceReport {
    pub features: Vec<FeatureImportance>,
    pub method: ImportanceMethod,
    pub n_trees: usize,
    pub seed: u64,
}

fn bag_rng(seed: u64, tree_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_index);
    rng
}

fn perm_rng(config: &BaggingConfig, tree_index: u64, feature: u64, n_features: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // streams 0..n_trees are reserved for bag draws
    rng.set_stream(config.n_trees as u64 + tree_index * n_features + feature);
    rng
}

fn fit_one(matrix: &FeatureMatrix, config: &BaggingConfig, t: usize) -> Result<BaggedTree> {
    let n = matrix.rows.len();
    let bag_size = (config.sample_fraction * n as f64).ceil() as usize;
    let mut rng = bag_rng(config.seed, t as u64);
    let in_bag: Vec<usize> = (0..bag_size).map(|_| rng.gen_range(0..n)).collect();

    let mut drawn = vec![false; n];
    for &i in &in_bag {
        drawn[i] = true;
    }
    let oob: Vec<usize> = (0..n).filter(|&i| !drawn[i]).collect();

    let rows = in_bag.iter().map(|&i| matrix.rows[i].clone()).collect();
    let bag_matrix = FeatureMatrix::new(matrix.feature_names.clone(), rows)?;
    let tree = cart::fit_tree(&bag_matrix, &config.base)?;
    Ok(BaggedTree { tree, in_bag, oob })
}

/// Fit `config.n_trees` trees on bootstrap samples. `parallel` only affects
/// wall-clock time; the forest is identical either way.
pub fn fit_bagging_with(matrix: &FeatureMatrix, config: &BaggingConfig, parallel: bool) -> Result<Forest> {
    let labels: Vec<bool> = matrix.rows.iter().map(|r| r.label).collect();
    if matrix.rows.len() < 2 || labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::DegenerateLabels(
            "bagging requires at least two rows with both labels represented".to_string(),
        ));
    }
    let trees = if parallel {
        (0..config.n_trees)
            .into_par_iter()
            .map(|t| fit_one(matrix, config, t))
            .collect::<Result<Vec<_>>>()?
    } else {
        (0..config.n_trees)
            .map(|t| fit_one(matrix, config, t))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(Forest { trees, config: *config })
}

pub fn fit_bagging(matrix: &FeatureMatrix, config: &BaggingConfig) -> Result<Forest> {
    fit_bagging_with(matrix, config, true)
}

fn tree_votes(
    forest: &Forest,
    matrix: &FeatureMatrix,
    values_of: impl Fn(usize, usize) -> Vec<Option<f64>>,
) -> Result<Vec<Option<bool>>> {
    // values_of(tree_index, row_index) supplies possibly-permuted feature rows
    let n = matrix.rows.len();
    let mut pos_votes = vec![0usize; n];
    let mut total_votes = vec![0usize; n];
    for (t, bt) in forest.trees.iter().enumerate() {
        for &i in &bt.oob {
            let (pred, _) = cart::predict(&bt.tree, &values_of(t, i))?;
            total_votes[i] += 1;
            if pred {
                pos_votes[i] += 1;
            }
        }
    }
    Ok((0..n)
        .map(|i| {
            if total_votes[i] == 0 {
                None
            } else {
                // vote tie predicts negative, as in a tied leaf
                Some(2 * pos_votes[i] > total_votes[i])
            }
        })
        .collect())
}

/// Out-of-bag misclassification rate: each row is predicted by majority vote
/// of the trees for which it is out of bag; rows with no vote are excluded.
pub fn oob_error(forest: &Forest, matrix: &FeatureMatrix) -> Result<f64> {
    let votes = tree_votes(forest, matrix, |_, i| matrix.rows[i].values.clone())?;
    let mut n_voted = 0usize;
    let mut wrong = 0usize;
    for (row, vote) in matrix.rows.iter().zip(&votes) {
        if let Some(pred) = vote {
            n_voted += 1;
            if *pred != row.label {
                wrong += 1;
            }
        }
    }
    if n_voted == 0 {
        return Err(Error::InsufficientTrees);
    }
    Ok(wrong as f64 / n_voted as f64)
}

fn oob_misclass(bt: &BaggedTree, matrix: &FeatureMatrix, values: &[Vec<Option<f64>>]) -> Result<f64> {
    let mut wrong = 0usize;
    for &i in &bt.oob {
        let (pred, _) = cart::predict(&bt.tree, &values[i])?;
        if pred != matrix.rows[i].label {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / bt.oob.len() as f64)
}

fn permutation_scores(forest: &Forest, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
    let n_features = matrix.feature_names.len();
    let mut sums = vec![0.0; n_features];
    let mut n_used = 0usize;
    let base_values: Vec<Vec<Option<f64>>> = matrix.rows.iter().map(|r| r.values.clone()).collect();
    for (t, bt) in forest.trees.iter().enumerate() {
        if bt.oob.is_empty() {
            continue;
        }
        n_used += 1;
        let base_err = oob_misclass(bt, matrix, &base_values)?;
        for f in 0..n_features {
            let mut rng = perm_rng(&forest.config, t as u64, f as u64, n_features as u64);
            // Fisher-Yates over the OOB positions of feature f
            let mut order: Vec<usize> = bt.oob.clone();
            for k in (1..order.len()).rev() {
                order.swap(k, rng.gen_range(0..=k));
            }
            let mut values = base_values.clone();
            for (&dst, &src) in bt.oob.iter().zip(&order) {
                values[dst][f] = base_values[src][f];
            }
            sums[f] += oob_misclass(bt, matrix, &values)? - base_err;
        }
    }
    if n_used == 0 {
        return Err(Error::InsufficientTrees);
    }
    Ok(sums.into_iter().map(|s| s / n_used as f64).collect())
}

fn gini_scores(forest: &Forest, matrix: &FeatureMatrix) -> Vec<f64> {
    fn walk(node: &crate::cart::TreeNode, n_root: f64, sums: &mut [f64]) {
        if let Some(s) = &node.split {
            sums[s.rule.feature_index] += (s.n_split as f64 / n_root) * s.rule.gain;
            walk(&s.left, n_root, sums);
            walk(&s.right, n_root, sums);
        }
    }
    let mut sums = vec![0.0; matrix.feature_names.len()];
    for bt in &forest.trees {
        walk(&bt.tree.root, bt.in_bag.len() as f64, &mut sums);
    }
    sums.iter().map(|s| s / forest.trees.len() as f64).collect()
}

/// Per-feature importance scores and ranks. Rank 1 is the highest score;
/// ties resolve by feature declaration order.
pub fn importance(forest: &Forest, matrix: &FeatureMatrix, method: ImportanceMethod) -> Result<ImportanceReport> {
    let scores = match method {
        ImportanceMethod::PermutationOob => permutation_scores(forest, matrix)?,
        ImportanceMethod::MeanDecreaseGini => gini_scores(forest, matrix),
    };
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0usize; scores.len()];
    for (rank0, &f) in order.iter().enumerate() {
        ranks[f] = rank0 + 1;
    }
    Ok(ImportanceReport {
        features: matrix
            .feature_names
            .iter()
            .zip(scores.iter().zip(&ranks))
            .map(|(name, (&score, &rank))| FeatureImportance { name: name.clone(), score, rank })
            .collect(),
        method,
        n_trees: forest.config.n_trees,
        seed: forest.config.seed,
    })
}
