//! Regression random forest with out-of-bag prediction.
//!
//! Axis-aligned splits chosen by variance reduction over `mtry` sampled
//! features; each tree grows on a with-replacement bootstrap of the training
//! rows. Per-tree RNG streams are derived from `(seed, tree_index)`, so fits
//! are reproducible no matter how the trees are scheduled.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::num::Scalar;
use crate::rng;

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means ceil(d/3).
    pub mtry: Option<usize>,
    pub min_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 500,
            mtry: None,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone)]
struct Node<F> {
    /// Split feature; `usize::MAX` marks a leaf.
    feature: usize,
    threshold: F,
    left: u32,
    right: u32,
    value: F,
}

#[derive(Debug, Clone)]
pub struct Forest<F> {
    trees: Vec<Vec<Node<F>>>,
    /// Per tree: how many times each training row appears in its bootstrap.
    in_bag_counts: Vec<Vec<u32>>,
    pub n_trees: usize,
    pub mtry: usize,
    pub min_leaf: usize,
    pub seed: u64,
    n_train: usize,
    y_min: F,
    y_max: F,
}

/// OOB predictions plus a flag for units that were in-bag for every tree
/// (those fall back to the all-tree average).
#[derive(Debug, Clone)]
pub struct OobPrediction<F> {
    pub values: Vec<F>,
    pub fallback: Vec<bool>,
}

/// Mean that returns the exact common value when all inputs are identical.
fn mean_of<F: Scalar>(values: &[F]) -> F {
    debug_assert!(!values.is_empty());
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return first;
    }
    values.iter().copied().sum::<F>() / F::from_count(values.len())
}

pub fn fit_forest<F: Scalar>(
    x: &Matrix<F>,
    y: &[F],
    params: &ForestParams,
    seed: u64,
) -> Result<Forest<F>> {
    let n = x.nrows();
    let d = x.ncols();
    assert_eq!(y.len(), n);
    if n < 2 * params.min_leaf {
        return Err(Error::TooFewRows {
            need: 2 * params.min_leaf,
            got: n,
        });
    }
    let mtry = params.mtry.unwrap_or_else(|| d.div_ceil(3)).clamp(1, d);

    let built: Vec<(Vec<Node<F>>, Vec<u32>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(rng::derive_seed2(seed, 0x7265_6573, t as u64));
            let mut counts = vec![0u32; n];
            let mut sample = Vec::with_capacity(n);
            for _ in 0..n {
                let i = rand::RngExt::random_range(&mut r, 0..n);
                counts[i] += 1;
                sample.push(i);
            }
            let mut nodes = Vec::new();
            grow(x, y, &sample, params.min_leaf, mtry, &mut r, &mut nodes);
            (nodes, counts)
        })
        .collect();

    let mut y_min = y[0];
    let mut y_max = y[0];
    for &v in y {
        y_min = y_min.min(v);
        y_max = y_max.max(v);
    }

    let (trees, in_bag_counts) = built.into_iter().unzip();
    Ok(Forest {
        trees,
        in_bag_counts,
        n_trees: params.n_trees,
        mtry,
        min_leaf: params.min_leaf,
        seed,
        n_train: n,
        y_min,
        y_max,
    })
}

fn grow<F: Scalar>(
    x: &Matrix<F>,
    y: &[F],
    idx: &[usize],
    min_leaf: usize,
    mtry: usize,
    r: &mut rand_chacha::ChaCha8Rng,
    nodes: &mut Vec<Node<F>>,
) -> u32 {
    let id = nodes.len() as u32;
    nodes.push(Node {
        feature: usize::MAX,
        threshold: F::zero(),
        left: 0,
        right: 0,
        value: F::zero(),
    });

    let m = idx.len();
    let values: Vec<F> = idx.iter().map(|&i| y[i]).collect();
    let all_equal = values.iter().all(|&v| v == values[0]);
    if m < 2 * min_leaf || all_equal {
        nodes[id as usize].value = mean_of(&values);
        return id;
    }

    // sample mtry distinct features
    let d = x.ncols();
    let mut feats: Vec<usize> = (0..d).collect();
    for k in 0..mtry.min(d) {
        let j = k + rand::RngExt::random_range(r, 0..(d - k));
        feats.swap(k, j);
    }
    feats.truncate(mtry.min(d));

    let total_sum: F = values.iter().copied().sum();
    let mut best: Option<(F, usize, F, usize)> = None; // (score, feature, threshold, left_count)
    let mut order: Vec<usize> = (0..m).collect();

    for &f in &feats {
        order.sort_by(|&a, &b| {
            x.get(idx[a], f)
                .partial_cmp(&x.get(idx[b], f))
                .unwrap()
                .then(idx[a].cmp(&idx[b]))
        });
        let mut left_sum = F::zero();
        for pos in 1..m {
            left_sum += y[idx[order[pos - 1]]];
            let prev = x.get(idx[order[pos - 1]], f);
            let cur = x.get(idx[order[pos]], f);
            if prev >= cur || pos < min_leaf || m - pos < min_leaf {
                continue;
            }
            let right_sum = total_sum - left_sum;
            let score = left_sum * left_sum / F::from_count(pos)
                + right_sum * right_sum / F::from_count(m - pos);
            if best.map_or(true, |(s, _, _, _)| score > s) {
                let threshold = (prev + cur) / F::cast(2.0);
                best = Some((score, f, threshold, pos));
            }
        }
    }

    let Some((_, feature, threshold, _)) = best else {
        nodes[id as usize].value = mean_of(&values);
        return id;
    };

    // partition indices, preserving relative order for determinism
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.iter().partition(|&&i| x.get(i, feature) <= threshold);
    // midpoint can round onto a data value; never recurse on an empty side
    if left_idx.is_empty() || right_idx.is_empty() {
        nodes[id as usize].value = mean_of(&values);
        return id;
    }
    let left = grow(x, y, &left_idx, min_leaf, mtry, r, nodes);
    let right = grow(x, y, &right_idx, min_leaf, mtry, r, nodes);
    nodes[id as usize].feature = feature;
    nodes[id as usize].threshold = threshold;
    nodes[id as usize].left = left;
    nodes[id as usize].right = right;
    id
}

impl<F: Scalar> Forest<F> {
    fn predict_tree(&self, tree: &[Node<F>], row: &[F]) -> F {
        let mut k = 0usize;
        loop {
            let node = &tree[k];
            if node.feature == usize::MAX {
                return node.value;
            }
            k = if row[node.feature] <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }

    /// Average prediction over all trees.
    pub fn predict_row(&self, row: &[F]) -> F {
        let preds: Vec<F> = self.trees.iter().map(|t| self.predict_tree(t, row)).collect();
        mean_of(&preds)
    }

    pub fn predict(&self, x: &Matrix<F>) -> Vec<F> {
        (0..x.nrows()).map(|r| self.predict_row(x.row(r))).collect()
    }

    pub fn in_bag_counts(&self) -> &[Vec<u32>] {
        &self.in_bag_counts
    }

    pub fn bounds(&self) -> (F, F) {
        (self.y_min, self.y_max)
    }
}

/// Out-of-bag prediction for the training matrix itself: unit `i` is scored
/// only by trees whose bootstrap excluded `i`.
pub fn predict_oob<F: Scalar>(forest: &Forest<F>, x_train: &Matrix<F>) -> OobPrediction<F> {
    assert_eq!(
        x_train.nrows(),
        forest.n_train,
        "predict_oob expects the training matrix"
    );
    let n = x_train.nrows();
    let mut values = Vec::with_capacity(n);
    let mut fallback = Vec::with_capacity(n);
    for i in 0..n {
        let row = x_train.row(i);
        let preds: Vec<F> = forest
            .trees
            .iter()
            .zip(&forest.in_bag_counts)
            .filter(|(_, counts)| counts[i] == 0)
            .map(|(t, _)| forest.predict_tree(t, row))
            .collect();
        if preds.is_empty() {
            values.push(forest.predict_row(row));
            fallback.push(true);
        } else {
            values.push(mean_of(&preds));
            fallback.push(false);
        }
    }
    OobPrediction { values, fallback }
}
