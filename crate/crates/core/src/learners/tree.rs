//! Weighted CART with Gini splitting: the base learner for AdaBoost, the
//! forest member for permutation importance, and the single-tree ranker for
//! feature selection.
//!
//! Split finding presorts each feature once and partitions the sorted index
//! lists down the recursion, so a node costs O(p * n_node) after the initial
//! sort.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "node")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    /// Route a row down the tree: value <= threshold goes left.
    pub fn eval(&self, row: &[f64]) -> f64 {
        match self {
            Node::Leaf { value } => *value,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] <= *threshold {
                    left.eval(row)
                } else {
                    right.eval(row)
                }
            }
        }
    }

    /// Count split occurrences per feature (the F-score used for the
    /// feature-importance report).
    pub fn count_splits(&self, counts: &mut [usize]) {
        if let Node::Split {
            feature, left, right, ..
        } = self
        {
            counts[*feature] += 1;
            left.count_splits(counts);
            right.count_splits(counts);
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

/// Gini impurity 1 - sum(p_j^2) of a class-count vector.
pub fn gini(class_counts: &[u64]) -> Result<f64> {
    let total: u64 = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::Domain("gini of an empty count vector".into()));
    }
    let total = total as f64;
    let sum_sq: f64 = class_counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum();
    Ok(1.0 - sum_sq)
}

fn gini_weighted(w0: f64, w1: f64) -> f64 {
    let w = w0 + w1;
    if w <= 0.0 {
        return 0.0;
    }
    let p0 = w0 / w;
    let p1 = w1 / w;
    1.0 - p0 * p0 - p1 * p1
}

#[derive(Debug, Clone, Copy)]
pub struct TreeLimits {
    /// Nodes at this depth become leaves; 0 means a single leaf.
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl TreeLimits {
    pub fn unbounded() -> Self {
        TreeLimits {
            max_depth: usize::MAX,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: Node,
    pub n_features: usize,
    /// Total weighted impurity decrease per feature, normalized to sum 1
    /// (all zeros for a single leaf).
    pub importances: Vec<f64>,
}

impl TreeModel {
    pub fn score_rows(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.root.eval(r)).collect()
    }
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
    pos: usize,
}

/// Stable in-place partition of each feature's sorted index range by split
/// side, using one reused scratch buffer. Returns the left-side length.
pub(crate) fn partition_sorted(
    sorted: &mut [Vec<u32>],
    lo: usize,
    hi: usize,
    col: &[f64],
    threshold: f64,
    scratch: &mut Vec<u32>,
) -> usize {
    let mut left_len = 0;
    for order in sorted.iter_mut() {
        scratch.clear();
        let mut write = lo;
        for i in lo..hi {
            let row = order[i];
            if col[row as usize] <= threshold {
                order[write] = row;
                write += 1;
            } else {
                scratch.push(row);
            }
        }
        order[write..hi].copy_from_slice(scratch);
        left_len = write - lo;
    }
    left_len
}

struct Grower<'a> {
    columns: &'a [Vec<f64>],
    labels: &'a [u8],
    weights: &'a [f64],
    limits: TreeLimits,
    /// Features drawn per split; None considers all.
    features_per_split: Option<usize>,
    rng: Option<&'a mut ChaCha8Rng>,
    importances: Vec<f64>,
    feature_pool: Vec<usize>,
    /// Per feature, row indices sorted by value; subranges are partitioned
    /// in place down the recursion.
    sorted: Vec<Vec<u32>>,
    scratch: Vec<u32>,
    candidates: Vec<usize>,
}

impl Grower<'_> {
    fn grow(&mut self, lo: usize, hi: usize, depth: usize) -> Node {
        let n = hi - lo;
        let mut w1 = 0.0;
        let mut w = 0.0;
        for &r in &self.sorted[0][lo..hi] {
            let wr = self.weights[r as usize];
            w += wr;
            if self.labels[r as usize] == 1 {
                w1 += wr;
            }
        }
        let leaf_value = if w > 0.0 { w1 / w } else { 0.5 };
        let node_gini = gini_weighted(w - w1, w1);

        if depth >= self.limits.max_depth
            || n < self.limits.min_samples_split
            || n < 2 * self.limits.min_samples_leaf
            || node_gini <= 0.0
        {
            return Node::Leaf { value: leaf_value };
        }

        self.candidates.clear();
        match (self.features_per_split, self.rng.as_deref_mut()) {
            (Some(k), Some(rng)) => {
                self.feature_pool.shuffle(rng);
                self.candidates
                    .extend_from_slice(&self.feature_pool[..k.min(self.columns.len())]);
            }
            _ => self.candidates.extend_from_slice(&self.feature_pool),
        }
        // Deterministic tie-breaking wants ascending feature order.
        self.candidates.sort_unstable();

        let mut best: Option<Best> = None;
        for ci in 0..self.candidates.len() {
            let f = self.candidates[ci];
            let col = &self.columns[f];
            let order = &self.sorted[f][lo..hi];
            let mut lw = 0.0;
            let mut lw1 = 0.0;
            for (i, &r) in order[..n - 1].iter().enumerate() {
                let wr = self.weights[r as usize];
                lw += wr;
                if self.labels[r as usize] == 1 {
                    lw1 += wr;
                }
                let here = col[r as usize];
                let next = col[order[i + 1] as usize];
                if here == next {
                    continue;
                }
                let left_n = i + 1;
                let right_n = n - left_n;
                if left_n < self.limits.min_samples_leaf || right_n < self.limits.min_samples_leaf {
                    continue;
                }
                let rw = w - lw;
                let rw1 = w1 - lw1;
                let children = (lw * gini_weighted(lw - lw1, lw1)
                    + rw * gini_weighted(rw - rw1, rw1))
                    / w;
                let gain = node_gini - children;
                let improves = match &best {
                    None => gain > 1e-12,
                    Some(b) => gain > b.gain + 1e-12,
                };
                if improves {
                    best = Some(Best {
                        gain,
                        feature: f,
                        threshold: here + 0.5 * (next - here),
                        pos: left_n,
                    });
                }
            }
        }

        let Some(best) = best else {
            return Node::Leaf { value: leaf_value };
        };
        self.importances[best.feature] += w * best.gain;

        let left_len = partition_sorted(
            &mut self.sorted,
            lo,
            hi,
            &self.columns[best.feature],
            best.threshold,
            &mut self.scratch,
        );
        debug_assert_eq!(left_len, best.pos);

        let left = self.grow(lo, lo + left_len, depth + 1);
        let right = self.grow(lo + left_len, hi, depth + 1);
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// Fit a weighted CART on column-major features. `feature_sample` draws that
/// many random features per split (random-forest style) using `rng`.
pub fn fit_tree_columns(
    columns: &[Vec<f64>],
    labels: &[u8],
    weights: &[f64],
    limits: TreeLimits,
    feature_sample: Option<usize>,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<TreeModel> {
    let p = columns.len();
    if p == 0 {
        return Err(Error::Fit("no features".into()));
    }
    let n = columns[0].len();
    if labels.len() != n || weights.len() != n {
        return Err(Error::Shape("columns/labels/weights length mismatch".into()));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::Fit("negative sample weight".into()));
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Fit("sample weights sum to zero".into()));
    }

    let sorted: Vec<Vec<u32>> = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].partial_cmp(&col[b as usize]).unwrap());
            idx
        })
        .collect();

    let mut grower = Grower {
        columns,
        labels,
        weights,
        limits,
        features_per_split: feature_sample,
        rng,
        importances: vec![0.0; p],
        feature_pool: (0..p).collect(),
        sorted,
        scratch: Vec::with_capacity(n),
        candidates: Vec::with_capacity(p),
    };
    let root = grower.grow(0, n, 0);
    let mut importances = grower.importances;
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        for v in importances.iter_mut() {
            *v /= total;
        }
    }
    Ok(TreeModel {
        root,
        n_features: p,
        importances,
    })
}

/// Dataset-facing wrapper around [`fit_tree_columns`].
pub fn fit_tree(
    train: &Dataset,
    sample_weights: &[f64],
    max_depth: usize,
    min_samples_split: usize,
    min_samples_leaf: usize,
) -> Result<TreeModel> {
    let columns = to_columns(train)?;
    fit_tree_columns(
        &columns,
        train.labels(),
        sample_weights,
        TreeLimits {
            max_depth,
            min_samples_split: min_samples_split.max(2),
            min_samples_leaf: min_samples_leaf.max(1),
        },
        None,
        None,
    )
}

/// Column-major dense view of a complete dataset.
pub fn to_columns(d: &Dataset) -> Result<Vec<Vec<f64>>> {
    let n = d.n_rows();
    let p = d.n_features();
    let mut columns = vec![Vec::with_capacity(n); p];
    for r in 0..n {
        for (c, col) in columns.iter_mut().enumerate() {
            let v = d.value(r, c).ok_or_else(|| {
                Error::Shape(format!("missing cell at row {r}, column {c}; impute first"))
            })?;
            col.push(v);
        }
    }
    Ok(columns)
}
