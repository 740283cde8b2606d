//! Gradient-boosted trees on second-order logistic loss.
//!
//! Raw scores start at 0 (probability 0.5). Each round fits one tree — or
//! averages several grown on distinct row subsamples when parallel trees are
//! requested — to the gradient/hessian pairs g = p - y, h = p(1 - p), and
//! accumulates its output scaled by the learning rate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

use super::sigmoid;
use super::tree::{to_columns, Node};

/// L2 leaf regularization, fixed.
const LAMBDA: f64 = 1.0;
/// Row fraction for each parallel-tree subsample.
const SUBSAMPLE: f64 = 0.8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_estimators: usize,
    /// Tree depth cap; 0 grows single-leaf trees.
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Minimum split gain.
    pub gamma: f64,
    /// Leaf weight clip; 0 disables clipping.
    pub max_delta_step: usize,
    /// Trees averaged per round; 0 or 1 means one tree, no subsampling.
    pub n_parallel_trees: usize,
}

impl GbtParams {
    pub fn from_values(v: &[f64]) -> Result<Self> {
        if v.len() != 6 {
            return Err(Error::Schema(format!("gbt expects 6 parameters, got {}", v.len())));
        }
        Ok(GbtParams {
            n_estimators: v[0].round() as usize,
            max_depth: v[1].round() as usize,
            learning_rate: v[2],
            gamma: v[3],
            max_delta_step: v[4].round() as usize,
            n_parallel_trees: v[5].round() as usize,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbtModel {
    pub n_features: usize,
    pub learning_rate: f64,
    /// Trees per round; a round's contribution is the mean of its trees.
    pub rounds: Vec<Vec<Node>>,
    /// Training log-loss after each round (index 0 = before boosting).
    pub train_loss: Vec<f64>,
}

impl GbtModel {
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        let mut raw = 0.0;
        for trees in &self.rounds {
            let mean: f64 = trees.iter().map(|t| t.eval(row)).sum::<f64>() / trees.len() as f64;
            raw += self.learning_rate * mean;
        }
        raw
    }

    pub fn score_rows(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| sigmoid(self.raw_score(r))).collect()
    }

    /// Split count per feature over every tree (the F-score ranking).
    pub fn split_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_features];
        for trees in &self.rounds {
            for t in trees {
                t.count_splits(&mut counts);
            }
        }
        counts
    }
}

/// Second-order leaf weight -G/(H + lambda), clipped to |w| <= max_delta_step
/// when the clip is positive.
pub fn leaf_weight(g: f64, h: f64, max_delta_step: usize) -> f64 {
    let w = -g / (h + LAMBDA);
    if max_delta_step > 0 {
        let cap = max_delta_step as f64;
        w.clamp(-cap, cap)
    } else {
        w
    }
}

fn log_loss(labels: &[u8], raw: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (&y, &r) in labels.iter().zip(raw) {
        let p = sigmoid(r).clamp(1e-12, 1.0 - 1e-12);
        sum -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    sum / labels.len() as f64
}

struct GbtGrower<'a> {
    columns: &'a [Vec<f64>],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbtParams,
    sorted: Vec<Vec<u32>>,
    scratch: Vec<u32>,
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl GbtGrower<'_> {
    fn grow(&mut self, lo: usize, hi: usize, depth: usize) -> Node {
        let n = hi - lo;
        let mut g = 0.0;
        let mut h = 0.0;
        for &r in &self.sorted[0][lo..hi] {
            g += self.grad[r as usize];
            h += self.hess[r as usize];
        }
        let leaf = Node::Leaf {
            value: leaf_weight(g, h, self.params.max_delta_step),
        };
        if depth >= self.params.max_depth || n < 2 {
            return leaf;
        }

        let parent_term = g * g / (h + LAMBDA);
        let mut best: Option<Best> = None;
        for f in 0..self.sorted.len() {
            let col = &self.columns[f];
            let order = &self.sorted[f][lo..hi];
            let mut gl = 0.0;
            let mut hl = 0.0;
            for (i, &r) in order[..n - 1].iter().enumerate() {
                gl += self.grad[r as usize];
                hl += self.hess[r as usize];
                let here = col[r as usize];
                let next = col[order[i + 1] as usize];
                if here == next {
                    continue;
                }
                let gr = g - gl;
                let hr = h - hl;
                let gain = 0.5
                    * (gl * gl / (hl + LAMBDA) + gr * gr / (hr + LAMBDA) - parent_term)
                    - self.params.gamma;
                let improves = match &best {
                    None => gain > 0.0,
                    Some(b) => gain > b.gain + 1e-12,
                };
                if improves {
                    best = Some(Best {
                        gain,
                        feature: f,
                        threshold: here + 0.5 * (next - here),
                    });
                }
            }
        }

        let Some(best) = best else { return leaf };
        let left_len = super::tree::partition_sorted(
            &mut self.sorted,
            lo,
            hi,
            &self.columns[best.feature],
            best.threshold,
            &mut self.scratch,
        );
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(self.grow(lo, lo + left_len, depth + 1)),
            right: Box::new(self.grow(lo + left_len, hi, depth + 1)),
        }
    }
}

pub fn fit_gbt(train: &Dataset, params: &GbtParams, seed: u64) -> Result<GbtModel> {
    let (c0, c1) = train.class_counts();
    if c0 == 0 || c1 == 0 {
        return Err(Error::Fit("gbt requires both classes in training data".into()));
    }
    if params.n_estimators == 0 {
        return Err(Error::Fit("gbt requires n_estimators >= 1".into()));
    }
    let columns = to_columns(train)?;
    let labels = train.labels();
    let n = labels.len();
    let p = columns.len();
    let dense: Vec<Vec<f64>> = (0..n)
        .map(|r| columns.iter().map(|col| col[r]).collect())
        .collect();

    let full_sorted: Vec<Vec<u32>> = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].partial_cmp(&col[b as usize]).unwrap());
            idx
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = vec![0.0; n];
    let mut train_loss = vec![log_loss(labels, &raw)];
    let mut rounds = Vec::with_capacity(params.n_estimators);
    let parallel = params.n_parallel_trees.max(1);

    for _ in 0..params.n_estimators {
        let mut grad = Vec::with_capacity(n);
        let mut hess = Vec::with_capacity(n);
        for (&y, &r) in labels.iter().zip(&raw) {
            let prob = sigmoid(r);
            grad.push(prob - y as f64);
            hess.push(prob * (1.0 - prob));
        }
        let mut trees = Vec::with_capacity(parallel);
        if parallel == 1 {
            let mut grower = GbtGrower {
                columns: &columns,
                grad: &grad,
                hess: &hess,
                params,
                sorted: full_sorted.clone(),
                scratch: Vec::with_capacity(n),
            };
            trees.push(grower.grow(0, n, 0));
        } else {
            let take = ((n as f64 * SUBSAMPLE).round() as usize).clamp(2, n);
            let mut mask = vec![false; n];
            for _ in 0..parallel {
                let keep = rand::seq::index::sample(&mut rng, n, take).into_vec();
                mask.fill(false);
                for &r in &keep {
                    mask[r] = true;
                }
                let sorted: Vec<Vec<u32>> = (0..p)
                    .map(|f| {
                        full_sorted[f]
                            .iter()
                            .copied()
                            .filter(|&r| mask[r as usize])
                            .collect()
                    })
                    .collect();
                let mut grower = GbtGrower {
                    columns: &columns,
                    grad: &grad,
                    hess: &hess,
                    params,
                    sorted,
                    scratch: Vec::with_capacity(take),
                };
                trees.push(grower.grow(0, take, 0));
            }
        }

        for (r, row) in raw.iter_mut().zip(&dense) {
            let mean: f64 = trees.iter().map(|t| t.eval(row)).sum::<f64>() / trees.len() as f64;
            *r += params.learning_rate * mean;
        }
        train_loss.push(log_loss(labels, &raw));
        rounds.push(trees);
    }

    Ok(GbtModel {
        n_features: train.n_features(),
        learning_rate: params.learning_rate,
        rounds,
        train_loss,
    })
}
