//! Three-hidden-layer perceptron, sigmoid at every layer, trained full-batch
//! on cross-entropy with an L2 weight penalty and classical momentum.
//!
//! The batch lives in flat row-major buffers reused across epochs; the fit
//! loop allocates nothing per step.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

use super::sigmoid;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: [usize; 3],
    pub learning_rate: f64,
    pub momentum: f64,
    /// L2 penalty on weights (biases unpenalized).
    pub alpha: f64,
    pub epochs: usize,
}

pub const DEFAULT_EPOCHS: usize = 200;

impl MlpParams {
    pub fn from_values(v: &[f64]) -> Result<Self> {
        if v.len() != 6 {
            return Err(Error::Schema(format!("mlp expects 6 parameters, got {}", v.len())));
        }
        Ok(MlpParams {
            hidden: [
                v[0].round().max(1.0) as usize,
                v[1].round().max(1.0) as usize,
                v[2].round().max(1.0) as usize,
            ],
            learning_rate: v[3],
            momentum: v[4],
            alpha: v[5],
            epochs: DEFAULT_EPOCHS,
        })
    }
}

/// Dense feed-forward network; `weights[l]` is row-major in_dim x out_dim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpModel {
    pub fn new_seeded(input_dim: usize, hidden: [usize; 3], seed: u64) -> Self {
        let layer_sizes = vec![input_dim, hidden[0], hidden[1], hidden[2], 1];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..4 {
            let (fan_in, fan_out) = (layer_sizes[l], layer_sizes[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-bound..bound))
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        MlpModel {
            layer_sizes,
            weights,
            biases,
        }
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Layer-by-layer flattening: W0, b0, W1, b1, ...
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in 0..self.weights.len() {
            out.extend_from_slice(&self.weights[l]);
            out.extend_from_slice(&self.biases[l]);
        }
        out
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) {
        let mut i = 0;
        for l in 0..self.weights.len() {
            let w = self.weights[l].len();
            self.weights[l].copy_from_slice(&flat[i..i + w]);
            i += w;
            let b = self.biases[l].len();
            self.biases[l].copy_from_slice(&flat[i..i + b]);
            i += b;
        }
        debug_assert_eq!(i, flat.len());
    }

    pub fn score_rows(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        let n = rows.len();
        if n == 0 {
            return Vec::new();
        }
        let flat = flatten_rows(rows);
        let mut ws = Workspace::new(&self.layer_sizes, n);
        self.forward(&flat, n, &mut ws);
        ws.acts[4].clone()
    }

    /// Forward pass over the flat batch into the workspace activations.
    fn forward(&self, x: &[f64], n: usize, ws: &mut Workspace) {
        ws.acts[0].copy_from_slice(x);
        for l in 0..4 {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let (prev_slice, next_slice) = ws.acts.split_at_mut(l + 1);
            let prev = &prev_slice[l];
            let next = &mut next_slice[0];
            let w = &self.weights[l];
            let b = &self.biases[l];
            for r in 0..n {
                let a = &prev[r * fan_in..(r + 1) * fan_in];
                let out = &mut next[r * fan_out..(r + 1) * fan_out];
                out.copy_from_slice(b);
                for (i, &ai) in a.iter().enumerate() {
                    let w_row = &w[i * fan_out..(i + 1) * fan_out];
                    for (o, &wij) in out.iter_mut().zip(w_row) {
                        *o += ai * wij;
                    }
                }
                for o in out.iter_mut() {
                    *o = sigmoid(*o);
                }
            }
        }
    }
}

/// Per-fit scratch: activations and deltas as flat n x size matrices.
struct Workspace {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(layer_sizes: &[usize], n: usize) -> Self {
        Workspace {
            acts: layer_sizes.iter().map(|&s| vec![0.0; n * s]).collect(),
            deltas: layer_sizes[1..].iter().map(|&s| vec![0.0; n * s]).collect(),
        }
    }
}

fn flatten_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut flat = Vec::with_capacity(rows.len() * rows.first().map_or(0, Vec::len));
    for r in rows {
        flat.extend_from_slice(r);
    }
    flat
}

/// Mean cross-entropy plus (alpha/2)*||W||^2 and its gradient in
/// [`MlpModel::flatten`] order. Convenience wrapper that allocates its own
/// scratch; the fit loop uses the buffer-reusing internal version.
pub fn loss_and_grad(model: &MlpModel, x: &[Vec<f64>], y: &[u8], alpha: f64) -> (f64, Vec<f64>) {
    let n = x.len();
    let flat = flatten_rows(x);
    let mut ws = Workspace::new(&model.layer_sizes, n);
    let mut grad = vec![0.0; model.n_params()];
    let loss = loss_and_grad_into(model, &flat, n, y, alpha, &mut ws, &mut grad);
    (loss, grad)
}

fn loss_and_grad_into(
    model: &MlpModel,
    x: &[f64],
    n: usize,
    y: &[u8],
    alpha: f64,
    ws: &mut Workspace,
    grad: &mut [f64],
) -> f64 {
    model.forward(x, n, ws);

    let probs = &ws.acts[4];
    let mut loss = 0.0;
    for (&p, &label) in probs.iter().zip(y) {
        let p = p.clamp(1e-12, 1.0 - 1e-12);
        loss -= if label == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    loss /= n as f64;
    for w in &model.weights {
        loss += 0.5 * alpha * w.iter().map(|v| v * v).sum::<f64>();
    }

    // Output delta: sigmoid + cross-entropy collapses to (p - y)/n.
    for ((d, &p), &label) in ws.deltas[3].iter_mut().zip(&ws.acts[4]).zip(y) {
        *d = (p - label as f64) / n as f64;
    }
    for l in (0..3).rev() {
        let fan_out = model.layer_sizes[l + 1];
        let next_out = model.layer_sizes[l + 2];
        let w_next = &model.weights[l + 1];
        let (cur_slice, next_slice) = ws.deltas.split_at_mut(l + 1);
        let cur = &mut cur_slice[l];
        let next = &next_slice[0];
        let act = &ws.acts[l + 1];
        for r in 0..n {
            let d_next = &next[r * next_out..(r + 1) * next_out];
            let a = &act[r * fan_out..(r + 1) * fan_out];
            let d_cur = &mut cur[r * fan_out..(r + 1) * fan_out];
            for j in 0..fan_out {
                let mut back = 0.0;
                let w_row = &w_next[j * next_out..(j + 1) * next_out];
                for (&d, &w) in d_next.iter().zip(w_row) {
                    back += d * w;
                }
                d_cur[j] = back * a[j] * (1.0 - a[j]);
            }
        }
    }

    let mut offset = 0;
    for l in 0..4 {
        let (fan_in, fan_out) = (model.layer_sizes[l], model.layer_sizes[l + 1]);
        let acts = &ws.acts[l];
        let deltas = &ws.deltas[l];
        let gw = &mut grad[offset..offset + fan_in * fan_out];
        gw.fill(0.0);
        for r in 0..n {
            let a = &acts[r * fan_in..(r + 1) * fan_in];
            let d = &deltas[r * fan_out..(r + 1) * fan_out];
            for (i, &ai) in a.iter().enumerate() {
                let g_row = &mut gw[i * fan_out..(i + 1) * fan_out];
                for (g, &dj) in g_row.iter_mut().zip(d) {
                    *g += ai * dj;
                }
            }
        }
        for (g, &w) in gw.iter_mut().zip(&model.weights[l]) {
            *g += alpha * w;
        }
        offset += fan_in * fan_out;

        let gb = &mut grad[offset..offset + fan_out];
        gb.fill(0.0);
        for r in 0..n {
            let d = &deltas[r * fan_out..(r + 1) * fan_out];
            for (g, &dj) in gb.iter_mut().zip(d) {
                *g += dj;
            }
        }
        offset += fan_out;
    }
    loss
}

pub fn fit_mlp(train: &Dataset, params: &MlpParams, seed: u64) -> Result<MlpModel> {
    let (c0, c1) = train.class_counts();
    if c0 == 0 || c1 == 0 {
        return Err(Error::Fit("mlp requires both classes in training data".into()));
    }
    let x = train.dense()?;
    if let Some(bad) = x.iter().flatten().find(|v| v.abs() > 10.0) {
        return Err(Error::Fit(format!(
            "mlp input looks unnormalized (|{bad}| > 10); run min-max scaling first"
        )));
    }
    let y = train.labels();
    let n = x.len();
    let flat = flatten_rows(&x);

    let mut model = MlpModel::new_seeded(train.n_features(), params.hidden, seed);
    let mut ws = Workspace::new(&model.layer_sizes, n);
    let mut theta = model.flatten();
    let mut grad = vec![0.0; theta.len()];
    let mut velocity = vec![0.0; theta.len()];
    for _ in 0..params.epochs {
        loss_and_grad_into(&model, &flat, n, y, params.alpha, &mut ws, &mut grad);
        for ((v, g), t) in velocity.iter_mut().zip(&grad).zip(theta.iter_mut()) {
            *v = params.momentum * *v - params.learning_rate * g;
            *t += *v;
        }
        model.set_from_flat(&theta);
    }
    Ok(model)
}
