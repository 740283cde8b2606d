//! L1-penalized logistic regression via proximal gradient descent
//! (soft-thresholding), intercept unpenalized.

use crate::dataset::Dataset;
use crate::error::Result;

const TOL: f64 = 1e-6;
const MAX_ITERS: usize = 10_000;

/// Maximize sum_i [y_i z_i - ln(1 + e^{z_i})] - lambda * sum_j |beta_j| with
/// z = intercept + x.beta. Returns (coefficients, intercept).
pub fn fit_lasso_logistic(d: &Dataset, lambda: f64) -> Result<(Vec<f64>, f64)> {
    let x = d.dense()?;
    let y = d.labels();
    let p = d.n_features();

    // Lipschitz constant of the negative log-likelihood gradient is
    // lambda_max(X'X)/4 over the intercept-augmented design; power-iterate
    // for lambda_max, with a safety margin on the step.
    let mut v = vec![1.0 / ((p + 1) as f64).sqrt(); p + 1];
    let mut lambda_max = 1.0;
    for _ in 0..40 {
        // u = X v (augmented: coordinate p is the intercept column of ones)
        let u: Vec<f64> = x
            .iter()
            .map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + v[p])
            .collect();
        // w = X' u
        let mut w = vec![0.0; p + 1];
        for (row, &ui) in x.iter().zip(&u) {
            for (wj, &xj) in w.iter_mut().zip(row) {
                *wj += xj * ui;
            }
            w[p] += ui;
        }
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lambda_max = norm;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    let step = 4.0 / (lambda_max.max(1e-12) * 1.05);

    let mut beta = vec![0.0; p];
    let mut intercept = 0.0;
    for _ in 0..MAX_ITERS {
        // Gradient of the log-likelihood: X'(y - sigma(z)).
        let mut grad = vec![0.0; p];
        let mut grad0 = 0.0;
        for (row, &yi) in x.iter().zip(y) {
            let z = intercept + row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
            let r = yi as f64 - 1.0 / (1.0 + (-z).exp());
            for (g, &xj) in grad.iter_mut().zip(row) {
                *g += xj * r;
            }
            grad0 += r;
        }

        let mut max_change = 0.0f64;
        for j in 0..p {
            let raw = beta[j] + step * grad[j];
            let new = soft_threshold(raw, step * lambda);
            max_change = max_change.max((new - beta[j]).abs());
            beta[j] = new;
        }
        let new0 = intercept + step * grad0;
        max_change = max_change.max((new0 - intercept).abs());
        intercept = new0;

        if max_change < TOL {
            break;
        }
    }
    Ok((beta, intercept))
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}
