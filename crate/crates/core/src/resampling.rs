//! SMOTE minority oversampling for the training split.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Desired minority/majority count ratio after oversampling.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

/// Append synthetic minority rows until minority/majority reaches the target
/// ratio. Each synthetic row is x + u * (x_nn - x) for a random minority seed
/// x, one of its k nearest minority neighbors x_nn, and a single u ~ U(0,1);
/// categorical coordinates are copied from x. Original rows are preserved
/// verbatim.
pub fn smote(train: &Dataset, cfg: &SmoteConfig) -> Result<Dataset> {
    if cfg.k_neighbors == 0 {
        return Err(Error::Resample("k_neighbors must be >= 1".into()));
    }
    if !(cfg.target_ratio > 0.0 && cfg.target_ratio <= 1.0) {
        return Err(Error::Resample(format!(
            "target_ratio {} outside (0,1]",
            cfg.target_ratio
        )));
    }
    if train.has_missing() {
        return Err(Error::Resample("smote requires imputed (complete) data".into()));
    }
    let (c0, c1) = train.class_counts();
    let (minority_label, minority, majority) = if c0 <= c1 {
        (0u8, c0, c1)
    } else {
        (1u8, c1, c0)
    };
    if minority <= cfg.k_neighbors {
        return Err(Error::Resample(format!(
            "minority class has {minority} rows; need more than k = {}",
            cfg.k_neighbors
        )));
    }

    let target = (cfg.target_ratio * majority as f64).round() as usize;
    if target <= minority {
        return Ok(train.clone());
    }
    let deficit = target - minority;

    let minority_rows: Vec<usize> = (0..train.n_rows())
        .filter(|&r| train.labels()[r] == minority_label)
        .collect();
    let points: Vec<Vec<f64>> = minority_rows
        .iter()
        .map(|&r| (0..train.n_features()).map(|c| train.value(r, c).unwrap()).collect())
        .collect();

    // k nearest minority neighbors of each minority point, by Euclidean
    // distance over all coordinates; ties broken by index.
    let k = cfg.k_neighbors;
    let mut neighbors: Vec<Vec<usize>> = Vec::with_capacity(points.len());
    for (i, a) in points.iter().enumerate() {
        let mut dists: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, b)| {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (d2, j)
            })
            .collect();
        dists.sort_by(|x, y| x.partial_cmp(y).unwrap());
        neighbors.push(dists.iter().take(k).map(|&(_, j)| j).collect());
    }

    let categorical: Vec<bool> = train
        .schema()
        .iter()
        .map(|f| f.kind == FeatureKind::Categorical)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows: Vec<Vec<Option<f64>>> = (0..train.n_rows()).map(|r| train.row(r).to_vec()).collect();
    let mut labels = train.labels().to_vec();
    for _ in 0..deficit {
        let i = rng.random_range(0..points.len());
        let nn = neighbors[i][rng.random_range(0..neighbors[i].len())];
        let u: f64 = rng.random();
        let row: Vec<Option<f64>> = points[i]
            .iter()
            .zip(&points[nn])
            .zip(&categorical)
            .map(|((&x, &x_nn), &cat)| {
                if cat {
                    Some(x)
                } else {
                    Some(x + u * (x_nn - x))
                }
            })
            .collect();
        rows.push(row);
        labels.push(minority_label);
    }
    Dataset::new(train.schema().to_vec(), rows, labels)
}
