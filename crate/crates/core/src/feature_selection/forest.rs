//! Random-forest permutation importance: per-feature z-scores of the
//! out-of-bag accuracy drop when the feature is permuted.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::tree::{fit_tree_columns, to_columns, TreeLimits};

/// z_j = mean(D_j) / (s_j / sqrt(B)) over B bootstrap trees, where D_bj is
/// the OOB accuracy drop after permuting feature j in tree b. s_j = 0 gives
/// z_j = 0; with a single tree the raw mean is reported.
pub fn rf_importance(d: &Dataset, n_trees: usize, seed: u64) -> Result<Vec<f64>> {
    let (c0, c1) = d.class_counts();
    if c0 == 0 || c1 == 0 {
        return Err(Error::Fit("rf_importance requires both classes".into()));
    }
    if n_trees == 0 {
        return Err(Error::Fit("rf_importance requires n_trees >= 1".into()));
    }
    if n_trees == 1 {
        eprintln!("warning: rf_importance with a single tree reports raw accuracy drops, not z-scores");
    }
    let columns = to_columns(d)?;
    let labels = d.labels();
    let n = labels.len();
    let p = columns.len();
    let features_per_split = ((p as f64).sqrt().round() as usize).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // drops[j] collects D_bj across trees.
    let mut drops: Vec<Vec<f64>> = vec![Vec::with_capacity(n_trees); p];
    for _ in 0..n_trees {
        let boot: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut in_bag = vec![false; n];
        for &r in &boot {
            in_bag[r] = true;
        }
        let oob: Vec<usize> = (0..n).filter(|&r| !in_bag[r]).collect();

        let boot_columns: Vec<Vec<f64>> = columns
            .iter()
            .map(|col| boot.iter().map(|&r| col[r]).collect())
            .collect();
        let boot_labels: Vec<u8> = boot.iter().map(|&r| labels[r]).collect();
        let weights = vec![1.0; boot.len()];
        let tree = fit_tree_columns(
            &boot_columns,
            &boot_labels,
            &weights,
            TreeLimits::unbounded(),
            Some(features_per_split),
            Some(&mut rng),
        )?;

        if oob.is_empty() {
            for dj in drops.iter_mut() {
                dj.push(0.0);
            }
            continue;
        }
        let mut oob_rows: Vec<Vec<f64>> = oob
            .iter()
            .map(|&r| columns.iter().map(|col| col[r]).collect())
            .collect();
        let base_acc = accuracy(&tree.root, &oob_rows, &oob, labels);
        for j in 0..p {
            let original: Vec<f64> = oob_rows.iter().map(|row| row[j]).collect();
            let mut permuted = original.clone();
            permuted.shuffle(&mut rng);
            for (row, &v) in oob_rows.iter_mut().zip(&permuted) {
                row[j] = v;
            }
            let perm_acc = accuracy(&tree.root, &oob_rows, &oob, labels);
            drops[j].push(base_acc - perm_acc);
            for (row, &v) in oob_rows.iter_mut().zip(&original) {
                row[j] = v;
            }
        }
    }

    let b = n_trees as f64;
    Ok(drops
        .iter()
        .map(|dj| {
            let mean = dj.iter().sum::<f64>() / b;
            if n_trees == 1 {
                return mean;
            }
            let var = dj.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (b - 1.0);
            let s = var.sqrt();
            if s == 0.0 {
                0.0
            } else {
                mean / (s / b.sqrt())
            }
        })
        .collect())
}

fn accuracy(tree: &crate::learners::Node, rows: &[Vec<f64>], idx: &[usize], labels: &[u8]) -> f64 {
    let correct = rows
        .iter()
        .zip(idx)
        .filter(|(row, &r)| u8::from(tree.eval(row) >= 0.5) == labels[r])
        .count();
    correct as f64 / idx.len() as f64
}
