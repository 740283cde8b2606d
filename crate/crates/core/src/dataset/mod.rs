//! Tabular classification data: schema, missingness, encoding, scaling,
//! imputation, sampling and splitting.
//!
//! A [`Dataset`] is immutable after construction; every operation returns a
//! new one and is a pure function of (input, seed).

mod csv_io;
mod synth;

pub use csv_io::{load_csv, load_schema, save_schema, write_csv, SchemaFile};
pub use synth::{synth_generate, synth_schema, MissingProfile};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: String,
    pub kind: FeatureKind,
    /// Category names in code order; `None` until encoding fixes them.
    #[serde(default)]
    pub categories: Option<Vec<String>>,
}

impl FeatureSchema {
    pub fn numeric(name: &str) -> Self {
        FeatureSchema {
            name: name.to_string(),
            kind: FeatureKind::Numeric,
            categories: None,
        }
    }

    pub fn categorical(name: &str) -> Self {
        FeatureSchema {
            name: name.to_string(),
            kind: FeatureKind::Categorical,
            categories: None,
        }
    }
}

/// Column-typed table with optional (missing) cells and binary labels
/// (0 = admitted / negative, 1 = discharged / positive).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    schema: Vec<FeatureSchema>,
    rows: Vec<Vec<Option<f64>>>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(schema: Vec<FeatureSchema>, rows: Vec<Vec<Option<f64>>>, labels: Vec<u8>) -> Result<Self> {
        for (i, a) in schema.iter().enumerate() {
            for b in &schema[i + 1..] {
                if a.name == b.name {
                    return Err(Error::Schema(format!("duplicate feature name '{}'", a.name)));
                }
            }
        }
        if rows.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::Shape(format!(
                    "row {r} has {} entries, schema has {}",
                    row.len(),
                    schema.len()
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::Label(bad.to_string()));
        }
        for (c, spec) in schema.iter().enumerate() {
            if let (FeatureKind::Categorical, Some(cats)) = (spec.kind, &spec.categories) {
                for (r, row) in rows.iter().enumerate() {
                    if let Some(v) = row[c] {
                        if v.fract() != 0.0 || v < 0.0 || v >= cats.len() as f64 {
                            return Err(Error::Schema(format!(
                                "row {r}, categorical column '{}': code {v} out of range 0..{}",
                                spec.name,
                                cats.len()
                            )));
                        }
                    }
                }
            }
        }
        Ok(Dataset { schema, rows, labels })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn schema(&self) -> &[FeatureSchema] {
        &self.schema
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.schema.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.rows[row][col]
    }

    pub fn row(&self, row: usize) -> &[Option<f64>] {
        &self.rows[row]
    }

    pub fn has_missing(&self) -> bool {
        self.rows.iter().any(|r| r.iter().any(|c| c.is_none()))
    }

    pub fn missing_fraction(&self, col: usize) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        let missing = self.rows.iter().filter(|r| r[col].is_none()).count();
        missing as f64 / self.rows.len() as f64
    }

    /// Count of (class 0, class 1) rows.
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.labels.iter().filter(|&&y| y == 1).count();
        (self.labels.len() - ones, ones)
    }

    /// Dense feature matrix; errors if any cell is still missing.
    pub fn dense(&self) -> Result<Vec<Vec<f64>>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .map(|(c, v)| {
                        v.ok_or_else(|| {
                            Error::Shape(format!(
                                "missing cell at row {r}, column '{}'",
                                self.schema[c].name
                            ))
                        })
                    })
                    .collect()
            })
            .collect()
    }

    /// New dataset keeping only the given columns (ascending order not
    /// required; duplicates not allowed).
    pub fn project(&self, columns: &[usize]) -> Result<Dataset> {
        for (i, &c) in columns.iter().enumerate() {
            if c >= self.schema.len() {
                return Err(Error::Schema(format!("column index {c} out of range")));
            }
            if columns[..i].contains(&c) {
                return Err(Error::Schema(format!("duplicate column index {c}")));
            }
        }
        let schema = columns.iter().map(|&c| self.schema[c].clone()).collect();
        let rows = self
            .rows
            .iter()
            .map(|row| columns.iter().map(|&c| row[c]).collect())
            .collect();
        Dataset::new(schema, rows, self.labels.clone())
    }

    /// New dataset keeping only the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        let mut out_rows = Vec::with_capacity(rows.len());
        let mut out_labels = Vec::with_capacity(rows.len());
        for &r in rows {
            if r >= self.rows.len() {
                return Err(Error::Size(format!("row index {r} out of range")));
            }
            out_rows.push(self.rows[r].clone());
            out_labels.push(self.labels[r]);
        }
        Dataset::new(self.schema.clone(), out_rows, out_labels)
    }

}

/// Replace each categorical value by its first-appearance index and record
/// the mapping in the schema. Idempotent: an already-encoded column (integral
/// codes 0..k with a recorded category list) is left untouched.
pub fn encode_categoricals(d: &Dataset) -> Dataset {
    let mut schema = d.schema.clone();
    let mut rows = d.rows.clone();
    for (c, spec) in schema.iter_mut().enumerate() {
        if spec.kind != FeatureKind::Categorical {
            continue;
        }
        if let Some(cats) = &spec.categories {
            let already = rows.iter().all(|row| match row[c] {
                Some(v) => v.fract() == 0.0 && v >= 0.0 && v < cats.len() as f64,
                None => true,
            });
            if already {
                continue;
            }
        }
        // First-appearance mapping, keyed on the value's bits.
        let mut codes: Vec<f64> = Vec::new();
        let mut names: Vec<String> = Vec::new();
        for row in rows.iter_mut() {
            if let Some(v) = row[c] {
                let idx = match codes.iter().position(|&seen| seen.to_bits() == v.to_bits()) {
                    Some(i) => i,
                    None => {
                        codes.push(v);
                        let name = match &spec.categories {
                            Some(old) if v.fract() == 0.0 && v >= 0.0 && (v as usize) < old.len() => {
                                old[v as usize].clone()
                            }
                            _ => format_cell(v),
                        };
                        names.push(name);
                        codes.len() - 1
                    }
                };
                row[c] = Some(idx as f64);
            }
        }
        spec.categories = Some(names);
    }
    Dataset {
        schema,
        rows,
        labels: d.labels.clone(),
    }
}

/// Shortest display form of a cell value ("3" rather than "3.0").
pub(crate) fn format_cell(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Min-max scale every column to (x - min)/(max - min), with statistics taken
/// from `fit_rows` only. Constant columns map to 0. The output schema is
/// all-numeric: scaled codes are no longer categories.
pub fn normalize_minmax(d: &Dataset, fit_rows: &[usize]) -> Result<(Dataset, Vec<(f64, f64)>)> {
    if fit_rows.is_empty() {
        return Err(Error::Size("normalize_minmax: fit_rows is empty".into()));
    }
    for &r in fit_rows {
        if r >= d.n_rows() {
            return Err(Error::Size(format!("fit row index {r} out of range")));
        }
    }
    let mut stats = Vec::with_capacity(d.n_features());
    for c in 0..d.n_features() {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &r in fit_rows {
            if let Some(v) = d.rows[r][c] {
                min = min.min(v);
                max = max.max(v);
            }
        }
        if !min.is_finite() {
            // Every fit cell missing; treat as constant at 0.
            min = 0.0;
            max = 0.0;
        }
        stats.push((min, max));
    }
    Ok((apply_minmax(d, &stats)?, stats))
}

/// Apply previously fitted per-column (min, max) statistics.
pub fn apply_minmax(d: &Dataset, stats: &[(f64, f64)]) -> Result<Dataset> {
    if stats.len() != d.n_features() {
        return Err(Error::Shape(format!(
            "{} stats for {} columns",
            stats.len(),
            d.n_features()
        )));
    }
    let schema = d
        .schema
        .iter()
        .map(|f| FeatureSchema::numeric(&f.name))
        .collect();
    let rows = d
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .zip(stats)
                .map(|(v, &(min, max))| {
                    v.map(|x| if max > min { (x - min) / (max - min) } else { 0.0 })
                })
                .collect()
        })
        .collect();
    Ok(Dataset {
        schema,
        rows,
        labels: d.labels.clone(),
    })
}

/// Fill every missing cell with the mean of that column over the k nearest
/// rows. Distance is Euclidean over mutually present coordinates, rescaled by
/// the fraction of usable coordinates. Categorical columns round the mean to
/// the nearest valid code.
pub fn knn_impute(d: &Dataset, k: usize) -> Result<Dataset> {
    if k == 0 {
        return Err(Error::Size("knn_impute: k must be positive".into()));
    }
    if !d.has_missing() {
        return Ok(d.clone());
    }
    let n = d.n_rows();
    let p = d.n_features();
    for (c, spec) in d.schema.iter().enumerate() {
        if d.rows.iter().all(|row| row[c].is_none()) {
            return Err(Error::Impute(spec.name.clone()));
        }
    }

    let mut rows = d.rows.clone();
    // Neighbor distances are always measured on the original data so the
    // result is independent of fill order.
    let mut order_buf: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (r, out_row) in rows.iter_mut().enumerate() {
        if d.rows[r].iter().all(|c| c.is_some()) {
            continue;
        }
        order_buf.clear();
        for (s, other) in d.rows.iter().enumerate() {
            if s == r {
                continue;
            }
            if let Some(dist) = nan_euclidean(&d.rows[r], other, p) {
                order_buf.push((dist, s));
            }
        }
        order_buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (c, spec) in d.schema.iter().enumerate() {
            if d.rows[r][c].is_some() {
                continue;
            }
            let mut sum = 0.0;
            let mut used = 0usize;
            for &(_, s) in order_buf.iter() {
                if let Some(v) = d.rows[s][c] {
                    sum += v;
                    used += 1;
                    if used == k {
                        break;
                    }
                }
            }
            if used == 0 {
                return Err(Error::Impute(spec.name.clone()));
            }
            let mut fill = sum / used as f64;
            if spec.kind == FeatureKind::Categorical {
                fill = fill.round().max(0.0);
                if let Some(cats) = &spec.categories {
                    fill = fill.min(cats.len().saturating_sub(1) as f64);
                }
            }
            out_row[c] = Some(fill);
        }
    }
    Ok(Dataset {
        schema: d.schema.clone(),
        rows,
        labels: d.labels.clone(),
    })
}

/// NaN-ignoring Euclidean distance: sqrt(p/p_used * sum over mutually present
/// coordinates). `None` when no coordinate is shared.
fn nan_euclidean(a: &[Option<f64>], b: &[Option<f64>], p: usize) -> Option<f64> {
    let mut sum = 0.0;
    let mut used = 0usize;
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            sum += (x - y) * (x - y);
            used += 1;
        }
    }
    if used == 0 {
        None
    } else {
        Some((sum * p as f64 / used as f64).sqrt())
    }
}

/// Uniform sample of `m` rows without replacement, deterministic per seed.
pub fn random_sample(d: &Dataset, m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::Size("random_sample: m must be positive".into()));
    }
    if m > d.n_rows() {
        return Err(Error::Size(format!(
            "random_sample: m = {m} exceeds {} rows",
            d.n_rows()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, d.n_rows(), m).into_vec();
    idx.sort_unstable();
    d.subset(&idx)
}

/// Per-class proportional split into (train, test). Each class lands at
/// least one row on both sides.
pub fn stratified_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Size(format!(
            "test_fraction {test_fraction} outside (0,1)"
        )));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (r, &y) in d.labels.iter().enumerate() {
        by_class[y as usize].push(r);
    }
    for (y, members) in by_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::Stratify(format!(
                "class {y} has {} rows; need at least 2",
                members.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_idx = Vec::new();
    let mut train_idx = Vec::new();
    for members in by_class.iter() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        let want = (test_fraction * members.len() as f64).round() as usize;
        let take = want.clamp(1, members.len() - 1);
        test_idx.extend_from_slice(&shuffled[..take]);
        train_idx.extend_from_slice(&shuffled[take..]);
    }
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok((d.subset(&train_idx)?, d.subset(&test_idx)?))
}
