//! The full study: preprocess, select nine feature groups, tune and evaluate
//! 9 x 3 x 2 = 54 cells, sensitivity analysis, report emission.

mod report;

pub use report::emit_report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    apply_minmax, encode_categoricals, knn_impute, load_csv, load_schema, normalize_minmax,
    random_sample, stratified_split, synth_generate, Dataset, MissingProfile,
};
use crate::error::{Error, Result};
use crate::feature_selection::{nine_groups, SelectionConfig, SelectionResult};
use crate::learners::{self, Algo, FitOptions};
use crate::metrics::{evaluate, MetricsReport};
use crate::resampling::{smote, SmoteConfig};
use crate::tuning::{
    grid_plan, grid_search, make_objective_with, space_for, ts_optimize, Evaluation, ParamVector,
    TsConfig,
};

/// Stable 64-bit hash (FNV-1a over the tag, master seed mixed in) so derived
/// seeds survive reruns and rebuilds.
pub fn stable_seed(master: u64, tag: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in master.to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synth {
        rows: usize,
        #[serde(default = "default_admit_fraction")]
        admit_fraction: f64,
        /// None = the vitals-heavy default profile.
        #[serde(default)]
        missing: Option<MissingProfile>,
    },
    Csv {
        path: PathBuf,
        schema: PathBuf,
    },
}

fn default_admit_fraction() -> f64 {
    0.2
}

/// When imputation runs relative to sampling/splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ImputeStage {
    /// Impute the full table, then sample (the default pipeline order).
    #[default]
    FullTable,
    /// Sample first, impute the sample.
    AfterSample,
    /// Split first, impute train and test separately (leakage-free; feature
    /// selection then runs on the train split only).
    AfterSplit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub sample_size: usize,
    pub seed: u64,
    pub test_fraction: f64,
    pub impute_k: usize,
    pub impute_stage: ImputeStage,
    pub smote_k: usize,
    pub smote_ratio: f64,
    pub selection: SelectionConfig,
    pub ts: TsConfig,
    /// Evaluation budget for the grid baseline; None matches the tabu
    /// budget (iterations x neighborhood).
    pub grid_budget: Option<u64>,
    /// Evaluate the tuning objective directly on the reporting test split
    /// instead of carving an inner tuning split out of train.
    pub single_split: bool,
    pub tune_fraction: f64,
    /// Full-batch MLP epochs.
    pub mlp_epochs: usize,
    /// Worker threads for matrix cells; 0 = rayon default.
    pub parallelism: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSource::Synth {
                rows: 5000,
                admit_fraction: 0.2,
                missing: None,
            },
            sample_size: 5000,
            seed: 42,
            test_fraction: 0.3,
            impute_k: 4,
            impute_stage: ImputeStage::FullTable,
            smote_k: 5,
            smote_ratio: 1.0,
            selection: SelectionConfig::default(),
            ts: TsConfig::default(),
            grid_budget: None,
            single_split: false,
            tune_fraction: 0.3,
            mlp_epochs: learners::mlp::DEFAULT_EPOCHS,
            parallelism: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// 500 rows, 30 iterations: the quick profile.
    pub fn smoke() -> Self {
        ExperimentConfig {
            data: DataSource::Synth {
                rows: 500,
                admit_fraction: 0.2,
                missing: None,
            },
            sample_size: 500,
            ts: TsConfig {
                max_iterations: 30,
                ..TsConfig::default()
            },
            mlp_epochs: 60,
            ..ExperimentConfig::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.apply_env_seed();
        Ok(cfg)
    }

    /// TABUTUNE_SEED overrides the configured master seed.
    pub fn apply_env_seed(&mut self) {
        if let Ok(s) = std::env::var("TABUTUNE_SEED") {
            if let Ok(seed) = s.trim().parse::<u64>() {
                self.seed = seed;
            }
        }
    }

    pub fn grid_budget(&self) -> u64 {
        self.grid_budget
            .unwrap_or((self.ts.max_iterations * self.ts.neighborhood_size) as u64)
    }
}

/// Preprocessed inputs shared by every matrix cell.
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    /// Per-column min/max fitted per the impute-stage policy, reused for
    /// every normalized view.
    pub norm_stats: Vec<(f64, f64)>,
    pub groups: Vec<SelectionResult>,
    pub feature_names: Vec<String>,
}

pub fn load_source(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.data {
        DataSource::Synth {
            rows,
            admit_fraction,
            missing,
        } => {
            let profile = missing.clone().unwrap_or_else(MissingProfile::triage_default);
            synth_generate(*rows, &profile, *admit_fraction, stable_seed(cfg.seed, "synth"))
        }
        DataSource::Csv { path, schema } => {
            let schema_file = load_schema(schema)?;
            load_csv(path, &schema_file.to_schema(), &schema_file.label_column)
        }
    }
}

/// Load, encode and (for the full-table stage) impute the configured source.
pub fn load_prepared_source(cfg: &ExperimentConfig) -> Result<Dataset> {
    let full = encode_categoricals(&load_source(cfg)?);
    match cfg.impute_stage {
        ImputeStage::FullTable => knn_impute(&full, cfg.impute_k),
        _ => Ok(full),
    }
}

/// Preprocess + select: encode, impute (per stage), sample, scale, nine
/// groups, reporting split.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    prepare_from(&load_prepared_source(cfg)?, cfg)
}

/// [`prepare`] over an already loaded/imputed source table.
pub fn prepare_from(full: &Dataset, cfg: &ExperimentConfig) -> Result<Prepared> {
    if cfg.sample_size > full.n_rows() {
        return Err(Error::Size(format!(
            "sample_size {} exceeds dataset rows {}",
            cfg.sample_size,
            full.n_rows()
        )));
    }
    let sampled = random_sample(full, cfg.sample_size, stable_seed(cfg.seed, "sample"))?;
    let sampled = match cfg.impute_stage {
        ImputeStage::AfterSample => knn_impute(&sampled, cfg.impute_k)?,
        _ => sampled,
    };

    let split_seed = stable_seed(cfg.seed, "split");
    let (train, test, selection_basis) = match cfg.impute_stage {
        ImputeStage::AfterSplit => {
            let (train, test) = stratified_split(&sampled, cfg.test_fraction, split_seed)?;
            let train = knn_impute(&train, cfg.impute_k)?;
            let test = knn_impute(&test, cfg.impute_k)?;
            let basis = train.clone();
            (train, test, basis)
        }
        _ => {
            let (train, test) = stratified_split(&sampled, cfg.test_fraction, split_seed)?;
            (train, test, sampled)
        }
    };

    let fit_rows: Vec<usize> = (0..selection_basis.n_rows()).collect();
    let (normalized_basis, norm_stats) = normalize_minmax(&selection_basis, &fit_rows)?;

    let mut sel_cfg = cfg.selection.clone();
    sel_cfg.seed = stable_seed(cfg.seed, "selection");
    let groups = nine_groups(&selection_basis, &normalized_basis, &sel_cfg)?;

    let feature_names = train.feature_names().iter().map(|s| s.to_string()).collect();
    Ok(Prepared {
        train,
        test,
        norm_stats,
        groups,
        feature_names,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tuner {
    Tabu,
    Grid,
}

impl Tuner {
    pub fn name(&self) -> &'static str {
        match self {
            Tuner::Tabu => "tabu",
            Tuner::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub group: String,
    pub algo: String,
    pub tuner: String,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    /// Best objective value seen while tuning.
    pub tuning_objective: f64,
    pub metrics: Option<MetricsReport>,
    pub trace_path: String,
    pub model_path: String,
    pub wall_seconds: f64,
    pub error: Option<String>,
}

struct CellSpec<'a> {
    group: &'a SelectionResult,
    algo: Algo,
    tuner: Tuner,
}

fn project_stats(stats: &[(f64, f64)], columns: &[usize]) -> Vec<(f64, f64)> {
    columns.iter().map(|&c| stats[c]).collect()
}

fn write_trace(path: &Path, trace: &[Evaluation]) -> Result<()> {
    let mut out = String::new();
    for e in trace {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn run_cell(cfg: &ExperimentConfig, prepared: &Prepared, cell: &CellSpec) -> RunRecord {
    let started = Instant::now();
    let group_name = cell.group.method.name().to_string();
    let cell_tag = format!("{}:{}:{}", group_name, cell.algo.name(), cell.tuner.name());
    let cell_seed = stable_seed(cfg.seed, &cell_tag);
    let space = space_for(cell.algo);
    let param_names: Vec<String> = space.iter().map(|s| s.name.clone()).collect();
    let cells_dir = cfg.out_dir.join("cells");
    let stem = cell_tag.replace(':', "_");
    let trace_path = cells_dir.join(format!("{stem}.trace.jsonl"));
    let model_path = cells_dir.join(format!("{stem}.model.json"));

    let mut record = RunRecord {
        group: group_name,
        algo: cell.algo.name().to_string(),
        tuner: cell.tuner.name().to_string(),
        param_names,
        params: Vec::new(),
        tuning_objective: f64::NAN,
        metrics: None,
        trace_path: trace_path.to_string_lossy().into_owned(),
        model_path: model_path.to_string_lossy().into_owned(),
        wall_seconds: 0.0,
        error: None,
    };

    let outcome = (|| -> Result<()> {
        let columns = &cell.group.selected;
        let train = prepared.train.project(columns)?;
        let test = prepared.test.project(columns)?;
        let stats = project_stats(&prepared.norm_stats, columns);

        // Tuning split: inner carve-out of train unless configured to score
        // the objective on the reporting split directly.
        let (tune_train, tune_eval) = if cfg.single_split {
            (train.clone(), test.clone())
        } else {
            stratified_split(&train, cfg.tune_fraction, stable_seed(cell_seed, "tune-split"))?
        };
        let smote_cfg = SmoteConfig {
            k_neighbors: cfg.smote_k,
            target_ratio: cfg.smote_ratio,
            seed: stable_seed(cell_seed, "smote-tune"),
        };
        let tune_train = smote(&tune_train, &smote_cfg)?;

        let (obj_train, obj_eval) = if cell.algo.needs_normalized_inputs() {
            (apply_minmax(&tune_train, &stats)?, apply_minmax(&tune_eval, &stats)?)
        } else {
            (tune_train, tune_eval)
        };
        let fit_opts = FitOptions {
            mlp_epochs: cfg.mlp_epochs,
        };
        let objective = make_objective_with(
            cell.algo,
            obj_train,
            obj_eval,
            stable_seed(cell_seed, "fit"),
            fit_opts,
        )?;

        let (best_params, best_objective) = match cell.tuner {
            Tuner::Tabu => {
                let ts_cfg = TsConfig {
                    seed: stable_seed(cell_seed, "ts"),
                    ..cfg.ts.clone()
                };
                let result = ts_optimize(&space, &objective, &ts_cfg)?;
                write_trace(&trace_path, &result.trace)?;
                (result.best, result.best_objective)
            }
            Tuner::Grid => {
                let budget = cfg.grid_budget();
                let plan = grid_plan(&space, budget);
                let log = std::sync::Mutex::new(Vec::new());
                let logged = |v: &ParamVector| -> Result<f64> {
                    let value = objective(v)?;
                    log.lock().unwrap().push(Evaluation {
                        iteration: 0,
                        params: v.values().to_vec(),
                        objective: value,
                        accepted: false,
                        tabu_hit: false,
                        diversified: false,
                    });
                    Ok(value)
                };
                let (best, best_objective) = grid_search(&space, &logged, &plan, budget)?;
                let mut trace = log.into_inner().unwrap();
                for (i, e) in trace.iter_mut().enumerate() {
                    e.iteration = i;
                    e.accepted = e.params == best.values();
                }
                write_trace(&trace_path, &trace)?;
                (best, best_objective)
            }
        };

        // Final fit on the full training split, evaluated on the untouched
        // reporting test split.
        let final_smote = SmoteConfig {
            k_neighbors: cfg.smote_k,
            target_ratio: cfg.smote_ratio,
            seed: stable_seed(cell_seed, "smote-final"),
        };
        let train_bal = smote(&train, &final_smote)?;
        let (fit_train, fit_test) = if cell.algo.needs_normalized_inputs() {
            (apply_minmax(&train_bal, &stats)?, apply_minmax(&test, &stats)?)
        } else {
            (train_bal, test.clone())
        };
        let model = learners::fit_with(
            cell.algo,
            &fit_train,
            best_params.values(),
            stable_seed(cell_seed, "fit"),
            &fit_opts,
        )?;
        let scores = model.score(&fit_test)?;
        let metrics = evaluate(fit_test.labels(), &scores, 0.5)?;

        std::fs::write(&model_path, serde_json::to_string(&model)?)?;
        record.params = best_params.values().to_vec();
        record.tuning_objective = best_objective;
        record.metrics = Some(metrics);
        Ok(())
    })();

    if let Err(e) = outcome {
        record.error = Some(e.to_string());
    }
    record.wall_seconds = started.elapsed().as_secs_f64();
    record
}

/// Run all 9 x 3 x 2 cells. Failed cells are recorded, never dropped.
pub fn run_matrix(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    std::fs::create_dir_all(cfg.out_dir.join("cells"))?;
    let prepared = prepare(cfg)?;

    let cells: Vec<CellSpec> = prepared
        .groups
        .iter()
        .flat_map(|group| {
            Algo::ALL.iter().flat_map(move |&algo| {
                [Tuner::Tabu, Tuner::Grid]
                    .iter()
                    .map(move |&tuner| CellSpec { group, algo, tuner })
            })
        })
        .collect();

    let run_all = || -> Vec<RunRecord> {
        cells
            .par_iter()
            .map(|cell| run_cell(cfg, &prepared, cell))
            .collect()
    };
    let records = if cfg.parallelism > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run_all)
    } else {
        run_all()
    };

    persist_inputs(cfg, &prepared, &records)?;
    emit_report(&cfg.out_dir)?;
    Ok(records)
}

fn persist_inputs(cfg: &ExperimentConfig, prepared: &Prepared, records: &[RunRecord]) -> Result<()> {
    #[derive(Serialize)]
    struct SelectionOut<'a> {
        method: &'a str,
        selected: &'a [usize],
        selected_names: Vec<&'a str>,
        scores: &'a [f64],
    }
    let selections: Vec<SelectionOut> = prepared
        .groups
        .iter()
        .map(|g| SelectionOut {
            method: g.method.name(),
            selected: &g.selected,
            selected_names: g.selected.iter().map(|&i| prepared.feature_names[i].as_str()).collect(),
            scores: &g.scores,
        })
        .collect();
    std::fs::write(
        cfg.out_dir.join("selections.json"),
        serde_json::to_string_pretty(&selections)?,
    )?;
    std::fs::write(
        cfg.out_dir.join("features.json"),
        serde_json::to_string_pretty(&prepared.feature_names)?,
    )?;
    std::fs::write(
        cfg.out_dir.join("records.json"),
        serde_json::to_string_pretty(records)?,
    )?;
    Ok(())
}

/// Re-run the best cell's final fit at each sample size with its tuned
/// parameters frozen. Returns (size, auc) pairs.
pub fn sensitivity_analysis(
    cfg: &ExperimentConfig,
    sizes: &[usize],
    records: &[RunRecord],
) -> Result<Vec<(usize, f64)>> {
    if sizes.is_empty() {
        return Ok(Vec::new());
    }
    let best = records
        .iter()
        .filter(|r| r.metrics.is_some())
        .max_by(|a, b| {
            let (x, y) = (a.metrics.as_ref().unwrap().auc, b.metrics.as_ref().unwrap().auc);
            x.partial_cmp(&y).unwrap()
        })
        .ok_or_else(|| Error::Selection("no successful records to analyze".into()))?;
    let algo = Algo::from_name(&best.algo)?;

    let full = load_prepared_source(cfg)?;
    for &size in sizes {
        if size > full.n_rows() {
            return Err(Error::Size(format!(
                "sensitivity size {size} exceeds dataset rows {}",
                full.n_rows()
            )));
        }
    }

    // Column set the best cell was trained on.
    let prepared_groups = prepare_from(&full, cfg)?;
    let group = prepared_groups
        .groups
        .iter()
        .find(|g| g.method.name() == best.group)
        .ok_or_else(|| Error::Selection(format!("group '{}' not found", best.group)))?;

    let mut table = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let tag = format!("sensitivity:{size}");
        let seed = stable_seed(cfg.seed, &tag);
        let sampled = random_sample(&full, size, seed)?;
        let sampled = match cfg.impute_stage {
            ImputeStage::FullTable => sampled,
            _ => knn_impute(&sampled, cfg.impute_k)?,
        };
        let (train, test) = stratified_split(&sampled, cfg.test_fraction, stable_seed(seed, "split"))?;
        let train = train.project(&group.selected)?;
        let test = test.project(&group.selected)?;
        let train = smote(
            &train,
            &SmoteConfig {
                k_neighbors: cfg.smote_k,
                target_ratio: cfg.smote_ratio,
                seed: stable_seed(seed, "smote"),
            },
        )?;
        let (train, test) = if algo.needs_normalized_inputs() {
            let fit_rows: Vec<usize> = (0..train.n_rows()).collect();
            let (train_n, stats) = normalize_minmax(&train, &fit_rows)?;
            (train_n, apply_minmax(&test, &stats)?)
        } else {
            (train, test)
        };
        let model = learners::fit_with(
            algo,
            &train,
            &best.params,
            stable_seed(seed, "fit"),
            &FitOptions { mlp_epochs: cfg.mlp_epochs },
        )?;
        let scores = model.score(&test)?;
        let (auc, _) = crate::metrics::roc_auc(test.labels(), &scores)?;
        table.push((size, auc));
    }
    Ok(table)
}
