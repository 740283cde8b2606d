use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tabutune::dataset::{
    apply_minmax, encode_categoricals, knn_impute, load_csv, load_schema, normalize_minmax,
    random_sample, save_schema, synth_generate, synth_schema, write_csv, Dataset, MissingProfile,
    SchemaFile,
};
use tabutune::experiment::{
    emit_report, prepare, run_matrix, sensitivity_analysis, stable_seed, DataSource,
    ExperimentConfig, RunRecord,
};
use tabutune::feature_selection::{nine_groups, SelectionConfig};
use tabutune::learners::Algo;
use tabutune::resampling::{smote, SmoteConfig};
use tabutune::tuning::{grid_plan, grid_search, make_objective, space_for, ts_optimize, TsConfig};
use tabutune::{Error, Result};

#[derive(Parser)]
#[command(name = "tabutune", about = "Tabu-search hyperparameter tuning study runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic triage-style CSV.
    Synth {
        #[arg(long)]
        rows: usize,
        #[arg(long = "admit-frac", default_value_t = 0.2)]
        admit_frac: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the matching schema declaration JSON here.
        #[arg(long = "schema-out")]
        schema_out: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Skip missing-value injection.
        #[arg(long = "no-missing", default_value_t = false)]
        no_missing: bool,
    },
    /// Encode, impute and sample a CSV; write the prepared CSV.
    Prep {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long = "impute-k", default_value_t = 4)]
        impute_k: usize,
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the feature-selection stage and write the nine groups.
    Select {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// all = the full nine-group fan-out (the only mode).
        #[arg(long, default_value = "all")]
        groups: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Tabu-search tuning of one algorithm on one feature group.
    Tune {
        #[arg(long, value_parser = ["gbt", "adab", "mlp"])]
        algo: String,
        #[arg(long, default_value = "all")]
        group: String,
        #[arg(long, default_value_t = 300)]
        iters: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Grid-search baseline of one algorithm on one feature group.
    Grid {
        #[arg(long, value_parser = ["gbt", "adab", "mlp"])]
        algo: String,
        #[arg(long, default_value = "all")]
        group: String,
        #[arg(long, default_value_t = 3000)]
        budget: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// The full 54-cell matrix.
    Matrix {
        #[arg(long)]
        config: Option<PathBuf>,
        /// 500 rows / 30 iterations quick profile.
        #[arg(long, default_value_t = false)]
        smoke: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-evaluate the best matrix cell across sample sizes.
    Sensitivity {
        /// Comma-separated sample sizes, e.g. 1000,5000,20000.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render the report bundle from a matrix output directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn env_seed(default: u64) -> u64 {
    std::env::var("TABUTUNE_SEED")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(default)
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => {
            let mut cfg = ExperimentConfig::default();
            cfg.apply_env_seed();
            Ok(cfg)
        }
    }
}

fn load_encoded_csv(input: &Path, schema: &Path) -> Result<Dataset> {
    let schema_file = load_schema(schema)?;
    let d = load_csv(input, &schema_file.to_schema(), &schema_file.label_column)?;
    Ok(encode_categoricals(&d))
}

/// Shared prep for the single-cell `tune` and `grid` commands: prepare the
/// configured data, project the group, rebalance, hand (train, eval) to the
/// tuner.
fn tune_one_cell(
    algo_name: &str,
    group: &str,
    config: Option<&PathBuf>,
    out: &PathBuf,
    tuner: impl FnOnce(&ExperimentConfig, Algo, Dataset, Dataset, u64) -> Result<(Vec<f64>, f64, usize)>,
) -> Result<()> {
    let started = std::time::Instant::now();
    let cfg = load_config(config)?;
    let algo = Algo::from_name(algo_name)?;
    let prepared = prepare(&cfg)?;
    let selection = prepared
        .groups
        .iter()
        .find(|g| g.method.name() == group)
        .ok_or_else(|| Error::Config(format!("unknown group '{group}'")))?;
    let train = prepared.train.project(&selection.selected)?;
    let test = prepared.test.project(&selection.selected)?;
    let train = smote(
        &train,
        &SmoteConfig {
            k_neighbors: cfg.smote_k,
            target_ratio: cfg.smote_ratio,
            seed: stable_seed(cfg.seed, "cli-smote"),
        },
    )?;
    let (train, test) = if algo.needs_normalized_inputs() {
        let stats: Vec<(f64, f64)> = selection
            .selected
            .iter()
            .map(|&c| prepared.norm_stats[c])
            .collect();
        (apply_minmax(&train, &stats)?, apply_minmax(&test, &stats)?)
    } else {
        (train, test)
    };

    std::fs::create_dir_all(out)?;
    let seed = stable_seed(cfg.seed, &format!("cli:{group}:{algo_name}"));
    let (params, auc, iterations) = tuner(&cfg, algo, train, test, seed)?;
    let space = space_for(algo);
    let summary = serde_json::json!({
        "algo": algo_name,
        "group": group,
        "param_names": space.iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
        "best_params": params,
        "best_auc": auc,
        "iterations": iterations,
        "wall_seconds": started.elapsed().as_secs_f64(),
    });
    let path = out.join(format!("{group}_{algo_name}_summary.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
    println!("best auc {auc:.4}, summary written to {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            rows,
            admit_frac,
            out,
            schema_out,
            seed,
            no_missing,
        } => {
            let profile = if no_missing {
                MissingProfile::none()
            } else {
                MissingProfile::triage_default()
            };
            let d = synth_generate(rows, &profile, admit_frac, env_seed(seed))?;
            write_csv(&d, "disposition", &out)?;
            if let Some(schema_path) = schema_out {
                let schema = SchemaFile::from_schema(&synth_schema(), "disposition");
                save_schema(&schema, &schema_path)?;
            }
            println!("wrote {} rows to {}", d.n_rows(), out.display());
        }
        Command::Prep {
            input,
            schema,
            impute_k,
            sample,
            seed,
            out,
        } => {
            let seed = env_seed(seed);
            let mut d = load_encoded_csv(&input, &schema)?;
            d = knn_impute(&d, impute_k)?;
            if let Some(m) = sample {
                d = random_sample(&d, m, stable_seed(seed, "sample"))?;
            }
            let schema_file = load_schema(&schema)?;
            write_csv(&d, &schema_file.label_column, &out)?;
            println!("prepared {} rows -> {}", d.n_rows(), out.display());
        }
        Command::Select {
            input,
            schema,
            groups,
            seed,
            out,
        } => {
            if groups != "all" {
                return Err(Error::Config(format!(
                    "unsupported --groups value '{groups}'; use 'all'"
                )));
            }
            let d = knn_impute(&load_encoded_csv(&input, &schema)?, 4)?;
            let fit_rows: Vec<usize> = (0..d.n_rows()).collect();
            let (normalized, _) = normalize_minmax(&d, &fit_rows)?;
            let sel_cfg = SelectionConfig {
                seed: stable_seed(env_seed(seed), "selection"),
                ..SelectionConfig::default()
            };
            let results = nine_groups(&d, &normalized, &sel_cfg)?;
            std::fs::create_dir_all(&out)?;
            let json: Vec<serde_json::Value> = results
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "method": r.method.name(),
                        "selected": r.selected,
                        "selected_names": r.selected_names(&d),
                        "scores": r.scores,
                    })
                })
                .collect();
            let path = out.join("selections.json");
            std::fs::write(&path, serde_json::to_string_pretty(&json)?)?;
            println!("wrote {}", path.display());
        }
        Command::Tune {
            algo,
            group,
            iters,
            config,
            out,
        } => {
            tune_one_cell(&algo, &group, config.as_ref(), &out, |cfg, algo, train, test, seed| {
                let objective = make_objective(algo, train, test, stable_seed(seed, "fit"))?;
                let ts_cfg = TsConfig {
                    max_iterations: iters,
                    seed: stable_seed(seed, "ts"),
                    ..cfg.ts.clone()
                };
                let space = space_for(algo);
                let result = ts_optimize(&space, &objective, &ts_cfg)?;
                Ok((result.best.values().to_vec(), result.best_objective, iters))
            })?;
        }
        Command::Grid {
            algo,
            group,
            budget,
            config,
            out,
        } => {
            tune_one_cell(&algo, &group, config.as_ref(), &out, |_cfg, algo, train, test, seed| {
                let objective = make_objective(algo, train, test, stable_seed(seed, "fit"))?;
                let space = space_for(algo);
                let plan = grid_plan(&space, budget);
                let (best, auc) = grid_search(&space, &objective, &plan, budget)?;
                let evaluations: usize = plan.iter().product();
                Ok((best.values().to_vec(), auc, evaluations))
            })?;
        }
        Command::Matrix { config, smoke, out } => {
            let mut cfg = if smoke && config.is_none() {
                let mut c = ExperimentConfig::smoke();
                c.apply_env_seed();
                c
            } else {
                let mut c = load_config(config.as_ref())?;
                if smoke {
                    c.data = DataSource::Synth {
                        rows: 500,
                        admit_fraction: 0.2,
                        missing: None,
                    };
                    c.sample_size = 500;
                    c.ts.max_iterations = 30;
                    c.grid_budget = None;
                }
                c
            };
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            let records = run_matrix(&cfg)?;
            let ok = records.iter().filter(|r| r.error.is_none()).count();
            println!(
                "matrix complete: {ok}/{} cells ok, report in {}",
                records.len(),
                cfg.out_dir.display()
            );
        }
        Command::Sensitivity { sizes, config, out } => {
            let mut cfg = load_config(config.as_ref())?;
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            let records_path = cfg.out_dir.join("records.json");
            if !records_path.exists() {
                return Err(Error::Config(format!(
                    "{} not found; run `tabutune matrix` first",
                    records_path.display()
                )));
            }
            let records: Vec<RunRecord> =
                serde_json::from_str(&std::fs::read_to_string(&records_path)?)?;
            let table = sensitivity_analysis(&cfg, &sizes, &records)?;
            let mut csv = String::from("sample_size,auc\n");
            for (size, auc) in &table {
                csv.push_str(&format!("{size},{auc:.6}\n"));
                println!("size {size}: auc {auc:.4}");
            }
            std::fs::write(cfg.out_dir.join("sensitivity.csv"), csv)?;
        }
        Command::Report { dir } => {
            emit_report(&dir)?;
            println!("report rendered in {}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
