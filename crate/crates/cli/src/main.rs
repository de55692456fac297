use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dygrace::datagen::{generate_coauthor, generate_tree_cycles};
use dygrace::drift::detect;
use dygrace::eval::{self, Family, RunConfig};
use dygrace::explainer::ExplainerState;
use dygrace::{save_dataset, GraphId};

#[derive(Parser)]
#[command(name = "dygrace", version, about = "Counterfactual explanations on evolving graph datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the evaluation and generator seeds.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    TreeCycles,
    Coauthor,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset file.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Overrides the family from the configuration.
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        /// Output dataset file (JSON lines).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the cross-validated pipeline and write its reports.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Explain one graph of a snapshot with a saved explainer checkpoint.
    Explain {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset file holding the snapshot.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 0)]
        t: usize,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Kolmogorov-Smirnov drift test between two error samples.
    Drift {
        /// Whitespace-separated reals.
        #[arg(long)]
        prev: PathBuf,
        #[arg(long)]
        curr: PathBuf,
        #[arg(long, default_value_t = dygrace::drift::DEFAULT_SIGNIFICANCE)]
        significance: f64,
        #[arg(long, default_value_t = 0)]
        t: usize,
    },
    /// Aggregate a per-fold metrics CSV.
    Report {
        /// metrics.csv written by `run`.
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    Ok(cfg)
}

fn read_reals(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.split_whitespace()
        .map(|tok| tok.parse::<f64>().with_context(|| format!("{}: not a number: {tok:?}", path.display())))
        .collect()
}

fn print_aggregate(rows: &[eval::AggregateRow]) {
    println!("dataset\tt\tfolds\truntime_s\tcorr@1\tcorr@k\tspars@1\tspars@k\tged@1\tged@k\toracle_calls");
    for r in rows {
        println!(
            "{}\t{}\t{}\t{:.3}±{:.3}\t{:.2}±{:.3}\t{:.2}±{:.3}\t{:.2}±{:.3}\t{:.2}±{:.3}\t{:.2}±{:.3}\t{:.2}±{:.3}\t{:.2}±{:.2}",
            r.dataset,
            r.t,
            r.folds,
            r.runtime_s_mean,
            r.runtime_s_std,
            r.correctness_at_1_mean,
            r.correctness_at_1_std,
            r.correctness_at_k_mean,
            r.correctness_at_k_std,
            r.sparsity_at_1_mean,
            r.sparsity_at_1_std,
            r.sparsity_at_k_mean,
            r.sparsity_at_k_std,
            r.ged_at_1_mean,
            r.ged_at_1_std,
            r.ged_at_k_mean,
            r.ged_at_k_std,
            r.oracle_calls_mean,
            r.oracle_calls_std,
        );
    }
}

fn run_pipeline(mut cfg: RunConfig, out: Option<PathBuf>, k: Option<usize>, folds: Option<usize>) -> Result<()> {
    if let Some(k) = k {
        cfg.explainer.k = k;
    }
    if let Some(f) = folds {
        cfg.eval.folds = f;
    }
    if let Some(o) = out {
        cfg.output_dir = Some(o);
    }
    cfg.validate()?;
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("dygrace-out"));

    let cv = eval::run_cv(&cfg)?;
    if cv.folds.is_empty() {
        bail!("every fold failed; first reason: {}", cv.failed.first().map_or("unknown", |f| f.reason.as_str()));
    }
    let records = cv.records();
    let files = eval::write_report(&records, &dir)?;
    eval::write_drift(&cv.drift_records(), dir.join("drift.csv"))?;
    fs::write(dir.join("config.toml"), cfg.to_toml_string()?)?;

    let mut w = BufWriter::new(fs::File::create(dir.join("explanations.jsonl"))?);
    for f in &cv.folds {
        for e in &f.explanations {
            let mut value = serde_json::to_value(e)?;
            value["fold"] = f.fold.into();
            writeln!(w, "{}", serde_json::to_string(&value)?)?;
        }
    }
    w.flush()?;

    let ckpt = dir.join("checkpoints");
    fs::create_dir_all(&ckpt)?;
    for f in &cv.folds {
        fs::write(ckpt.join(format!("fold{}.json", f.fold)), serde_json::to_string(&f.state)?)?;
    }
    for f in &cv.failed {
        eprintln!("warning: fold {} failed: {}", f.fold, f.reason);
    }
    print_aggregate(&eval::aggregate(&records));
    log::info!("reports written to {}", files.metrics.parent().unwrap_or(&dir).display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common, family, out } => {
            let cfg = load_config(&common)?;
            let family = match family {
                Some(FamilyArg::TreeCycles) => Family::TreeCycles,
                Some(FamilyArg::Coauthor) => Family::Coauthor,
                None => cfg.dataset.family,
            };
            let data = match family {
                Family::TreeCycles => generate_tree_cycles(&cfg.dataset.tree_cycles)?,
                Family::Coauthor => generate_coauthor(&cfg.dataset.coauthor)?,
            };
            save_dataset(&data, &out).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Run { common, out, k, folds } => run_pipeline(load_config(&common)?, out, k, folds)?,
        Command::Explain { checkpoint, dataset, query, t, k } => {
            let text = fs::read_to_string(&checkpoint).with_context(|| format!("reading {}", checkpoint.display()))?;
            let mut state: ExplainerState = serde_json::from_str(&text).context("parsing checkpoint")?;
            state.f0.check_shapes()?;
            state.f1.check_shapes()?;
            if let Some(k) = k {
                state.config.k = k;
            }
            let data = dygrace::load_dataset(&dataset)?;
            let snapshot = data.snapshot(t).with_context(|| format!("dataset has no snapshot {t}"))?;
            let id = GraphId::new(query);
            let q = snapshot.get(&id).with_context(|| format!("graph {id} is not in snapshot {t}"))?;
            let pool: Vec<_> = snapshot.graphs().collect();
            let mut e = state.explain(&q.graph, &pool)?;
            e.t = t;
            println!("{}", serde_json::to_string(&e)?);
        }
        Command::Drift { prev, curr, significance, t } => {
            if !(0.0..=1.0).contains(&significance) {
                bail!("significance must lie in [0, 1]");
            }
            let r = detect(t, &read_reals(&prev)?, &read_reals(&curr)?, significance)?;
            println!("{}", serde_json::to_string(&r)?);
        }
        Command::Report { records, out } => {
            let rows = eval::read_records(&records)?;
            let files = eval::write_report(&rows, &out)?;
            print_aggregate(&eval::aggregate(&rows));
            log::info!("aggregate written to {}", files.aggregate.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dygrace: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
