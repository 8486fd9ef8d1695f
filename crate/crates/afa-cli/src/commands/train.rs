use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

use afa::dataset::split_indices;
use afa::evaluation::MetricsReport;
use afa::export;
use afa::pipeline::{evaluate_artifact, train_on_rows};
use afa::regularisation::policy_stats;

use crate::config::RunConfig;
use super::{ensure_dir, load_dataset, out_path};

#[derive(Args)]
pub struct TrainArgs {
    /// TOML run configuration; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Output directory for the artifact and reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// "schema" or "uniform:<value>".
    #[arg(long)]
    pub costs: Option<String>,
    /// Exploration budget (number of superstates to open).
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Candidate scoring: "sampling" or "random".
    #[arg(long)]
    pub heuristic: Option<String>,
    /// Solve the exact full lattice instead of exploring (<= 15 groups).
    #[arg(long)]
    pub full_lattice: bool,
    /// Hard acquisition budget k.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Enable occupancy regularisation.
    #[arg(long)]
    pub regularise: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Holdout fraction of rows reserved for testing.
    #[arg(long)]
    pub holdout: Option<f64>,
    /// Nyström rank for Q-regressors (0 = exact).
    #[arg(long)]
    pub nystrom_rank: Option<usize>,
    #[arg(long)]
    pub cv_folds: Option<usize>,
    /// Treat regularisation non-convergence as an error (exit code 4).
    #[arg(long)]
    pub strict_convergence: bool,
}

/// Training report written next to the artifact.
#[derive(Serialize)]
struct TrainReport<'a> {
    dataset: &'a str,
    n_train: usize,
    n_test: usize,
    lambda: f64,
    seed: u64,
    node_count: usize,
    visited_nodes: usize,
    train_depth: usize,
    train_mean_return: f64,
    regularisation_converged: Option<bool>,
    test: &'a MetricsReport,
}

pub fn apply_overrides(cfg: &mut RunConfig, args: &TrainArgs) {
    if let Some(p) = &args.csv {
        cfg.data.csv = p.display().to_string();
    }
    if let Some(p) = &args.schema {
        cfg.data.schema = p.display().to_string();
    }
    if let Some(p) = &args.out {
        cfg.run.out = p.display().to_string();
    }
    if let Some(v) = args.lambda {
        cfg.run.lambda = v;
    }
    if let Some(v) = args.seed {
        cfg.run.seed = v;
    }
    if let Some(v) = &args.costs {
        cfg.run.costs = v.clone();
    }
    if let Some(v) = args.n_max {
        cfg.exploration.n_max = v;
    }
    if let Some(v) = &args.heuristic {
        cfg.exploration.heuristic = v.clone();
    }
    if args.full_lattice {
        cfg.exploration.enabled = false;
    }
    if let Some(k) = args.budget {
        cfg.budget.k = Some(k);
    }
    if args.regularise {
        cfg.regularisation.enabled = true;
    }
    if let Some(v) = args.alpha {
        cfg.regularisation.alpha = v;
    }
    if let Some(v) = args.q {
        cfg.regularisation.q = v;
    }
    if let Some(v) = args.holdout {
        cfg.split.kind = "holdout".into();
        cfg.split.fraction = v;
    }
    if let Some(v) = args.nystrom_rank {
        cfg.estimators.nystrom_rank = v;
    }
    if let Some(v) = args.cv_folds {
        cfg.estimators.cv_folds = v;
    }
}

pub fn run(args: TrainArgs) -> Result<i32> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    apply_overrides(&mut cfg, &args);
    if cfg.data.csv.is_empty() || cfg.data.schema.is_empty() {
        bail!(afa::Error::Config(
            "a dataset is required: --csv and --schema (or a config file)".into()
        ));
    }

    // Everything is validated and computed before any output is written.
    let train_cfg = cfg.train_config()?;
    let split = cfg.split_spec()?;
    let raw = load_dataset(cfg.data.csv.as_ref(), cfg.data.schema.as_ref())?;
    let parts = split_indices(raw.labels(), &split)?;
    let index = cfg.split.index;
    if index >= parts.len() {
        bail!(afa::Error::Config(format!(
            "split index {index} out of range ({} parts)",
            parts.len()
        )));
    }
    let (train_rows, test_rows) = &parts[index];
    let raw_test = raw.select_rows(test_rows)?;

    let trace_source = cfg.exploration.trace_test.then_some(&raw_test);
    let trained = train_on_rows(&raw, train_rows, &train_cfg, trace_source)?;
    let (traces, metrics) = evaluate_artifact(&trained.artifact, &raw_test)?;

    let out = PathBuf::from(&cfg.run.out);
    ensure_dir(&out)?;
    std::fs::write(out_path(&out, "config.toml"), cfg.to_toml())
        .map_err(|source| afa::Error::Io { path: out_path(&out, "config.toml"), source })?;

    let names = trained.artifact.group_names();
    let costs: Vec<f64> = trained.artifact.groups.iter().map(|g| g.cost).collect();
    export::write_traces_csv(out_path(&out, "traces.csv"), &traces, &names)?;
    export::write_metrics_csv(out_path(&out, "metrics.csv"), &[metrics.clone()], None)?;
    export::write_usage_csv(out_path(&out, "usage.csv"), &names, &costs, &metrics.usage)?;
    if !trained.trace.is_empty() {
        export::write_exploration_csv(out_path(&out, "exploration.csv"), &trained.trace)?;
    }
    if let Some(report) = &trained.reg_report {
        export::write_regularisation_csv(out_path(&out, "regularisation.csv"), report)?;
    }
    let stats = policy_stats(&trained.graph);
    export::write_dot(
        out_path(&out, "policy.dot"),
        &trained.artifact.core,
        &names,
        Some(&stats.per_node),
    )?;

    let report = TrainReport {
        dataset: raw.name(),
        n_train: train_rows.len(),
        n_test: test_rows.len(),
        lambda: cfg.run.lambda,
        seed: cfg.run.seed,
        node_count: trained.artifact.core.node_count(),
        visited_nodes: stats.visited_nodes,
        train_depth: stats.depth,
        train_mean_return: stats.mean_return,
        regularisation_converged: trained.reg_report.as_ref().map(|r| r.converged),
        test: &metrics,
    };
    std::fs::write(
        out_path(&out, "report.json"),
        serde_json::to_vec_pretty(&report)?,
    )
    .map_err(|source| afa::Error::Io { path: out_path(&out, "report.json"), source })?;

    // The artifact is written last, atomically: error paths above leave none.
    trained.artifact.save(out_path(&out, "policy.json"))?;

    println!(
        "trained {}: {} nodes ({} visited), test AUC {:.4}, mean cost {:.4} -> {}",
        raw.name(),
        report.node_count,
        report.visited_nodes,
        metrics.auc,
        metrics.mean_cost,
        out.display()
    );

    if args.strict_convergence {
        if let Some(false) = report.regularisation_converged {
            eprintln!("warning-as-error: regularisation did not converge");
            return Ok(4);
        }
    }
    Ok(0)
}
