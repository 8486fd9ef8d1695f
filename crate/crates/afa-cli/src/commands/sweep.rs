use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;

use afa::export;
use afa::pipeline::lambda_sweep;

use crate::config::RunConfig;
use super::{ensure_dir, load_dataset, out_path};

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated lambda values, e.g. "0,0.001,0.01".
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambdas: Vec<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: SweepArgs) -> Result<i32> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &args.csv {
        cfg.data.csv = p.display().to_string();
    }
    if let Some(p) = &args.schema {
        cfg.data.schema = p.display().to_string();
    }
    if let Some(p) = &args.out {
        cfg.run.out = p.display().to_string();
    }
    if let Some(s) = args.seed {
        cfg.run.seed = s;
    }
    if cfg.data.csv.is_empty() || cfg.data.schema.is_empty() {
        bail!(afa::Error::Config(
            "a dataset is required: --csv and --schema (or a config file)".into()
        ));
    }

    let mut distinct: Vec<f64> = Vec::new();
    for &l in &args.lambdas {
        if distinct.contains(&l) {
            eprintln!("warning: duplicate lambda {l} ignored");
        } else {
            distinct.push(l);
        }
    }

    let raw = load_dataset(cfg.data.csv.as_ref(), cfg.data.schema.as_ref())?;
    let split = cfg.split_spec()?;
    let base = cfg.train_config()?;
    let points = lambda_sweep(&raw, &distinct, &split, &base)?;

    let out = PathBuf::from(&cfg.run.out);
    ensure_dir(&out)?;
    let rows: Vec<(f64, afa::evaluation::AggregateReport)> = points
        .into_iter()
        .map(|p| (p.lambda, p.aggregate))
        .collect();
    export::write_sweep_csv(out_path(&out, "frontier.csv"), &rows)?;

    println!("swept {} lambda values -> {}", rows.len(), out.display());
    for (lambda, agg) in &rows {
        println!(
            "  lambda {lambda}: accuracy {:.4} +- {:.4}, mean cost {:.4}",
            agg.accuracy.0, agg.accuracy.1, agg.mean_cost.0
        );
    }
    Ok(0)
}
