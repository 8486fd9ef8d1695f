use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;

use afa::artifact::PolicyArtifact;
use afa::export;
use afa::mdp::Superstate;
use afa::pipeline::evaluate_artifact;

use super::{ensure_dir, load_dataset, out_path};

#[derive(Args)]
pub struct EvalArgs {
    /// Trained policy artifact (policy.json).
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, default_value = "afa-eval")]
    pub out: PathBuf,
}

pub fn run(args: EvalArgs) -> Result<i32> {
    let artifact = PolicyArtifact::load(&args.policy)?;
    let raw = load_dataset(&args.csv, &args.schema)?;
    let (traces, metrics) = evaluate_artifact(&artifact, &raw)?;

    // Budgeted artifacts must never exceed their acquisition cap.
    if let Some(k) = artifact.budget {
        if let Some(t) = traces.iter().find(|t| t.depth() > k) {
            bail!(afa::Error::Policy(format!(
                "instance {} acquired {} groups under budget {k}",
                t.instance,
                t.depth()
            )));
        }
    }

    ensure_dir(&args.out)?;
    let names = artifact.group_names();
    let costs: Vec<f64> = artifact.groups.iter().map(|g| g.cost).collect();
    export::write_traces_csv(out_path(&args.out, "traces.csv"), &traces, &names)?;
    export::write_metrics_csv(out_path(&args.out, "metrics.csv"), &[metrics.clone()], None)?;
    export::write_usage_csv(out_path(&args.out, "usage.csv"), &names, &costs, &metrics.usage)?;

    // Shade the DOT export by test-set visits.
    let mut visits: std::collections::BTreeMap<Superstate, (usize, usize)> =
        artifact.core.superstates().map(|s| (s, (0, 0))).collect();
    for t in &traces {
        for (s, _) in &t.steps {
            visits.get_mut(s).unwrap().0 += 1;
        }
        visits.get_mut(&t.terminal).unwrap().1 += 1;
    }
    export::write_dot(out_path(&args.out, "policy.dot"), &artifact.core, &names, Some(&visits))?;

    println!(
        "evaluated {} instances: AUC {:.4}, accuracy {:.4}, mean cost {:.4}, max depth {} -> {}",
        traces.len(),
        metrics.auc,
        metrics.accuracy,
        metrics.mean_cost,
        metrics.max_depth,
        args.out.display()
    );
    Ok(0)
}
