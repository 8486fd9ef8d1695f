use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use afa::artifact::PolicyArtifact;
use afa::export;
use afa::mdp::Superstate;
use afa::pipeline::evaluate_artifact;

use super::load_dataset;

#[derive(Args)]
pub struct ExportDotArgs {
    /// Trained policy artifact (policy.json).
    #[arg(long)]
    pub policy: PathBuf,
    /// Output DOT file.
    #[arg(long, default_value = "policy.dot")]
    pub out: PathBuf,
    /// Optional dataset whose episodes shade nodes by visit count.
    #[arg(long, requires = "schema")]
    pub csv: Option<PathBuf>,
    #[arg(long, requires = "csv")]
    pub schema: Option<PathBuf>,
}

pub fn run(args: ExportDotArgs) -> Result<i32> {
    let artifact = PolicyArtifact::load(&args.policy)?;
    let names = artifact.group_names();
    let visits = match (&args.csv, &args.schema) {
        (Some(csv), Some(schema)) => {
            let raw = load_dataset(csv, schema)?;
            let (traces, _) = evaluate_artifact(&artifact, &raw)?;
            let mut counts: std::collections::BTreeMap<Superstate, (usize, usize)> =
                artifact.core.superstates().map(|s| (s, (0, 0))).collect();
            for t in &traces {
                for (s, _) in &t.steps {
                    counts.get_mut(s).unwrap().0 += 1;
                }
                counts.get_mut(&t.terminal).unwrap().1 += 1;
            }
            Some(counts)
        }
        _ => None,
    };
    export::write_dot(&args.out, &artifact.core, &names, visits.as_ref())?;
    println!(
        "wrote {} ({} nodes)",
        args.out.display(),
        artifact.core.node_count()
    );
    Ok(0)
}
