use std::io::{BufRead, Write};
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use afa::artifact::PolicyArtifact;
use afa::mdp::{Action, Superstate};

#[derive(Args)]
pub struct SessionArgs {
    /// Trained policy artifact (policy.json).
    #[arg(long)]
    pub policy: PathBuf,
    /// Where the session transcript is written (also on abort).
    #[arg(long, default_value = "session_transcript.txt")]
    pub transcript: PathBuf,
}

/// Interactive acquisition loop: prints the recommended next measurement,
/// reads its value(s), and finishes with a diagnosis. Entering "quit" (or
/// closing stdin) aborts with a partial transcript and exit code 1.
pub fn run(args: SessionArgs) -> Result<i32> {
    let artifact = PolicyArtifact::load(&args.policy)?;
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();

    let raw_cols: usize = artifact.raw_groups.iter().map(|g| g.dims).sum();
    let mut raw_row = vec![0.0f64; raw_cols];
    let mut transcript: Vec<String> = Vec::new();
    let mut state = Superstate::EMPTY;

    let save = |transcript: &[String]| -> Result<()> {
        std::fs::write(&args.transcript, transcript.join("\n") + "\n").map_err(|source| {
            afa::Error::Io { path: args.transcript.clone(), source }
        })?;
        Ok(())
    };

    loop {
        let row = artifact
            .pipeline
            .transform_row(&artifact.raw_groups, &raw_row)?;
        match artifact.core.greedy_action(state, &row)? {
            Action::Finish => {
                let p = artifact.classifier.predict_proba(&row, state.bits());
                let label = u8::from(p > 0.5);
                writeln!(out, "finish: predicted label {label} (probability {p:.6})")?;
                transcript.push(format!("finish p={p:.6} label={label}"));
                save(&transcript)?;
                return Ok(0);
            }
            Action::Acquire(g) => {
                let group = &artifact.raw_groups[g];
                writeln!(
                    out,
                    "acquire {} (cost {}): enter {} value(s)",
                    group.name, group.cost, group.dims
                )?;
                out.flush()?;
                let values = loop {
                    let line = match lines.next() {
                        Some(Ok(line)) => line,
                        Some(Err(_)) | None => {
                            transcript.push("aborted".into());
                            save(&transcript)?;
                            writeln!(out, "aborted; partial transcript saved")?;
                            return Ok(1);
                        }
                    };
                    let trimmed = line.trim();
                    if trimmed.eq_ignore_ascii_case("quit") || trimmed.eq_ignore_ascii_case("abort")
                    {
                        transcript.push("aborted".into());
                        save(&transcript)?;
                        writeln!(out, "aborted; partial transcript saved")?;
                        return Ok(1);
                    }
                    let parsed: std::result::Result<Vec<f64>, _> = trimmed
                        .split([',', ' ', '\t'])
                        .filter(|t| !t.is_empty())
                        .map(str::parse::<f64>)
                        .collect();
                    match parsed {
                        Ok(vals) if vals.len() == group.dims => break vals,
                        Ok(vals) => {
                            writeln!(
                                out,
                                "expected {} value(s), got {}; try again",
                                group.dims,
                                vals.len()
                            )?;
                        }
                        Err(_) => {
                            writeln!(out, "could not parse numbers; try again")?;
                        }
                    }
                    out.flush()?;
                };
                let start: usize = artifact.raw_groups[..g].iter().map(|x| x.dims).sum();
                raw_row[start..start + group.dims].copy_from_slice(&values);
                transcript.push(format!(
                    "acquire {} = {}",
                    group.name,
                    values
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                ));
                state = state.with(g);
            }
        }
    }
}
