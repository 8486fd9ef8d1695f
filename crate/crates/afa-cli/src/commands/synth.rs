use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;

use afa::dataset::{synth, write_csv, write_schema};

use super::ensure_dir;

#[derive(Args)]
pub struct SynthArgs {
    /// One of: heart, breast, spam, hta.
    #[arg(long)]
    pub dataset: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Directory receiving <name>.csv and <name>.schema.
    #[arg(long, default_value = "data")]
    pub out: PathBuf,
}

pub fn run(args: SynthArgs) -> Result<i32> {
    let d = match args.dataset.as_str() {
        "heart" => synth::heart(args.seed),
        "breast" => synth::breast(args.seed),
        "spam" => synth::spam(args.seed),
        "hta" => synth::hta(args.seed),
        other => bail!(afa::Error::Config(format!(
            "unknown dataset {other:?} (heart|breast|spam|hta)"
        ))),
    };
    ensure_dir(&args.out)?;
    let csv = args.out.join(format!("{}.csv", d.name()));
    let schema = args.out.join(format!("{}.schema", d.name()));
    write_csv(&d, &csv)?;
    write_schema(&d, &schema)?;
    println!(
        "wrote {} ({} rows, {} groups, prevalence {:.2}) and {}",
        csv.display(),
        d.n_rows(),
        d.n_groups(),
        d.prevalence(),
        schema.display()
    );
    Ok(0)
}
