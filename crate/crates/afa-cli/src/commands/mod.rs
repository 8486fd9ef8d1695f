pub mod eval;
pub mod export_dot;
pub mod session;
pub mod sweep;
pub mod synth;
pub mod train;

use std::path::{Path, PathBuf};

use afa::dataset::{load_csv, Dataset, Schema};
use anyhow::Result;

/// Loads a raw dataset from a CSV + schema pair.
pub fn load_dataset(csv: &Path, schema: &Path) -> Result<Dataset> {
    let schema = Schema::from_path(schema)?;
    Ok(load_csv(csv, &schema)?)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| afa::Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(())
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
