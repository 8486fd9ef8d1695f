//! Serializable policy bundles.
//!
//! An artifact carries everything needed to reproduce decisions on raw data:
//! the preprocessing pipeline (scaler + per-group PCA maps), the masked
//! classifier, and the policy graph's inference models. JSON with exact f64
//! round-tripping, so reloaded artifacts predict bit-for-bit identically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureGroup, PcaMap, Scaler};
use crate::error::{Error, Result};
use crate::estimators::MaskedClassifier;
use crate::mdp::PolicyCore;

pub const ARTIFACT_VERSION: u32 = 1;

/// Fitted preprocessing replayed on raw datasets: z-scoring, then PCA per
/// reduced group (ascending group id).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitPipeline {
    pub scaler: Scaler,
    pub pca: Vec<PcaMap>,
}

impl FitPipeline {
    pub fn apply(&self, raw: &Dataset) -> Result<Dataset> {
        let mut d = self.scaler.apply(raw)?;
        for map in &self.pca {
            d = map.apply(&d)?;
        }
        Ok(d)
    }

    /// Transforms one raw row (interactive sessions); equals the row the
    /// batch [`apply`](Self::apply) path would produce.
    pub fn transform_row(&self, raw_groups: &[FeatureGroup], row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.scaler.means.len() {
            return Err(Error::Dimensions(format!(
                "row has {} values, pipeline expects {}",
                row.len(),
                self.scaler.means.len()
            )));
        }
        let mut scaled = row.to_vec();
        self.scaler.apply_row(&mut scaled);
        let mut out = Vec::new();
        let mut start = 0;
        for g in raw_groups {
            let vals = &scaled[start..start + g.dims];
            match self.pca.iter().find(|m| m.group == g.id) {
                Some(map) => out.extend(map.transform_slice(vals)?),
                None => out.extend_from_slice(vals),
            }
            start += g.dims;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyArtifact {
    pub version: u32,
    pub dataset_name: String,
    pub lambda: f64,
    pub budget: Option<usize>,
    /// Group structure expected of RAW input data (pre-pipeline dims).
    pub raw_groups: Vec<FeatureGroup>,
    /// Group structure after the pipeline (PCA-reduced dims).
    pub groups: Vec<FeatureGroup>,
    pub pipeline: FitPipeline,
    pub classifier: MaskedClassifier,
    pub core: PolicyCore,
}

impl PolicyArtifact {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_vec(self).map_err(|e| Error::Artifact(e.to_string()))?;
        // Write via a sibling temp file so failures leave no partial artifact.
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, json).map_err(|source| Error::Io {
            path: tmp.clone(),
            source,
        })?;
        std::fs::rename(&tmp, path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PolicyArtifact> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let artifact: PolicyArtifact =
            serde_json::from_slice(&bytes).map_err(|e| Error::Artifact(e.to_string()))?;
        if artifact.version != ARTIFACT_VERSION {
            return Err(Error::Artifact(format!(
                "artifact version {} unsupported (expected {})",
                artifact.version, ARTIFACT_VERSION
            )));
        }
        Ok(artifact)
    }

    /// Checks a raw dataset against the artifact's expected group structure,
    /// then runs the preprocessing pipeline.
    pub fn prepare(&self, raw: &Dataset) -> Result<Dataset> {
        if raw.n_groups() != self.raw_groups.len() {
            return Err(Error::Data(format!(
                "dataset has {} groups, artifact expects {}",
                raw.n_groups(),
                self.raw_groups.len()
            )));
        }
        for (have, want) in raw.groups().iter().zip(&self.raw_groups) {
            if have.name != want.name || have.dims != want.dims {
                return Err(Error::Data(format!(
                    "group mismatch: dataset has {} ({} dims), artifact expects {} ({} dims)",
                    have.name, have.dims, want.name, want.dims
                )));
            }
        }
        self.pipeline.apply(raw)
    }

    pub fn group_names(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.name.clone()).collect()
    }
}
