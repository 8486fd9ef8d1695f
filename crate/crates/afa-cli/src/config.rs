//! Run configuration: one human-readable TOML file, echoed with resolved
//! defaults into the output directory for provenance. Command-line flags
//! override individual fields.

use std::path::Path;

use serde::{Deserialize, Serialize};

use afa::dataset::{SplitKind, SplitSpec};
use afa::error::{Error, Result};
use afa::exploration::{ExploreConfig, Heuristic};
use afa::pipeline::{CostMode, EstimatorConfig, TrainConfig};
use afa::regularisation::RegularisationConfig;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    pub run: RunSection,
    pub split: SplitSection,
    pub exploration: ExplorationSection,
    pub estimators: EstimatorsSection,
    pub budget: BudgetSection,
    pub regularisation: RegularisationSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub csv: String,
    pub schema: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub lambda: f64,
    /// "schema" or "uniform:<value>".
    pub costs: String,
    pub out: String,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 7,
            lambda: 1e-3,
            costs: "schema".into(),
            out: "afa-out".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    /// "holdout" | "bootstrap" | "kfold".
    pub kind: String,
    pub fraction: f64,
    /// Bootstrap repetitions or fold count.
    pub count: usize,
    /// Which (train, test) part `train` uses.
    pub index: usize,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            kind: "holdout".into(),
            fraction: 0.2,
            count: 10,
            index: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplorationSection {
    /// false = exact full-lattice solve (needs <= 15 groups).
    pub enabled: bool,
    pub n_max: usize,
    /// "sampling" | "random".
    pub heuristic: String,
    pub n_samples: usize,
    pub rescore: bool,
    /// 0 disables the plateau stop.
    pub plateau: usize,
    /// Per-step test metrics in the exploration trace (slow).
    pub trace_test: bool,
}

impl Default for ExplorationSection {
    fn default() -> Self {
        ExplorationSection {
            enabled: true,
            n_max: 200,
            heuristic: "sampling".into(),
            n_samples: 16,
            rescore: false,
            plateau: 0,
            trace_test: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorsSection {
    /// 0 = exact kernel solve.
    pub nystrom_rank: usize,
    pub ridge: f64,
    pub cv_folds: usize,
    pub classifier_rank: usize,
    pub classifier_ridge: f64,
    /// Reduce any group wider than this to this many PCA modes (0 = off).
    pub pca_modes: usize,
}

impl Default for EstimatorsSection {
    fn default() -> Self {
        EstimatorsSection {
            nystrom_rank: 200,
            ridge: 1e-3,
            cv_folds: 10,
            classifier_rank: 8,
            classifier_ridge: 1.0,
            pca_modes: 5,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    /// Hard acquisition cap; absent = unconstrained.
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularisationSection {
    pub enabled: bool,
    pub q: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub literal_form: bool,
}

impl Default for RegularisationSection {
    fn default() -> Self {
        RegularisationSection {
            enabled: false,
            q: 0.5,
            alpha: 0.05,
            epsilon: 1e-3,
            max_iters: 10,
            literal_form: false,
        }
    }
}

impl RunConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn cost_mode(&self) -> Result<CostMode> {
        parse_cost_mode(&self.run.costs)
    }

    pub fn split_spec(&self) -> Result<SplitSpec> {
        let kind = match self.split.kind.as_str() {
            "holdout" => SplitKind::Holdout {
                fraction: self.split.fraction,
            },
            "bootstrap" => SplitKind::Bootstrap {
                reps: self.split.count,
            },
            "kfold" => SplitKind::KFold { k: self.split.count },
            other => {
                return Err(Error::Config(format!(
                    "unknown split kind {other:?} (holdout|bootstrap|kfold)"
                )))
            }
        };
        let spec = SplitSpec {
            seed: self.run.seed,
            kind,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn heuristic(&self) -> Result<Heuristic> {
        match self.exploration.heuristic.as_str() {
            "sampling" => Ok(Heuristic::Sampling {
                n_samples: self.exploration.n_samples,
            }),
            "random" => Ok(Heuristic::Random),
            other => Err(Error::Config(format!(
                "unknown heuristic {other:?} (sampling|random)"
            ))),
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let exploration = if self.exploration.enabled {
            Some(ExploreConfig {
                n_max: self.exploration.n_max,
                heuristic: self.heuristic()?,
                rescore: self.exploration.rescore,
                plateau: match self.exploration.plateau {
                    0 => None,
                    p => Some(p),
                },
                max_depth: None,
            })
        } else {
            None
        };
        let regularisation = if self.regularisation.enabled {
            let rc = RegularisationConfig {
                q: self.regularisation.q,
                alpha: self.regularisation.alpha,
                epsilon: self.regularisation.epsilon,
                max_iters: self.regularisation.max_iters,
                literal_form: self.regularisation.literal_form,
            };
            rc.validate()?;
            Some(rc)
        } else {
            None
        };
        Ok(TrainConfig {
            lambda: self.run.lambda,
            costs: self.cost_mode()?,
            pca_modes: match self.estimators.pca_modes {
                0 => None,
                m => Some(m),
            },
            estimator: EstimatorConfig {
                nystrom_rank: match self.estimators.nystrom_rank {
                    0 => None,
                    r => Some(r),
                },
                ridge: self.estimators.ridge,
                cv_folds: self.estimators.cv_folds,
                classifier_rank: self.estimators.classifier_rank,
                classifier_ridge: self.estimators.classifier_ridge,
            },
            exploration,
            budget: self.budget.k,
            regularisation,
            seed: self.run.seed,
            trace_test: self.exploration.trace_test,
        })
    }
}

pub fn parse_cost_mode(text: &str) -> Result<CostMode> {
    if text == "schema" {
        return Ok(CostMode::Schema);
    }
    if let Some(v) = text.strip_prefix("uniform:") {
        let value: f64 = v
            .parse()
            .map_err(|_| Error::Config(format!("bad uniform cost {v:?}")))?;
        return Ok(CostMode::Uniform { value });
    }
    Err(Error::Config(format!(
        "costs must be \"schema\" or \"uniform:<value>\", got {text:?}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.run.seed, 7);
        assert_eq!(back.exploration.n_max, 200);
        assert!(back.budget.k.is_none());
    }

    #[test]
    fn cost_mode_parsing() {
        assert!(matches!(parse_cost_mode("schema"), Ok(CostMode::Schema)));
        match parse_cost_mode("uniform:0.05") {
            Ok(CostMode::Uniform { value }) => assert_eq!(value, 0.05),
            other => panic!("{other:?}"),
        }
        assert!(parse_cost_mode("flat").is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = "[run]\nseeed = 4\n";
        assert!(toml::from_str::<RunConfig>(text).is_err());
    }
}
