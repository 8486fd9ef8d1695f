//! End-to-end training orchestration: preprocessing, CV rewards, solving or
//! exploring, budgets, regularisation, and artifact assembly.

use serde::{Deserialize, Serialize};

use crate::artifact::{FitPipeline, PolicyArtifact, ARTIFACT_VERSION};
use crate::dataset::{Dataset, PcaMap, Scaler, SplitSpec};
use crate::error::{Error, Result};
use crate::estimators::{ClassifierSpec, CvClassifier, QTrainer};
use crate::evaluation::{self, AggregateReport, EpisodeTrace, MetricsReport};
use crate::exploration::{explore, CurveRow, ExploreConfig};
use crate::mdp::{apply_budget, full_lattice, Engine, PolicyGraph};
use crate::regularisation::{policy_stats, regularise, PolicyStats, RegularisationConfig, RegularisationReport};
use crate::util::{mix_seed, tags};

/// Upper bound on full-lattice solves; beyond this exploration is required.
pub const FULL_LATTICE_MAX_GROUPS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CostMode {
    /// Use the acquisition costs declared in the schema.
    Schema,
    /// Override every group cost with one value.
    Uniform { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Nyström rank for Q-regressors (None = exact kernel solve).
    pub nystrom_rank: Option<usize>,
    pub ridge: f64,
    pub cv_folds: usize,
    /// Landmarks per column of the masked classifier.
    pub classifier_rank: usize,
    pub classifier_ridge: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            nystrom_rank: Some(200),
            ridge: 1e-3,
            cv_folds: 10,
            classifier_rank: 8,
            classifier_ridge: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub costs: CostMode,
    /// Reduce any group wider than this to this many PCA modes.
    pub pca_modes: Option<usize>,
    pub estimator: EstimatorConfig,
    /// None = exact full-lattice solve (group count <= 15 enforced).
    pub exploration: Option<ExploreConfig>,
    /// Hard acquisition budget k.
    pub budget: Option<usize>,
    pub regularisation: Option<RegularisationConfig>,
    pub seed: u64,
    /// Evaluate the test set after every exploration step (costly; only
    /// honoured when a test set is supplied for tracing).
    pub trace_test: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 1e-3,
            costs: CostMode::Schema,
            pca_modes: Some(5),
            estimator: EstimatorConfig::default(),
            exploration: Some(ExploreConfig::default()),
            budget: None,
            regularisation: None,
            seed: 7,
            trace_test: false,
        }
    }
}

/// A trained policy with its training-side graph and run records.
pub struct TrainedPolicy {
    pub artifact: PolicyArtifact,
    pub graph: PolicyGraph,
    pub trace: Vec<CurveRow>,
    pub reg_report: Option<RegularisationReport>,
    pub stats: PolicyStats,
}

fn override_costs(raw: &Dataset, mode: CostMode) -> Result<Dataset> {
    match mode {
        CostMode::Schema => Ok(raw.clone()),
        CostMode::Uniform { value } => {
            if !(value >= 0.0) {
                return Err(Error::Config("uniform cost must be nonnegative".into()));
            }
            let mut groups = raw.groups().to_vec();
            for g in &mut groups {
                g.cost = value;
            }
            Dataset::new(
                raw.name().to_string(),
                groups,
                raw.values().to_owned(),
                raw.labels().clone(),
            )
        }
    }
}

/// Trains a policy on `train_rows` of `raw`. The preprocessing pipeline is
/// fit on those rows only. `trace_test` rows (raw) enable per-step test
/// metrics in the exploration trace.
pub fn train_on_rows(
    raw: &Dataset,
    train_rows: &[usize],
    cfg: &TrainConfig,
    trace_test: Option<&Dataset>,
) -> Result<TrainedPolicy> {
    if cfg.lambda < 0.0 {
        return Err(Error::Config("lambda must be nonnegative".into()));
    }
    let costed = override_costs(raw, cfg.costs)?;

    // Preprocessing: z-score, then PCA on wide groups, all fit on train rows.
    let scaler = Scaler::fit(&costed, Some(train_rows));
    let mut prepared = scaler.apply(&costed)?;
    let mut pca_maps: Vec<PcaMap> = Vec::new();
    if let Some(modes) = cfg.pca_modes {
        if modes == 0 {
            return Err(Error::Config("pca_modes must be >= 1".into()));
        }
        for g in 0..prepared.n_groups() {
            if prepared.group(g).dims > modes {
                let map = PcaMap::fit(&prepared, g, modes, Some(train_rows))?;
                prepared = map.apply(&prepared)?;
                pca_maps.push(map);
            }
        }
    }

    let d_train = prepared.select_rows(train_rows)?;
    let classifier_spec = ClassifierSpec {
        per_column_rank: cfg.estimator.classifier_rank,
        ridge: cfg.estimator.classifier_ridge,
        ..Default::default()
    };
    let cv = CvClassifier::fit(
        &d_train,
        cfg.estimator.cv_folds,
        &classifier_spec,
        mix_seed(cfg.seed, &[tags::CLASSIFIER]),
    )?;
    let trainer = QTrainer::Ridge {
        rank: cfg.estimator.nystrom_rank,
        ridge: cfg.estimator.ridge,
    };
    let engine = Engine::new(&d_train, cfg.lambda, trainer, &cv, cfg.seed);

    let pipeline = FitPipeline {
        scaler,
        pca: pca_maps,
    };
    let traced_test = match (cfg.trace_test, trace_test) {
        (true, Some(t)) => Some(pipeline.apply(&override_costs(t, cfg.costs)?)?),
        _ => None,
    };

    let (mut graph, trace) = match &cfg.exploration {
        Some(ex) => {
            let mut ex = *ex;
            if let (Some(k), None) = (cfg.budget, ex.max_depth) {
                ex.max_depth = Some(k);
            }
            let run = explore(&engine, &ex, traced_test.as_ref())?;
            (run.policy, run.trace)
        }
        None => {
            let f = prepared.n_groups();
            if f > FULL_LATTICE_MAX_GROUPS {
                return Err(Error::Config(format!(
                    "full-lattice solve limited to {FULL_LATTICE_MAX_GROUPS} groups (got {f}); use exploration"
                )));
            }
            (engine.solve_full(&full_lattice(f))?, Vec::new())
        }
    };

    if let Some(k) = cfg.budget {
        graph = apply_budget(&engine, &graph, k)?;
    }

    let reg_report = match &cfg.regularisation {
        Some(rc) => {
            let (g, report) = regularise(&engine, &graph, rc)?;
            graph = g;
            Some(report)
        }
        None => None,
    };

    let stats = policy_stats(&graph);
    let artifact = PolicyArtifact {
        version: ARTIFACT_VERSION,
        dataset_name: raw.name().to_string(),
        lambda: cfg.lambda,
        budget: cfg.budget,
        raw_groups: raw.groups().to_vec(),
        groups: prepared.groups().to_vec(),
        pipeline,
        classifier: cv.full_model().clone(),
        core: graph.core.clone(),
    };
    Ok(TrainedPolicy {
        artifact,
        graph,
        trace,
        reg_report,
        stats,
    })
}

/// Applies an artifact's pipeline to raw test data and evaluates episodes.
pub fn evaluate_artifact(
    artifact: &PolicyArtifact,
    raw_test: &Dataset,
) -> Result<(Vec<EpisodeTrace>, MetricsReport)> {
    let prepared = artifact.prepare(raw_test)?;
    evaluation::evaluate(&artifact.core, &artifact.classifier, &prepared)
}

/// One row of a cost-accuracy frontier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub aggregate: AggregateReport,
}

/// Full train/evaluate per lambda per split; one aggregated point per
/// distinct lambda (duplicates are collapsed, order preserved).
pub fn lambda_sweep(
    raw: &Dataset,
    lambdas: &[f64],
    split: &SplitSpec,
    base: &TrainConfig,
) -> Result<Vec<SweepPoint>> {
    if lambdas.is_empty() {
        return Err(Error::Config("sweep needs at least one lambda".into()));
    }
    let mut seen: Vec<f64> = Vec::new();
    for &l in lambdas {
        if !seen.contains(&l) {
            seen.push(l);
        }
    }
    let parts = crate::dataset::split_indices(raw.labels(), split)?;
    let mut points = Vec::with_capacity(seen.len());
    for &lambda in &seen {
        let mut reports = Vec::with_capacity(parts.len());
        for (train_rows, test_rows) in &parts {
            let cfg = TrainConfig {
                lambda,
                ..base.clone()
            };
            let trained = train_on_rows(raw, train_rows, &cfg, None)?;
            let raw_test = raw.select_rows(test_rows)?;
            let (_, report) = evaluate_artifact(&trained.artifact, &raw_test)?;
            reports.push(report);
        }
        points.push(SweepPoint {
            lambda,
            aggregate: evaluation::aggregate(&reports)?,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth;
    use crate::dataset::SplitKind;

    fn quick_cfg() -> TrainConfig {
        TrainConfig {
            lambda: 0.01,
            estimator: EstimatorConfig {
                nystrom_rank: Some(64),
                cv_folds: 5,
                classifier_rank: 4,
                ..Default::default()
            },
            exploration: Some(ExploreConfig {
                n_max: 6,
                ..Default::default()
            }),
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn trains_and_evaluates_on_a_small_surrogate() {
        let d = synth::breast(1);
        let rows: Vec<usize> = (0..500).collect();
        let trained = train_on_rows(&d, &rows, &quick_cfg(), None).unwrap();
        assert_eq!(trained.artifact.core.node_count(), 6);
        assert_eq!(trained.trace.len(), 6);
        let test_rows: Vec<usize> = (500..d.n_rows()).collect();
        let raw_test = d.select_rows(&test_rows).unwrap();
        let (traces, report) = evaluate_artifact(&trained.artifact, &raw_test).unwrap();
        assert_eq!(traces.len(), raw_test.n_rows());
        assert!(report.auc > 0.7, "auc {}", report.auc);
        assert!(report.auc <= 1.0);
    }

    #[test]
    fn artifact_roundtrip_reproduces_decisions_exactly() {
        let d = synth::breast(2);
        let rows: Vec<usize> = (0..400).collect();
        let trained = train_on_rows(&d, &rows, &quick_cfg(), None).unwrap();
        let dir = std::env::temp_dir().join("afa-pipeline-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("policy.json");
        trained.artifact.save(&path).unwrap();
        let loaded = crate::artifact::PolicyArtifact::load(&path).unwrap();

        let test_rows: Vec<usize> = (400..600).collect();
        let raw_test = d.select_rows(&test_rows).unwrap();
        let (a, _) = evaluate_artifact(&trained.artifact, &raw_test).unwrap();
        let (b, _) = evaluate_artifact(&loaded, &raw_test).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.steps, y.steps);
            assert_eq!(x.probability, y.probability);
        }
    }

    #[test]
    fn pca_pipeline_reduces_wide_groups() {
        let d = synth::hta(3);
        let rows: Vec<usize> = (0..180).collect();
        let cfg = TrainConfig {
            lambda: 0.02,
            exploration: None, // full lattice over 5 groups
            estimator: EstimatorConfig {
                nystrom_rank: Some(64),
                cv_folds: 5,
                classifier_rank: 4,
                ..Default::default()
            },
            ..Default::default()
        };
        let trained = train_on_rows(&d, &rows, &cfg, None).unwrap();
        assert!(trained.artifact.groups.iter().all(|g| g.dims == 5));
        assert_eq!(trained.artifact.raw_groups[0].dims, 40);
        assert_eq!(trained.artifact.core.node_count(), 32);
        let test_rows: Vec<usize> = (180..248).collect();
        let raw_test = d.select_rows(&test_rows).unwrap();
        let (_, report) = evaluate_artifact(&trained.artifact, &raw_test).unwrap();
        assert!(report.auc > 0.6, "auc {}", report.auc);
    }

    #[test]
    fn row_transform_matches_batch_preparation() {
        let d = synth::hta(9);
        let rows: Vec<usize> = (0..150).collect();
        let cfg = TrainConfig {
            exploration: Some(ExploreConfig { n_max: 4, ..Default::default() }),
            estimator: EstimatorConfig {
                nystrom_rank: Some(32),
                cv_folds: 4,
                classifier_rank: 4,
                ..Default::default()
            },
            ..Default::default()
        };
        let trained = train_on_rows(&d, &rows, &cfg, None).unwrap();
        let prepared = trained.artifact.prepare(&d).unwrap();
        for i in [0usize, 7, 200] {
            let via_row = trained
                .artifact
                .pipeline
                .transform_row(&trained.artifact.raw_groups, &d.row(i))
                .unwrap();
            let via_batch = prepared.row(i);
            assert_eq!(via_row.len(), via_batch.len());
            for (a, b) in via_row.iter().zip(via_batch.iter()) {
                assert!((a - b).abs() < 1e-12, "row {i}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn full_lattice_guard_rejects_wide_datasets() {
        let d = synth::spam(1);
        let rows: Vec<usize> = (0..1000).collect();
        let cfg = TrainConfig {
            exploration: None,
            ..quick_cfg()
        };
        assert!(matches!(
            train_on_rows(&d, &rows, &cfg, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn uniform_cost_override_is_applied() {
        let d = synth::heart(4);
        let rows: Vec<usize> = (0..400).collect();
        let cfg = TrainConfig {
            costs: CostMode::Uniform { value: 0.5 },
            ..quick_cfg()
        };
        let trained = train_on_rows(&d, &rows, &cfg, None).unwrap();
        // Terminal node costs are multiples of 0.5.
        for s in trained.artifact.core.superstates() {
            let cost = trained.artifact.core.node(s).unwrap().cost;
            let units = cost / 0.5;
            assert!((units - units.round()).abs() < 1e-9, "cost {cost}");
        }
    }

    #[test]
    fn budget_is_stored_and_enforced() {
        let d = synth::breast(5);
        let rows: Vec<usize> = (0..500).collect();
        let cfg = TrainConfig {
            budget: Some(2),
            exploration: Some(ExploreConfig {
                n_max: 12,
                ..Default::default()
            }),
            ..quick_cfg()
        };
        let trained = train_on_rows(&d, &rows, &cfg, None).unwrap();
        assert_eq!(trained.artifact.budget, Some(2));
        let test_rows: Vec<usize> = (500..683).collect();
        let raw_test = d.select_rows(&test_rows).unwrap();
        let (traces, _) = evaluate_artifact(&trained.artifact, &raw_test).unwrap();
        assert!(traces.iter().all(|t| t.depth() <= 2));
    }

    #[test]
    fn sweep_produces_one_point_per_distinct_lambda() {
        let d = synth::breast(6);
        let split = SplitSpec {
            seed: 5,
            kind: SplitKind::Holdout { fraction: 0.25 },
        };
        let base = quick_cfg();
        let points = lambda_sweep(&d, &[0.0, 0.05, 0.0], &split, &base).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[0].lambda, 0.0);
        assert_eq!(points[1].lambda, 0.05);
        // The no-penalty endpoint acquires at least as much as the penalized one.
        assert!(points[0].aggregate.mean_cost.0 >= points[1].aggregate.mean_cost.0 - 1e-9);
    }
}
