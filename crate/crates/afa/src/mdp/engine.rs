//! Backward-induction solver over explicit superstate sets.
//!
//! Superstates are visited in decreasing depth. At each node the Finish
//! value is the tabulated per-instance CV reward; each acquire action whose
//! child is in the set gets a Q-regressor of the child's value vector on the
//! node's own features; the node value is the instance-wise max.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use ndarray::Array1;
use rayon::prelude::*;

use super::graph::{NodeModels, NodeTrain, PolicyCore, PolicyGraph};
use super::superstate::Superstate;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{median_bandwidths, CvClassifier, QModel, QTrainer};
use crate::util::{mix_seed, tags};

/// Per-instance terminal reward of finishing at a superstate (Eq.-4 style:
/// correctness minus lambda times the acquisition cost).
#[derive(Debug, Clone)]
pub struct TerminalReward {
    pub acc: Array1<u8>,
    pub cost: f64,
    pub lambda: f64,
}

impl TerminalReward {
    pub fn reward(&self) -> Array1<f64> {
        self.acc.mapv(|a| a as f64 - self.lambda * self.cost)
    }
}

/// Terminal reward of superstate `s`: held-out CV correctness minus
/// lambda times the summed cost of the acquired groups.
pub fn terminal_reward(d: &Dataset, s: Superstate, lambda: f64, cv: &CvClassifier) -> TerminalReward {
    let cols = d.cols_of_groups(s.groups());
    TerminalReward {
        acc: cv.masked_accuracy(&cols),
        cost: d.cost_of_groups(s.groups()),
        lambda,
    }
}

/// All 2^f superstates (use only for small f).
pub fn full_lattice(f: usize) -> BTreeSet<Superstate> {
    assert!(f <= 20, "full lattice requested for f = {f}");
    (0..(1u64 << f)).map(Superstate::from_bits).collect()
}

/// Immutable training context shared by solving, exploration, and
/// regularisation: data, reward scale, Q-trainer, CV rewards, seeds.
pub struct Engine<'a> {
    data: &'a Dataset,
    lambda: f64,
    trainer: QTrainer,
    cv: &'a CvClassifier,
    seed: u64,
    bandwidths: Vec<f64>,
    /// Bounded scratch cache of terminal accuracy vectors for heuristic
    /// scoring; values are pure functions of the mask so capacity only
    /// affects speed.
    acc_cache: Mutex<HashMap<u64, Arc<Array1<u8>>>>,
}

const ACC_CACHE_CAP: usize = 4096;

impl<'a> Engine<'a> {
    pub fn new(
        data: &'a Dataset,
        lambda: f64,
        trainer: QTrainer,
        cv: &'a CvClassifier,
        seed: u64,
    ) -> Engine<'a> {
        assert!(
            data.n_groups() <= 64,
            "superstate masks support at most 64 groups"
        );
        Engine {
            data,
            lambda,
            trainer,
            cv,
            seed,
            bandwidths: median_bandwidths(data.values()),
            acc_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn cv(&self) -> &CvClassifier {
        self.cv
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trainer(&self) -> QTrainer {
        self.trainer
    }

    pub fn group_count(&self) -> usize {
        self.data.n_groups()
    }

    /// Cached held-out CV correctness for a superstate.
    pub fn terminal_acc(&self, s: Superstate) -> Arc<Array1<u8>> {
        if let Some(hit) = self.acc_cache.lock().unwrap().get(&s.bits()) {
            return hit.clone();
        }
        let cols = self.data.cols_of_groups(s.groups());
        let acc = Arc::new(self.cv.masked_accuracy(&cols));
        let mut cache = self.acc_cache.lock().unwrap();
        if cache.len() < ACC_CACHE_CAP {
            cache.insert(s.bits(), acc.clone());
        }
        acc
    }

    /// Terminal reward vector acc - lambda * cost of `s`.
    pub fn terminal_values(&self, s: Superstate) -> Array1<f64> {
        let acc = self.terminal_acc(s);
        let cost = self.data.cost_of_groups(s.groups());
        acc.mapv(|a| a as f64 - self.lambda * cost)
    }

    /// Fits one (superstate, action) edge; `action_code` is the group id or
    /// `u64::MAX` for Finish. Pure function of (node columns, targets, seed).
    pub(crate) fn fit_edge(
        &self,
        s: Superstate,
        action_code: u64,
        targets: &Array1<f64>,
    ) -> Result<(QModel, Array1<f64>)> {
        let cols = self.data.cols_of_groups(s.groups());
        let salt = mix_seed(self.seed, &[tags::LANDMARKS, s.bits(), action_code]);
        self.trainer.fit(
            self.data.values(),
            &cols,
            targets.view(),
            &self.bandwidths,
            salt,
        )
    }

    /// Solves the MDP restricted to `nodes` (no penalties, no budget).
    pub fn solve_full(&self, nodes: &BTreeSet<Superstate>) -> Result<PolicyGraph> {
        self.resolve(nodes, &BTreeMap::new(), None)
    }

    /// General solve: per-node entry penalties (virtual rewards) and an
    /// optional hard acquisition budget.
    ///
    /// `nodes` must contain the root and be root-connected (every non-root
    /// node reachable by removing groups one at a time inside the set).
    pub fn resolve(
        &self,
        nodes: &BTreeSet<Superstate>,
        penalties: &BTreeMap<Superstate, f64>,
        budget: Option<usize>,
    ) -> Result<PolicyGraph> {
        self.check_root_connected(nodes)?;
        let f = self.group_count();

        // Depth-descending postorder; nodes within a depth are independent.
        let mut by_depth: BTreeMap<usize, Vec<Superstate>> = BTreeMap::new();
        for &s in nodes {
            by_depth.entry(s.depth()).or_default().push(s);
        }

        let mut train: BTreeMap<Superstate, NodeTrain> = BTreeMap::new();
        let mut models: BTreeMap<Superstate, NodeModels> = BTreeMap::new();
        for (_depth, level) in by_depth.iter().rev() {
            let solved: Vec<(Superstate, NodeTrain, NodeModels)> = level
                .par_iter()
                .map(|&s| self.solve_node(s, f, nodes, penalties, budget, &train))
                .collect::<Result<Vec<_>>>()?;
            for (s, t, m) in solved {
                train.insert(s, t);
                models.insert(s, m);
            }
        }

        Ok(PolicyGraph {
            core: PolicyCore {
                lambda: self.lambda,
                budget,
                group_count: f,
                nodes: models,
            },
            train,
        })
    }

    fn solve_node(
        &self,
        s: Superstate,
        f: usize,
        nodes: &BTreeSet<Superstate>,
        penalties: &BTreeMap<Superstate, f64>,
        budget: Option<usize>,
        solved: &BTreeMap<Superstate, NodeTrain>,
    ) -> Result<(Superstate, NodeTrain, NodeModels)> {
        let acc_arc = self.terminal_acc(s);
        let cost = self.data.cost_of_groups(s.groups());
        let terminal = acc_arc.mapv(|a| a as f64 - self.lambda * cost);
        let closed = budget.is_some_and(|k| s.depth() >= k);

        let mut q_train: BTreeMap<usize, Array1<f64>> = BTreeMap::new();
        let mut acquires: BTreeMap<usize, QModel> = BTreeMap::new();
        let mut value = terminal.clone();
        if !closed {
            for g in s.missing(f) {
                let child = s.with(g);
                if !nodes.contains(&child) {
                    continue;
                }
                let child_train = &solved[&child];
                let target = match penalties.get(&child) {
                    Some(&p) => &child_train.value + p,
                    None => child_train.value.clone(),
                };
                let (model, in_sample) = self.fit_edge(s, g as u64, &target)?;
                for (v, q) in value.iter_mut().zip(in_sample.iter()) {
                    if *q > *v {
                        *v = *q;
                    }
                }
                q_train.insert(g, in_sample);
                acquires.insert(g, model);
            }
        }
        let (finish, _) = self.fit_edge(s, u64::MAX, &terminal)?;

        Ok((
            s,
            NodeTrain {
                acc: Array1::clone(&acc_arc),
                terminal,
                entry_penalty: penalties.get(&s).copied().unwrap_or(0.0),
                value,
                q_train,
            },
            NodeModels {
                closed,
                cost,
                finish,
                acquires,
            },
        ))
    }

    fn check_root_connected(&self, nodes: &BTreeSet<Superstate>) -> Result<()> {
        if !nodes.contains(&Superstate::EMPTY) {
            return Err(Error::Policy("node set must contain the root".into()));
        }
        for &s in nodes {
            if !s.is_root() && !s.parents().any(|(_, p)| nodes.contains(&p)) {
                return Err(Error::Policy(format!(
                    "node {s} has no parent in the set (not root-connected)"
                )));
            }
        }
        Ok(())
    }
}

/// Closes every node at depth >= `k` (only Finish available there) and
/// re-propagates values above by re-running the postorder solve.
pub fn apply_budget(engine: &Engine, pg: &PolicyGraph, k: usize) -> Result<PolicyGraph> {
    let nodes: BTreeSet<Superstate> = pg.superstates().collect();
    let penalties: BTreeMap<Superstate, f64> = pg
        .train
        .iter()
        .filter(|(_, t)| t.entry_penalty != 0.0)
        .map(|(&s, t)| (s, t.entry_penalty))
        .collect();
    engine.resolve(&nodes, &penalties, Some(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth::{random_unique, scalar_dataset, ScalarFeature};
    use crate::estimators::ClassifierSpec;
    use crate::mdp::superstate::Action;

    fn cv_for(d: &Dataset, folds: usize, seed: u64) -> CvClassifier {
        CvClassifier::fit(d, folds, &ClassifierSpec::default(), seed).unwrap()
    }

    #[test]
    fn terminal_reward_matches_eq4_arithmetic() {
        let feats = [
            ScalarFeature::new("a", 10.0, 3.0),
            ScalarFeature::new("b", 5.0, 0.5),
        ];
        let d = scalar_dataset("t", 80, 0.5, &feats, 31);
        let cv = cv_for(&d, 5, 3);
        let s = Superstate::from_groups([0, 1]);
        let tr = terminal_reward(&d, s, 0.01, &cv);
        assert_eq!(tr.cost, 15.0);
        let r = tr.reward();
        for i in 0..d.n_rows() {
            let want = tr.acc[i] as f64 - 0.01 * 15.0;
            assert_eq!(r[i], want);
        }
        // lambda = 0: reward equals accuracy exactly
        let tr0 = terminal_reward(&d, s, 0.0, &cv);
        for (r, a) in tr0.reward().iter().zip(tr0.acc.iter()) {
            assert_eq!(*r, *a as f64);
        }
    }

    #[test]
    fn single_node_policy_always_finishes() {
        let feats = [ScalarFeature::new("a", 1.0, 2.0)];
        let d = scalar_dataset("s", 60, 0.5, &feats, 32);
        let cv = cv_for(&d, 5, 4);
        let engine = Engine::new(&d, 0.1, QTrainer::Ridge { rank: None, ridge: 1e-3 }, &cv, 7);
        let mut nodes = BTreeSet::new();
        nodes.insert(Superstate::EMPTY);
        let pg = engine.solve_full(&nodes).unwrap();
        assert_eq!(pg.node_count(), 1);
        for i in 0..d.n_rows() {
            assert_eq!(pg.greedy_train_action(Superstate::EMPTY, i), Action::Finish);
        }
        let mean_acc = pg.train_node(Superstate::EMPTY).unwrap().acc.iter().map(|&a| a as f64).sum::<f64>() / 60.0;
        assert!((pg.train_return() - mean_acc).abs() < 1e-12);
    }

    #[test]
    fn huge_lambda_finishes_at_root() {
        let feats = [
            ScalarFeature::new("a", 1.0, 3.0),
            ScalarFeature::new("b", 1.0, 1.0),
        ];
        let d = scalar_dataset("s", 60, 0.5, &feats, 33);
        let cv = cv_for(&d, 5, 5);
        let engine = Engine::new(&d, 1e3, QTrainer::Ridge { rank: None, ridge: 1e-3 }, &cv, 7);
        let pg = engine.solve_full(&full_lattice(2)).unwrap();
        for i in 0..d.n_rows() {
            let steps = pg.replay_train(i);
            assert_eq!(steps, vec![(Superstate::EMPTY, Action::Finish)]);
        }
    }

    #[test]
    fn informative_cheap_feature_is_acquired() {
        // Feature 0 is near-perfectly predictive, feature 1 is noise; both cost
        // 0.1 at lambda 1: optimal play acquires exactly feature 0.
        let feats = [
            ScalarFeature::new("signal", 0.1, 6.0),
            ScalarFeature::new("noise", 0.1, 0.0),
        ];
        let d = scalar_dataset("s", 150, 0.5, &feats, 34);
        let cv = cv_for(&d, 10, 6);
        let engine = Engine::new(&d, 1.0, QTrainer::Ridge { rank: None, ridge: 1e-3 }, &cv, 7);
        let pg = engine.solve_full(&full_lattice(2)).unwrap();
        // Inference-side behavior: the regressed Finish value at the root is
        // the population mean (~0.5), so every instance acquires the signal,
        // then finishes once per-instance rewards are predictable.
        let mut exactly_signal = 0;
        let mut returns = 0.0;
        for i in 0..d.n_rows() {
            let row = d.row(i);
            let mut s = Superstate::EMPTY;
            let mut steps = Vec::new();
            loop {
                let a = pg.core.greedy_action(s, &row).unwrap();
                steps.push(a);
                match a {
                    Action::Finish => break,
                    Action::Acquire(g) => s = s.with(g),
                }
            }
            returns += pg.train_node(s).unwrap().terminal[i];
            if steps == vec![Action::Acquire(0), Action::Finish] {
                exactly_signal += 1;
            }
        }
        assert!(
            exactly_signal >= 135,
            "only {exactly_signal}/150 played acquire-signal-then-finish"
        );
        let ret = returns / d.n_rows() as f64;
        assert!((ret - 0.9).abs() < 0.1, "mean realized return {ret} vs ~1 - 0.1");
    }

    #[test]
    fn rejects_disconnected_node_sets() {
        let feats = [ScalarFeature::new("a", 1.0, 1.0), ScalarFeature::new("b", 1.0, 1.0)];
        let d = scalar_dataset("s", 40, 0.5, &feats, 35);
        let cv = cv_for(&d, 4, 7);
        let engine = Engine::new(&d, 0.1, QTrainer::Ridge { rank: None, ridge: 1e-3 }, &cv, 7);
        // {root, {0,1}} misses both depth-1 parents.
        let mut nodes = BTreeSet::new();
        nodes.insert(Superstate::EMPTY);
        nodes.insert(Superstate::from_groups([0, 1]));
        assert!(matches!(engine.resolve(&nodes, &BTreeMap::new(), None), Err(Error::Policy(_))));
        // no root at all
        let mut no_root = BTreeSet::new();
        no_root.insert(Superstate::from_groups([0]));
        assert!(engine.resolve(&no_root, &BTreeMap::new(), None).is_err());
    }

    #[test]
    fn bellman_consistency_with_interpolating_regressor() {
        let d = random_unique(30, 3, (0.0, 0.1), 36);
        let cv = cv_for(&d, 5, 8);
        let engine = Engine::new(&d, 1.0, QTrainer::Interpolating, &cv, 7);
        let pg = engine.solve_full(&full_lattice(3)).unwrap();
        for s in pg.superstates() {
            let t = pg.train_node(s).unwrap();
            for i in 0..d.n_rows() {
                assert!(t.value[i] >= t.terminal[i] - 1e-6);
                for q in t.q_train.values() {
                    assert!(t.value[i] >= q[i] - 1e-6);
                }
            }
        }
    }

    #[test]
    fn budget_zero_always_finishes_and_high_budget_is_identity() {
        let feats = [
            ScalarFeature::new("a", 0.05, 2.0),
            ScalarFeature::new("b", 0.05, 1.0),
        ];
        let d = scalar_dataset("s", 80, 0.5, &feats, 37);
        let cv = cv_for(&d, 5, 9);
        let engine = Engine::new(&d, 1.0, QTrainer::Ridge { rank: None, ridge: 1e-3 }, &cv, 7);
        let pg = engine.solve_full(&full_lattice(2)).unwrap();

        let pg0 = apply_budget(&engine, &pg, 0).unwrap();
        for i in 0..d.n_rows() {
            assert_eq!(pg0.replay_train(i), vec![(Superstate::EMPTY, Action::Finish)]);
        }

        let pg_hi = apply_budget(&engine, &pg, 5).unwrap();
        for i in 0..d.n_rows() {
            assert_eq!(pg_hi.replay_train(i), pg.replay_train(i));
        }

        let pg1 = apply_budget(&engine, &pg, 1).unwrap();
        for i in 0..d.n_rows() {
            assert!(pg1.replay_train(i).len() - 1 <= 1);
        }
    }
}
