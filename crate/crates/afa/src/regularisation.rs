//! Sparse policy compaction via occupancy-measure penalties.
//!
//! A trained policy often spreads instances over many superstates that
//! contribute nothing (redundant features route arbitrarily). The penalty
//! sum_f |mu(S_f)|^q with 0 < q < 1 discourages low-traffic superstates; its
//! linearisation around the current occupancy turns into a per-visit
//! "virtual reward" -alpha q mu^(q-1) charged on entering each node. The
//! optimisation alternates: measure occupancy, drop zero-occupancy nodes,
//! re-solve with the virtual reward, until the visited set stops changing.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Engine, PolicyGraph, Superstate};

/// Expected per-episode visit mass per superstate over the training
/// population (the root always carries mass 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMeasure {
    pub visits: BTreeMap<Superstate, f64>,
    pub population: usize,
}

impl OccupancyMeasure {
    pub fn get(&self, s: Superstate) -> f64 {
        self.visits.get(&s).copied().unwrap_or(0.0)
    }

    /// Superstates with positive mass.
    pub fn visited(&self) -> BTreeSet<Superstate> {
        self.visits
            .iter()
            .filter(|(_, &m)| m > 0.0)
            .map(|(&s, _)| s)
            .collect()
    }
}

/// Replays every training instance's greedy episode and counts node visits.
pub fn occupancy(pg: &PolicyGraph) -> OccupancyMeasure {
    let n = pg.n_train();
    let mut counts: BTreeMap<Superstate, usize> = pg.superstates().map(|s| (s, 0)).collect();
    for i in 0..n {
        for (s, _) in pg.replay_train(i) {
            *counts.get_mut(&s).expect("replay stays in graph") += 1;
        }
    }
    OccupancyMeasure {
        visits: counts
            .into_iter()
            .map(|(s, c)| (s, c as f64 / n as f64))
            .collect(),
        population: n,
    }
}

/// The smooth L_q relaxation of the visited-superstate count:
/// sum over nodes of mu^q (0^q = 0).
pub fn e_reg_q(mu: &OccupancyMeasure, q: f64) -> f64 {
    assert!(q > 0.0 && q < 1.0, "q must lie in (0,1)");
    mu.visits
        .values()
        .map(|&m| if m > 0.0 { m.powf(q) } else { 0.0 })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularisationConfig {
    /// Relaxation exponent, in (0,1).
    pub q: f64,
    /// Penalty strength (0 disables).
    pub alpha: f64,
    pub max_iters: usize,
    /// Occupancy floor: penalties are evaluated at max(mu, epsilon) so
    /// nearly-empty nodes do not receive unbounded penalties.
    pub epsilon: f64,
    /// Use the printed-form virtual reward +alpha q mu^(1-q) instead of the
    /// gradient-consistent penalty -alpha q mu^(q-1).
    pub literal_form: bool,
}

impl Default for RegularisationConfig {
    fn default() -> Self {
        RegularisationConfig {
            q: 0.5,
            alpha: 0.05,
            max_iters: 10,
            epsilon: 1e-3,
            literal_form: false,
        }
    }
}

impl RegularisationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::Config(format!("q = {} must lie in (0,1)", self.q)));
        }
        if self.alpha < 0.0 {
            return Err(Error::Config("alpha must be nonnegative".into()));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-node virtual reward charged on entry, derived from the occupancy
/// gradient. Zero-occupancy nodes are absent from the result (they are
/// discarded, never penalized). The root gets a value too but is never
/// discardable.
pub fn virtual_reward(
    mu: &OccupancyMeasure,
    cfg: &RegularisationConfig,
) -> BTreeMap<Superstate, f64> {
    mu.visits
        .iter()
        .filter(|(_, &m)| m > 0.0)
        .map(|(&s, &m)| {
            let clamped = m.max(cfg.epsilon);
            let value = if cfg.literal_form {
                cfg.alpha * cfg.q * clamped.powf(1.0 - cfg.q)
            } else {
                -cfg.alpha * cfg.q * clamped.powf(cfg.q - 1.0)
            };
            (s, value)
        })
        .collect()
}

/// One iteration record of the compaction loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularisationStep {
    pub iteration: usize,
    pub node_count: usize,
    pub visited_count: usize,
    /// Mean realized training return (no virtual penalties).
    pub mean_return: f64,
    pub e_reg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularisationReport {
    pub steps: Vec<RegularisationStep>,
    pub converged: bool,
}

/// Iterative compaction: measure occupancy, drop zero-occupancy non-root
/// nodes, re-solve with the virtual reward attached to node entry; stop when
/// the visited set repeats or `max_iters` is reached. Returns the final
/// policy (flagged non-converged in the report when the loop hit the cap).
pub fn regularise(
    engine: &Engine,
    pg: &PolicyGraph,
    cfg: &RegularisationConfig,
) -> Result<(PolicyGraph, RegularisationReport)> {
    cfg.validate()?;
    let budget = pg.core.budget;
    let mut current = pg.clone();
    let mut prev_visited: BTreeSet<Superstate> = occupancy(&current).visited();
    let mut steps = Vec::new();
    let mut converged = false;

    for iteration in 1..=cfg.max_iters {
        let mu = occupancy(&current);
        // Drop zero-occupancy non-root nodes; visited prefixes keep the set
        // root-connected.
        let keep: BTreeSet<Superstate> = current
            .superstates()
            .filter(|&s| s.is_root() || mu.get(s) > 0.0)
            .collect();
        let penalties = virtual_reward(&mu, cfg);
        current = engine.resolve(&keep, &penalties, budget)?;

        let mu_after = occupancy(&current);
        let visited = mu_after.visited();
        steps.push(RegularisationStep {
            iteration,
            node_count: current.node_count(),
            visited_count: visited.len(),
            mean_return: current.train_return(),
            e_reg: e_reg_q(&mu_after, cfg.q),
        });
        if visited == prev_visited {
            converged = true;
            break;
        }
        prev_visited = visited;
    }

    Ok((current, RegularisationReport { steps, converged }))
}

/// Replay statistics of a solved policy on its training set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyStats {
    pub mean_return: f64,
    /// Nodes visited by at least one training episode.
    pub visited_nodes: usize,
    pub node_count: usize,
    pub depth: usize,
    /// Per-node (visits, finishes) over the training population.
    pub per_node: BTreeMap<Superstate, (usize, usize)>,
}

pub fn policy_stats(pg: &PolicyGraph) -> PolicyStats {
    let n = pg.n_train();
    let mut per_node: BTreeMap<Superstate, (usize, usize)> =
        pg.superstates().map(|s| (s, (0, 0))).collect();
    let mut mean_return = 0.0;
    let mut depth = 0;
    for i in 0..n {
        let steps = pg.replay_train(i);
        depth = depth.max(steps.len() - 1);
        for (s, _) in &steps {
            per_node.get_mut(s).unwrap().0 += 1;
        }
        let (terminal, _) = steps.last().unwrap();
        per_node.get_mut(terminal).unwrap().1 += 1;
        mean_return += pg.train_node(*terminal).unwrap().terminal[i];
    }
    PolicyStats {
        mean_return: mean_return / n as f64,
        visited_nodes: per_node.values().filter(|(v, _)| *v > 0).count(),
        node_count: pg.node_count(),
        depth,
        per_node,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth::{scalar_dataset, ScalarFeature};
    use crate::dataset::Dataset;
    use crate::estimators::{ClassifierSpec, CvClassifier, QTrainer};
    use crate::mdp::full_lattice;

    fn mu_of(pairs: &[(u64, f64)]) -> OccupancyMeasure {
        OccupancyMeasure {
            visits: pairs
                .iter()
                .map(|&(b, m)| (Superstate::from_bits(b), m))
                .collect(),
            population: 100,
        }
    }

    #[test]
    fn e_reg_arithmetic() {
        assert_eq!(e_reg_q(&mu_of(&[(0, 1.0), (1, 0.0), (2, 0.0)]), 0.5), 1.0);
        assert_eq!(e_reg_q(&mu_of(&[(1, 0.25), (2, 0.25)]), 0.5), 1.0);
        let near_one = e_reg_q(&mu_of(&[(1, 0.3), (2, 0.7)]), 0.999999);
        assert!((near_one - 1.0).abs() < 1e-4);
    }

    #[test]
    fn virtual_reward_gradient_form_values() {
        let cfg = RegularisationConfig { q: 0.5, alpha: 1.0, ..Default::default() };
        let vr = virtual_reward(&mu_of(&[(0, 1.0), (1, 0.25), (2, 0.0)]), &cfg);
        assert!((vr[&Superstate::from_bits(0)] + 0.5).abs() < 1e-12);
        assert!((vr[&Superstate::from_bits(1)] + 1.0).abs() < 1e-12);
        // zero-occupancy nodes are dropped, not penalized
        assert!(!vr.contains_key(&Superstate::from_bits(2)));
        // magnitude grows as occupancy shrinks
        assert!(vr[&Superstate::from_bits(1)] < vr[&Superstate::from_bits(0)]);
        // literal printed form flips the sign and exponent
        let lit = RegularisationConfig { literal_form: true, ..cfg };
        let vl = virtual_reward(&mu_of(&[(1, 0.25)]), &lit);
        assert!((vl[&Superstate::from_bits(1)] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn epsilon_floors_the_penalty() {
        let cfg = RegularisationConfig { q: 0.5, alpha: 1.0, epsilon: 1e-2, ..Default::default() };
        let vr = virtual_reward(&mu_of(&[(1, 1e-9)]), &cfg);
        let want = -0.5 * (1e-2f64).powf(-0.5);
        assert!((vr[&Superstate::from_bits(1)] - want).abs() < 1e-9);
    }

    fn engine_for<'a>(
        d: &'a Dataset,
        cv: &'a CvClassifier,
        lambda: f64,
    ) -> Engine<'a> {
        Engine::new(d, lambda, QTrainer::Ridge { rank: None, ridge: 1e-3 }, cv, 7)
    }

    #[test]
    fn always_finish_policy_has_unit_root_occupancy() {
        let feats = [ScalarFeature::new("a", 1.0, 1.0)];
        let d = scalar_dataset("t", 50, 0.5, &feats, 71);
        let cv = CvClassifier::fit(&d, 5, &ClassifierSpec::default(), 1).unwrap();
        let engine = engine_for(&d, &cv, 1e3);
        let pg = engine.solve_full(&full_lattice(1)).unwrap();
        let mu = occupancy(&pg);
        assert_eq!(mu.get(Superstate::EMPTY), 1.0);
        assert_eq!(mu.get(Superstate::from_groups([0])), 0.0);
        let stats = policy_stats(&pg);
        assert_eq!(stats.visited_nodes, 1);
        assert_eq!(stats.depth, 0);
        // finish counts sum to N
        let finishes: usize = stats.per_node.values().map(|(_, f)| f).sum();
        assert_eq!(finishes, 50);
    }

    #[test]
    fn occupancy_splits_across_branches() {
        // A routing feature sends half the population to A, half to B:
        // feature 0 tells which of features 1/2 predicts the label.
        use ndarray::{Array1, Array2};
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(72);
        let n = 120;
        let mut values = Array2::zeros((n, 3));
        let mut labels = Array1::zeros(n);
        for i in 0..n {
            let route = i % 2;
            let y = rng.gen_range(0..2) as u8;
            labels[i] = y;
            values[[i, 0]] = route as f64 * 2.0 - 1.0;
            let signal = (y as f64 - 0.5) * 6.0 + 0.3 * rng.gen_range(-1.0..1.0);
            if route == 0 {
                values[[i, 1]] = signal;
                values[[i, 2]] = rng.gen_range(-1.0..1.0);
            } else {
                values[[i, 1]] = rng.gen_range(-1.0..1.0);
                values[[i, 2]] = signal;
            }
        }
        let d = Dataset::new(
            "route",
            vec![
                crate::dataset::FeatureGroup { id: 0, name: "route".into(), dims: 1, cost: 0.01 },
                crate::dataset::FeatureGroup { id: 1, name: "a".into(), dims: 1, cost: 0.01 },
                crate::dataset::FeatureGroup { id: 2, name: "b".into(), dims: 1, cost: 0.01 },
            ],
            values,
            labels,
        )
        .unwrap();
        let cv = CvClassifier::fit(&d, 10, &ClassifierSpec::default(), 2).unwrap();
        let engine = engine_for(&d, &cv, 1.0);
        let pg = engine.solve_full(&full_lattice(3)).unwrap();
        let mu = occupancy(&pg);
        assert_eq!(mu.get(Superstate::EMPTY), 1.0);
        // Mass at each depth sums to at most 1.
        for depth in 0..=3 {
            let mass: f64 = mu
                .visits
                .iter()
                .filter(|(s, _)| s.depth() == depth)
                .map(|(_, &m)| m)
                .sum();
            assert!(mass <= 1.0 + 1e-12, "depth {depth} mass {mass}");
        }
        // mu(child) <= sum of parent masses.
        for (&s, &m) in &mu.visits {
            if !s.is_root() {
                let parent_mass: f64 = s.parents().map(|(_, p)| mu.get(p)).sum();
                assert!(m <= parent_mass + 1e-12);
            }
        }
    }

    #[test]
    fn alpha_zero_converges_immediately_on_all_visited_graphs() {
        let feats = [ScalarFeature::new("s", 0.1, 5.0)];
        let d = scalar_dataset("t", 60, 0.5, &feats, 73);
        let cv = CvClassifier::fit(&d, 5, &ClassifierSpec::default(), 3).unwrap();
        let engine = engine_for(&d, &cv, 1.0);
        let pg = engine.solve_full(&full_lattice(1)).unwrap();
        // Both nodes visited: some instances finish at the root (lucky at
        // depth 0), the rest acquire the signal.
        let visited_before = occupancy(&pg).visited();
        assert_eq!(visited_before.len(), 2);
        let cfg = RegularisationConfig { alpha: 0.0, ..Default::default() };
        let (reg, report) = regularise(&engine, &pg, &cfg).unwrap();
        assert!(report.converged);
        assert_eq!(report.steps.len(), 1);
        let visited_after = occupancy(&reg).visited();
        assert_eq!(visited_before, visited_after);
        assert_eq!(
            pg.superstates().collect::<Vec<_>>(),
            reg.superstates().collect::<Vec<_>>()
        );
    }

    #[test]
    fn duplicated_columns_consolidate_to_one_route() {
        // Feature 1 duplicates feature 0 exactly, so any traffic beyond one
        // of them chases CV noise. Compaction must cut the visited set while
        // leaving the evaluated accuracy untouched (the duplicate carries no
        // information; an equal-accuracy compact policy exists).
        let mut feats = vec![
            ScalarFeature::new("a", 0.02, 2.5),
            ScalarFeature::new("b", 0.02, 2.5),
        ];
        feats[1].copy_of = Some(0);
        let d = scalar_dataset("dup", 150, 0.5, &feats, 74);
        let cv = CvClassifier::fit(&d, 10, &ClassifierSpec::default(), 4).unwrap();
        let engine = engine_for(&d, &cv, 1.0);
        let pg = engine.solve_full(&full_lattice(2)).unwrap();
        let stats_before = policy_stats(&pg);
        let (_, before) = crate::evaluation::evaluate(&pg.core, cv.full_model(), &d).unwrap();

        let cfg = RegularisationConfig { alpha: 0.6, ..Default::default() };
        let (reg, report) = regularise(&engine, &pg, &cfg).unwrap();
        let stats_after = policy_stats(&reg);
        assert!(report.converged, "did not converge: {:?}", report.steps);
        assert!(
            stats_after.visited_nodes < stats_before.visited_nodes,
            "no compaction: {} -> {}",
            stats_before.visited_nodes,
            stats_after.visited_nodes
        );
        let (_, after) = crate::evaluation::evaluate(&reg.core, cv.full_model(), &d).unwrap();
        assert!(
            (after.accuracy - before.accuracy).abs() < 0.011,
            "accuracy moved {} -> {}",
            before.accuracy,
            after.accuracy
        );
        // Visited-node count is non-increasing across iterations.
        for w in report.steps.windows(2) {
            assert!(w[1].visited_count <= w[0].visited_count);
        }
    }
}
