//! Policy graphs: per-node Q-models for inference plus per-node training
//! vectors for solving, replay, and occupancy measurement.

use std::collections::BTreeMap;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::superstate::{Action, Superstate};
use crate::error::{Error, Result};
use crate::estimators::QModel;

/// Inference half of a policy: everything greedy decisions need.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyCore {
    pub lambda: f64,
    pub budget: Option<usize>,
    pub group_count: usize,
    pub(crate) nodes: BTreeMap<Superstate, NodeModels>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeModels {
    /// Budget-closed: only Finish is available.
    pub closed: bool,
    /// Acquisition cost of the node's groups.
    pub cost: f64,
    /// Regression of the terminal reward on the node's features; the
    /// Finish value used at inference, comparable to acquire Q-values.
    pub finish: QModel,
    /// Q-model per acquirable group whose child is in the graph.
    pub acquires: BTreeMap<usize, QModel>,
}

impl PolicyCore {
    pub fn contains(&self, s: Superstate) -> bool {
        self.nodes.contains_key(&s)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn superstates(&self) -> impl Iterator<Item = Superstate> + '_ {
        self.nodes.keys().copied()
    }

    pub fn node(&self, s: Superstate) -> Option<&NodeModels> {
        self.nodes.get(&s)
    }

    /// Greedy action at `s` for a full-width instance row.
    ///
    /// Maximizes over the Finish value estimate and the Q-predictions of
    /// children present in the graph; only the node's own (acquired) columns
    /// are read. Ties break toward Finish, then the lowest group id.
    pub fn greedy_action(&self, s: Superstate, row: &[f64]) -> Result<Action> {
        let node = self
            .nodes
            .get(&s)
            .ok_or_else(|| Error::Policy(format!("superstate {s} not in policy")))?;
        if node.closed {
            return Ok(Action::Finish);
        }
        let mut best_value = node.finish.predict_row(row)?;
        let mut best = Action::Finish;
        for (&g, model) in &node.acquires {
            let q = model.predict_row(row)?;
            if q > best_value {
                best_value = q;
                best = Action::Acquire(g);
            }
        }
        Ok(best)
    }
}

/// Training half: per-instance vectors on the training set.
#[derive(Debug, Clone)]
pub struct NodeTrain {
    /// Held-out CV correctness per training instance.
    pub acc: Array1<u8>,
    /// acc - lambda * cost, the tabulated Finish value during training.
    pub terminal: Array1<f64>,
    /// Virtual reward charged on entering this node (0 unregularised).
    pub entry_penalty: f64,
    /// V_f: instance-wise max over available action values.
    pub value: Array1<f64>,
    /// In-sample Q predictions per acquire action.
    pub q_train: BTreeMap<usize, Array1<f64>>,
}

/// A solved policy over an explicit superstate set.
#[derive(Debug, Clone)]
pub struct PolicyGraph {
    pub core: PolicyCore,
    pub(crate) train: BTreeMap<Superstate, NodeTrain>,
}

impl PolicyGraph {
    pub fn lambda(&self) -> f64 {
        self.core.lambda
    }

    pub fn node_count(&self) -> usize {
        self.core.nodes.len()
    }

    pub fn superstates(&self) -> impl Iterator<Item = Superstate> + '_ {
        self.core.nodes.keys().copied()
    }

    pub fn contains(&self, s: Superstate) -> bool {
        self.core.contains(s)
    }

    pub fn train_node(&self, s: Superstate) -> Option<&NodeTrain> {
        self.train.get(&s)
    }

    pub fn root_value(&self) -> &Array1<f64> {
        &self.train[&Superstate::EMPTY].value
    }

    /// Greedy action for training instance `i` at `s`, from the tabulated
    /// terminal reward and cached in-sample Q vectors. Same tie rule as
    /// inference: Finish first, then lowest group id.
    pub fn greedy_train_action(&self, s: Superstate, i: usize) -> Action {
        let models = &self.core.nodes[&s];
        let node = &self.train[&s];
        if models.closed {
            return Action::Finish;
        }
        let mut best_value = node.terminal[i];
        let mut best = Action::Finish;
        for (&g, q) in &node.q_train {
            if q[i] > best_value {
                best_value = q[i];
                best = Action::Acquire(g);
            }
        }
        best
    }

    /// Replays training instance `i`'s greedy episode; the last step is
    /// always `(terminal_node, Finish)`.
    pub fn replay_train(&self, i: usize) -> Vec<(Superstate, Action)> {
        let mut s = Superstate::EMPTY;
        let mut steps = Vec::new();
        loop {
            let action = self.greedy_train_action(s, i);
            steps.push((s, action));
            match action {
                Action::Finish => return steps,
                Action::Acquire(g) => s = s.with(g),
            }
        }
    }

    /// Realized terminal reward of instance `i` under greedy replay
    /// (terminal reward of the endpoint, no virtual penalties).
    pub fn replay_return(&self, i: usize) -> f64 {
        let steps = self.replay_train(i);
        let (terminal, _) = steps.last().expect("episode has at least one step");
        self.train[terminal].terminal[i]
    }

    /// Mean realized training return over all instances.
    pub fn train_return(&self) -> f64 {
        let n = self.n_train();
        (0..n).map(|i| self.replay_return(i)).sum::<f64>() / n as f64
    }

    /// Max acquisition depth reached by any training instance under replay.
    pub fn replay_depth(&self) -> usize {
        let n = self.n_train();
        (0..n)
            .map(|i| self.replay_train(i).len() - 1)
            .max()
            .unwrap_or(0)
    }

    pub fn n_train(&self) -> usize {
        self.train[&Superstate::EMPTY].value.len()
    }
}
