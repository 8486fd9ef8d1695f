//! The superstate-lattice MDP: states, policy graphs, and the exact
//! backward solve with budget support.

mod engine;
mod graph;
mod superstate;

pub use engine::{apply_budget, full_lattice, terminal_reward, Engine, TerminalReward};
pub use graph::{NodeModels, NodeTrain, PolicyCore, PolicyGraph};
pub use superstate::{Action, Superstate};
