//! Instance-specific, cost-sensitive sequential feature acquisition.
//!
//! The library trains a reinforcement-learning policy over the lattice of
//! feature subsets ("superstates"): at each step the policy either acquires
//! one more feature group for the instance at hand or finishes and issues a
//! diagnosis, trading prediction accuracy against acquisition costs. Three
//! pieces make that workable beyond a handful of features:
//!
//! * an exact backward solve of the acquisition MDP over any root-connected
//!   superstate set ([`mdp`]),
//! * a sampling heuristic that grows a restricted superstate set toward
//!   the most promising feature combinations ([`exploration`]),
//! * an occupancy-measure sparsity penalty that compacts a trained policy to
//!   fewer distinct acquisition sequences ([`regularisation`]).
//!
//! Kernel ridge Q-estimators with Nyström approximation and a shared-weight
//! masked kernel classifier live in [`estimators`]; data ingestion, schemas,
//! standardization, per-group PCA, and reproducible splits in [`dataset`];
//! episode replay, AUC and cost metrics, and sweep/export utilities in
//! [`evaluation`]. The `afa` CLI wires these into train/eval/sweep/session
//! commands; the `book/` directory of the repository walks through the
//! concepts with runnable snippets.

pub mod error;
pub mod util;

pub mod artifact;
pub mod dataset;
pub mod estimators;
pub mod evaluation;
pub mod export;
pub mod exploration;
pub mod mdp;
pub mod pipeline;
pub mod regularisation;

pub use error::{Error, Result};
