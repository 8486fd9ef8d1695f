//! Superstates: nodes of the feature-subset lattice.

use serde::{Deserialize, Serialize};

/// A subset of feature groups, encoded as a bitmask (bit g = group g).
///
/// Superstates form a DAG: edges go from a mask to each mask-with-one-more-
/// group, plus a Finish action available everywhere. The empty mask is the
/// unique root. Supports up to 64 groups.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct Superstate(u64);

impl Superstate {
    pub const EMPTY: Superstate = Superstate(0);

    pub fn from_bits(bits: u64) -> Superstate {
        Superstate(bits)
    }

    pub fn from_groups(groups: impl IntoIterator<Item = usize>) -> Superstate {
        let mut bits = 0u64;
        for g in groups {
            debug_assert!(g < 64);
            bits |= 1 << g;
        }
        Superstate(bits)
    }

    pub fn bits(&self) -> u64 {
        self.0
    }

    pub fn is_root(&self) -> bool {
        self.0 == 0
    }

    /// Number of acquired groups.
    pub fn depth(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(&self, group: usize) -> bool {
        self.0 & (1 << group) != 0
    }

    pub fn with(&self, group: usize) -> Superstate {
        Superstate(self.0 | (1 << group))
    }

    pub fn without(&self, group: usize) -> Superstate {
        Superstate(self.0 & !(1 << group))
    }

    pub fn is_superset_of(&self, other: &Superstate) -> bool {
        self.0 & other.0 == other.0
    }

    /// Acquired group ids, ascending.
    pub fn groups(&self) -> impl Iterator<Item = usize> + '_ {
        (0..64).filter(move |&g| self.contains(g))
    }

    /// Unacquired group ids among `0..f`, ascending.
    pub fn missing(&self, f: usize) -> impl Iterator<Item = usize> + '_ {
        (0..f).filter(move |&g| !self.contains(g))
    }

    /// One `(Acquire(g), child)` per unacquired group (ascending id), then
    /// `(Finish, self)`.
    pub fn children(&self, f: usize) -> Vec<(Action, Superstate)> {
        let mut out: Vec<(Action, Superstate)> = self
            .missing(f)
            .map(|g| (Action::Acquire(g), self.with(g)))
            .collect();
        out.push((Action::Finish, *self));
        out
    }

    /// Direct parents (one acquired group removed), ascending by removed id.
    pub fn parents(&self) -> impl Iterator<Item = (usize, Superstate)> + '_ {
        self.groups().map(move |g| (g, self.without(g)))
    }

    /// Human-readable form: sorted group names joined by '+' ("{}" for the root).
    pub fn label(&self, names: &[String]) -> String {
        if self.is_root() {
            return "{}".into();
        }
        self.groups()
            .map(|g| names.get(g).cloned().unwrap_or_else(|| format!("g{g}")))
            .collect::<Vec<_>>()
            .join("+")
    }
}

impl std::fmt::Display for Superstate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}

/// Either acquire a feature group or finish and diagnose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Acquire(usize),
    Finish,
}
