use std::cmp::Ordering;
use std::ops::Deref;

use crate::{CoreError, StateValue, Sym, CEMETERY};

/// States of one vertex at times `0..=k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S = Sym>(Vec<S>);

impl<S: StateValue> Trajectory<S> {
    pub fn new(states: Vec<S>) -> Result<Self, CoreError> {
        if states.is_empty() {
            return Err(CoreError::EmptyTrajectory);
        }
        Ok(Trajectory(states))
    }

    pub fn states(&self) -> &[S] {
        &self.0
    }

    pub fn horizon(&self) -> usize {
        self.0.len() - 1
    }

    pub fn last(&self) -> S {
        *self.0.last().expect("nonempty")
    }

    pub fn push(&mut self, s: S) {
        self.0.push(s);
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }

    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            match a.canonical_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl Trajectory<Sym> {
    /// All-ϖ trajectory of a vertex outside the tree.
    pub fn cemetery(len: usize) -> Self {
        Trajectory(vec![CEMETERY; len.max(1)])
    }

    pub fn is_cemetery(&self) -> bool {
        self.0[0] == CEMETERY
    }

    /// Either every state is ϖ or none is.
    pub fn check_cemetery(&self) -> Result<(), CoreError> {
        let dead = self.0.iter().filter(|&&s| s == CEMETERY).count();
        if dead == 0 || dead == self.0.len() {
            Ok(())
        } else {
            Err(CoreError::MixedCemetery)
        }
    }
}

impl<S> Deref for Trajectory<S> {
    type Target = [S];
    fn deref(&self) -> &[S] {
        &self.0
    }
}

impl Eq for Trajectory<Sym> {}

impl std::hash::Hash for Trajectory<Sym> {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl PartialOrd for Trajectory<Sym> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Trajectory<Sym> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

/// Unordered finite collection of equal-length trajectories. Items are kept
/// in canonical order so that equality ignores the input order.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajMultiset<S = Sym> {
    items: Vec<Trajectory<S>>,
}

impl<S: StateValue> TrajMultiset<S> {
    pub fn empty() -> Self {
        TrajMultiset { items: Vec::new() }
    }

    pub fn from_unordered(mut items: Vec<Trajectory<S>>) -> Result<Self, CoreError> {
        if let Some(first) = items.first() {
            let len = first.len();
            if let Some((i, t)) = items.iter().enumerate().find(|(_, t)| t.len() != len) {
                return Err(CoreError::LengthMismatch { own: len, index: i, other: t.len() });
            }
        }
        items.sort_by(|a, b| a.canonical_cmp(b));
        Ok(TrajMultiset { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Trajectory<S>] {
        &self.items
    }

    pub fn slices(&self) -> Vec<&[S]> {
        self.items.iter().map(|t| t.states()).collect()
    }
}

impl Eq for TrajMultiset<Sym> {}

impl std::hash::Hash for TrajMultiset<Sym> {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.items.hash(state)
    }
}
