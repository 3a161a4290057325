//! Default test functionals for the tree harnesses.

use pca_core::Sym;
use pca_engine::SystemState;
use pca_graphs::RootedTree;

use crate::{tree_distance, ChildSummary};

/// Times `t ≥ 1` with `x(t)` equal to the first child's state at `t − 1`.
/// Sensitive to any rule that treats the first neighbor specially.
pub fn lag_agreement(x: &[Sym], children: &[ChildSummary]) -> f64 {
    (1..x.len()).filter(|&t| x[t] == children[0].traj[t - 1]).count() as f64
}

/// Indicator that `p` is adjacent to `o` and is in state 1 at the horizon.
pub fn occupied_neighbor(tree: &RootedTree, s: &SystemState<Sym>, o: usize, p: usize) -> f64 {
    (tree_distance(tree, o, p) == 1 && s.trajectory(p)[s.horizon()] == 1) as u8 as f64
}

/// Indicator that the vertex has exactly two other neighbors.
pub fn two_others(_own: &[Sym], _other: &[Sym], rest: &[Vec<Sym>]) -> f64 {
    (rest.len() == 2) as u8 as f64
}
