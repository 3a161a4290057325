use pca_core::{InitialLaw, NoiseSource, Rule, Sym};
use pca_engine::{simulate_on_tree, SystemState, TreeFamily};
use pca_graphs::RootedTree;
use serde::Serialize;

use crate::stats::{mean_se, Gate};
use crate::VerifyError;

#[derive(Clone, Debug, Serialize)]
pub struct TransportReport {
    pub replicas: usize,
    /// `E Σ_õ F(ø, õ)`.
    pub lhs: f64,
    /// `E Σ_õ F(õ, ø)`.
    pub rhs: f64,
    /// Paired difference of the two sums.
    pub diff: Gate,
}

/// Graph distance between two vertices of a rooted tree.
pub fn tree_distance(tree: &RootedTree, mut u: usize, mut v: usize) -> usize {
    let mut d = 0;
    while tree.depth_of(u) > tree.depth_of(v) {
        u = tree.parent(u).expect("non-root");
        d += 1;
    }
    while tree.depth_of(v) > tree.depth_of(u) {
        v = tree.parent(v).expect("non-root");
        d += 1;
    }
    while u != v {
        u = tree.parent(u).expect("common ancestor");
        v = tree.parent(v).expect("common ancestor");
        d += 2;
    }
    d
}

/// Mass-transport identity on a random rooted tree at time `k`, for an `F`
/// supported on pairs at distance at most `r`. Both sums run over the ball
/// of radius `r` around the root, so with `depth ≥ k + r + 1` the truncated
/// tree gives the same sums as the infinite one.
#[allow(clippy::too_many_arguments)]
pub fn mass_transport_check<R, F>(
    family: &TreeFamily,
    rule: &R,
    law: &InitialLaw,
    k: usize,
    r: usize,
    depth: usize,
    replicas: usize,
    noise: &NoiseSource,
    f: F,
) -> Result<TransportReport, VerifyError>
where
    R: Rule<S = Sym>,
    F: Fn(&RootedTree, &SystemState<Sym>, usize, usize) -> f64 + Send + Sync,
{
    if depth < k + r + 1 {
        return Err(VerifyError::Precondition(format!("depth {depth} < k + r + 1 = {}", k + r + 1)));
    }
    let pairs = simulate_on_tree(family, depth, rule, law, k, replicas, noise, |tree, s| {
        let (mut out, mut back) = (0.0, 0.0);
        for v in 0..tree.len() {
            if tree.depth_of(v) <= r {
                out += f(tree, s, 0, v);
                back += f(tree, s, v, 0);
            }
        }
        (out, back)
    })?;
    let n = pairs.len() as f64;
    let lhs = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let rhs = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let d: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    let (m, se) = mean_se(&d);
    Ok(TransportReport { replicas: pairs.len(), lhs, rhs, diff: Gate::zero(m, se) })
}
