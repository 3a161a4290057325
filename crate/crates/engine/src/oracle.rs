use pca_core::{InitialLaw, NoiseSource, Rule, Sym};
use pca_graphs::{sample_gw_tree, truncated_regular_tree, unimodular_offspring, OffspringDistribution, RootedTree};
use rayon::prelude::*;

use crate::{step_synchronous, EmpiricalMeasure, EngineError, Projection, RuleMap, Simulable, SystemState};

/// Tree laws the oracle can sample from.
#[derive(Clone, Debug)]
pub enum TreeFamily {
    Regular { kappa: usize },
    Gw { root: OffspringDistribution, rest: OffspringDistribution },
    /// Unimodular GW tree; the non-root law is the size-biased shift of `root`.
    Ugw { root: OffspringDistribution },
}

impl TreeFamily {
    fn sampler(&self, depth: usize) -> Result<Box<dyn Fn(&NoiseSource, u64) -> RootedTree + Send + Sync>, EngineError> {
        Ok(match self {
            TreeFamily::Regular { kappa } => {
                let t = truncated_regular_tree(*kappa, depth)?;
                Box::new(move |_, _| t.clone())
            }
            TreeFamily::Gw { root, rest } => {
                let (root, rest) = (root.clone(), rest.clone());
                Box::new(move |n, r| sample_gw_tree(&root, &rest, depth, n, r))
            }
            TreeFamily::Ugw { root } => {
                let rest = unimodular_offspring(root)?;
                let root = root.clone();
                Box::new(move |n, r| sample_gw_tree(&root, &rest, depth, n, r))
            }
        })
    }
}

/// Runs the dynamics to time `k` on `replicas` independently sampled trees
/// truncated at `depth` and maps each finished replica through `f`.
///
/// Replica `r` samples its tree with tree-domain address `r` and its
/// dynamics with replica id `r`, so results do not depend on thread count.
#[allow(clippy::too_many_arguments)]
pub fn simulate_on_tree<R, T, F>(
    family: &TreeFamily,
    depth: usize,
    rule: &R,
    law: &InitialLaw,
    k: usize,
    replicas: usize,
    noise: &NoiseSource,
    f: F,
) -> Result<Vec<T>, EngineError>
where
    R: Rule,
    R::S: Simulable,
    T: Send,
    F: Fn(&RootedTree, &SystemState<R::S>) -> T + Send + Sync,
{
    if replicas == 0 {
        return Err(EngineError::Precondition("need at least one replica".into()));
    }
    let sample = family.sampler(depth)?;
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let tree = sample(noise, r);
            let g = tree.to_graph();
            let mut s = SystemState::initial(tree.len(), law, &[], noise, r)?;
            for _ in 0..k {
                step_synchronous(&g, RuleMap::Same(rule), &mut s, noise, r)?;
            }
            Ok(f(&tree, &s))
        })
        .collect()
}

/// Empirical law of the root neighborhood `(X_ø[k], ⟨X_{N_ø}[k]⟩)` on trees
/// truncated at `depth ≥ k + 1`, where truncation cannot reach the
/// neighborhood before time `k`.
pub fn truncated_tree_oracle<R>(
    family: &TreeFamily,
    depth: usize,
    rule: &R,
    law: &InitialLaw,
    k: usize,
    replicas: usize,
    noise: &NoiseSource,
) -> Result<EmpiricalMeasure, EngineError>
where
    R: Rule<S = Sym>,
{
    if depth < k + 1 {
        return Err(EngineError::Precondition(format!("depth {depth} < k + 1 = {}", k + 1)));
    }
    let atoms = simulate_on_tree(family, depth, rule, law, k, replicas, noise, |tree, s| {
        let nb: Vec<&[Sym]> = tree.children(0).iter().map(|&c| s.trajectory(c)).collect();
        Projection::Neighborhood.atom(s.trajectory(0), &nb)
    })?;
    EmpiricalMeasure::from_atoms(&Projection::Neighborhood.kind(k), atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pca_core::kernels;

    #[test]
    fn depth_precondition() {
        let r = kernels::flip(0.1);
        let e = truncated_tree_oracle(&TreeFamily::Regular { kappa: 2 }, 2, &r, &InitialLaw::bernoulli(0.5), 2, 10, &NoiseSource::new(1));
        assert!(matches!(e, Err(EngineError::Precondition(_))));
    }

    #[test]
    fn k_zero_is_initial_law() {
        let r = kernels::voter_flip(0.2);
        let m = truncated_tree_oracle(
            &TreeFamily::Regular { kappa: 2 },
            1,
            &r,
            &InitialLaw::Finite(vec![0.0, 1.0]),
            0,
            50,
            &NoiseSource::new(1),
        )
        .unwrap();
        assert_eq!(m.weight("1|1,1"), 1.0);
    }

    #[test]
    fn lone_root_gw() {
        let r = kernels::flip(0.5);
        let fam = TreeFamily::Gw { root: OffspringDistribution::delta(0), rest: OffspringDistribution::delta(3) };
        let m = truncated_tree_oracle(&fam, 3, &r, &InitialLaw::bernoulli(0.5), 1, 2000, &NoiseSource::new(4)).unwrap();
        assert!(m.iter().all(|(a, _)| a.ends_with('|')));
        assert_eq!(m.len(), 4);
    }
}
