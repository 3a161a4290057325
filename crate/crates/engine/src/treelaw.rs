use pca_core::{FiniteRule, Sym};

use pca_graphs::OffspringDistribution;

use crate::exact::TrajectoryLaw;
use crate::measure::{neighborhood_atom, EmpiricalMeasure, Projection};
use crate::EngineError;

/// All trajectories of length `k + 1` over `q` symbols, indexed so that
/// `index = Σ_t x(t) q^t`.
fn all_trajectories(q: usize, k: usize) -> Vec<Vec<Sym>> {
    let count = q.pow((k + 1) as u32);
    (0..count)
        .map(|mut i| {
            (0..=k)
                .map(|_| {
                    let s = (i % q) as Sym;
                    i /= q;
                    s
                })
                .collect()
        })
        .collect()
}

/// Probability of trajectory `x` for a vertex whose neighbors follow `nbrs`,
/// initial factor included.
fn local_factor(rule: &FiniteRule, pmf: &[f64], x: &[Sym], nbrs: &[&[Sym]], buf: &mut [f64]) -> Result<f64, EngineError> {
    let mut w = pmf[x[0] as usize];
    let mut cut: Vec<&[Sym]> = Vec::with_capacity(nbrs.len());
    for t in 0..x.len() - 1 {
        if w == 0.0 {
            return Ok(0.0);
        }
        cut.clear();
        cut.extend(nbrs.iter().map(|y| &y[..=t]));
        rule.probs(&x[..=t], &cut, buf)?;
        w *= buf[x[t + 1] as usize];
    }
    Ok(w)
}

/// Calls `f` with every tuple in `0..base` of length `len`.
fn for_each_tuple(len: usize, base: usize, mut f: impl FnMut(&[usize]) -> Result<(), EngineError>) -> Result<(), EngineError> {
    let mut idx = vec![0usize; len];
    loop {
        f(&idx)?;
        let mut i = 0;
        loop {
            if i == len {
                return Ok(());
            }
            idx[i] += 1;
            if idx[i] < base {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Exact law of the root and its `kappa` children on the κ-regular tree
/// truncated at `depth`, by eliminating subtrees level by level.
///
/// For a vertex `c` at depth `d` with parent `p`, the message
/// `M_d(x_c, x_p)` sums the local factors of every vertex in the subtree of
/// `c` over all descendant trajectories. The returned law has vertex 0 as the
/// root and vertices `1..=kappa` as its children.
pub fn exact_regular_tree_law(
    kappa: usize,
    depth: usize,
    rule: &FiniteRule,
    pmf: &[f64],
    k: usize,
    budget: usize,
) -> Result<TrajectoryLaw, EngineError> {
    if kappa < 1 || depth < 1 {
        return Err(EngineError::Precondition("need κ ≥ 1 and depth ≥ 1".into()));
    }
    let q = pmf.len();
    if rule.alphabet_size() != q {
        return Err(EngineError::Precondition("rule alphabet differs from initial pmf".into()));
    }
    pca_core::InitialLaw::Finite(pmf.to_vec()).validate()?;
    let trajs = all_trajectories(q, k);
    let n_t = trajs.len();
    let required = (n_t as f64).powi(kappa as i32 + 1);
    if required > budget as f64 {
        return Err(EngineError::Budget { required, budget });
    }
    let mut buf = vec![0.0; q];

    // leaves: only the parent as neighbor
    let mut msg = vec![0.0; n_t * n_t];
    for (x, tx) in trajs.iter().enumerate() {
        for (y, ty) in trajs.iter().enumerate() {
            msg[x * n_t + y] = local_factor(rule, pmf, tx, &[ty], &mut buf)?;
        }
    }
    for _level in (1..depth).rev() {
        let mut next = vec![0.0; n_t * n_t];
        for (x, tx) in trajs.iter().enumerate() {
            for (y, ty) in trajs.iter().enumerate() {
                let mut sum = 0.0;
                for_each_tuple(kappa - 1, n_t, |z| {
                    let inner: f64 = z.iter().map(|&zi| msg[zi * n_t + x]).product();
                    if inner == 0.0 {
                        return Ok(());
                    }
                    let mut nb: Vec<&[Sym]> = vec![ty.as_slice()];
                    nb.extend(z.iter().map(|&zi| trajs[zi].as_slice()));
                    sum += inner * local_factor(rule, pmf, tx, &nb, &mut buf)?;
                    Ok(())
                })?;
                next[x * n_t + y] = sum;
            }
        }
        msg = next;
    }

    let mut masses = Vec::new();
    for (x, tx) in trajs.iter().enumerate() {
        for_each_tuple(kappa, n_t, |z| {
            let inner: f64 = z.iter().map(|&zi| msg[zi * n_t + x]).product();
            if inner == 0.0 {
                return Ok(());
            }
            let nb: Vec<&[Sym]> = z.iter().map(|&zi| trajs[zi].as_slice()).collect();
            let w = inner * local_factor(rule, pmf, tx, &nb, &mut buf)?;
            if w > 0.0 {
                let mut all = vec![tx.as_slice()];
                all.extend(nb.iter().copied());
                masses.push((crate::exact::encode(q, k, &all), w));
            }
            Ok(())
        })?;
    }
    TrajectoryLaw::from_codes(kappa + 1, k, q, masses)
}

/// Exact root-neighborhood law of a Galton-Watson tree truncated at `depth`,
/// averaged over the tree: root offspring `root`, later generations `rest`.
/// Subtrees are independent given their parent, so the message of a random
/// subtree is the offspring mixture of the deterministic messages.
pub fn exact_gw_tree_law(
    root: &OffspringDistribution,
    rest: &OffspringDistribution,
    depth: usize,
    rule: &FiniteRule,
    pmf: &[f64],
    k: usize,
    budget: usize,
) -> Result<EmpiricalMeasure, EngineError> {
    if depth < 1 {
        return Err(EngineError::Precondition("depth must be at least 1".into()));
    }
    let q = pmf.len();
    if rule.alphabet_size() != q {
        return Err(EngineError::Precondition("rule alphabet differs from initial pmf".into()));
    }
    pca_core::InitialLaw::Finite(pmf.to_vec()).validate()?;
    let trajs = all_trajectories(q, k);
    let n_t = trajs.len();
    let widest = root.max_support().max(rest.max_support() + 1);
    let required = (n_t as f64).powi(widest as i32 + 1);
    if required > budget as f64 {
        return Err(EngineError::Budget { required, budget });
    }
    let mut buf = vec![0.0; q];

    let mut msg = vec![0.0; n_t * n_t];
    for (x, tx) in trajs.iter().enumerate() {
        for (y, ty) in trajs.iter().enumerate() {
            msg[x * n_t + y] = local_factor(rule, pmf, tx, &[ty], &mut buf)?;
        }
    }
    for _level in (1..depth).rev() {
        let mut next = vec![0.0; n_t * n_t];
        for (x, tx) in trajs.iter().enumerate() {
            for (y, ty) in trajs.iter().enumerate() {
                let mut sum = 0.0;
                for (n, &pn) in rest.pmf().iter().enumerate() {
                    if pn == 0.0 {
                        continue;
                    }
                    for_each_tuple(n, n_t, |z| {
                        let inner: f64 = z.iter().map(|&zi| msg[zi * n_t + x]).product();
                        if inner == 0.0 {
                            return Ok(());
                        }
                        let mut nb: Vec<&[Sym]> = vec![ty.as_slice()];
                        nb.extend(z.iter().map(|&zi| trajs[zi].as_slice()));
                        sum += pn * inner * local_factor(rule, pmf, tx, &nb, &mut buf)?;
                        Ok(())
                    })?;
                }
                next[x * n_t + y] = sum;
            }
        }
        msg = next;
    }

    let mut atoms = Vec::new();
    for (n, &pn) in root.pmf().iter().enumerate() {
        if pn == 0.0 {
            continue;
        }
        for (x, tx) in trajs.iter().enumerate() {
            for_each_tuple(n, n_t, |z| {
                let inner: f64 = z.iter().map(|&zi| msg[zi * n_t + x]).product();
                if inner == 0.0 {
                    return Ok(());
                }
                let nb: Vec<&[Sym]> = z.iter().map(|&zi| trajs[zi].as_slice()).collect();
                let w = pn * inner * local_factor(rule, pmf, tx, &nb, &mut buf)?;
                if w > 0.0 {
                    atoms.push((neighborhood_atom(tx, &nb), w));
                }
                Ok(())
            })?;
        }
    }
    EmpiricalMeasure::from_weighted(&Projection::Neighborhood.kind(k), atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{propagate_exact_law, RuleMap, DEFAULT_BUDGET};
    use pca_core::kernels;
    use pca_graphs::truncated_regular_tree;

    fn compare_with_brute(kappa: usize, depth: usize, k: usize, rule: &FiniteRule) {
        let pmf = [0.4, 0.6];
        let tree = truncated_regular_tree(kappa, depth).unwrap();
        let g = tree.to_graph();
        let brute = propagate_exact_law(&g, RuleMap::Same(rule), &pmf, k, DEFAULT_BUDGET).unwrap();
        let verts: Vec<usize> = std::iter::once(0).chain(tree.children(0).iter().copied()).collect();
        let want = brute.marginal(&verts);
        let got = exact_regular_tree_law(kappa, depth, rule, &pmf, k, DEFAULT_BUDGET).unwrap();
        let got = got.marginal(&(0..=kappa).collect::<Vec<_>>());
        assert_eq!(want.len(), got.len());
        for (key, p) in &want {
            assert!((p - got[key]).abs() < 1e-13, "{key:?}");
        }
    }

    #[test]
    fn gw_law_with_delta_offspring_is_the_regular_law() {
        let r = kernels::voter_flip(0.25);
        let pmf = [0.4, 0.6];
        let gw = exact_gw_tree_law(
            &OffspringDistribution::delta(3),
            &OffspringDistribution::delta(2),
            3, &r, &pmf, 2, DEFAULT_BUDGET,
        )
        .unwrap();
        let reg = EmpiricalMeasure::root_neighborhood(&exact_regular_tree_law(3, 3, &r, &pmf, 2, DEFAULT_BUDGET).unwrap()).unwrap();
        assert!(crate::tv_distance(&gw, &reg).unwrap() < 1e-13);
    }

    #[test]
    fn gw_law_matches_enumerated_tree_mixture() {
        // root has 1 or 2 children, each child has 0 or 1 child, depth 2
        let r = kernels::contact(0.3);
        let pmf = [0.5, 0.5];
        let (k, root, rest) = (2, [0.0, 0.4, 0.6], [0.7, 0.3]);
        let got = exact_gw_tree_law(
            &OffspringDistribution::new(root.to_vec()).unwrap(),
            &OffspringDistribution::new(rest.to_vec()).unwrap(),
            2, &r, &pmf, k, DEFAULT_BUDGET,
        )
        .unwrap();
        let mut parts = Vec::new();
        for n in 1..=2usize {
            for_each_tuple(n, 2, |kids| {
                let mut w = root[n];
                let mut edges = vec![];
                let mut next = n + 1;
                for (c, &g) in kids.iter().enumerate() {
                    w *= rest[g];
                    edges.push((0, c + 1));
                    for _ in 0..g {
                        edges.push((c + 1, next));
                        next += 1;
                    }
                }
                let g = pca_graphs::FiniteGraph::from_edges(next, &edges).unwrap();
                let law = propagate_exact_law(&g, RuleMap::Same(&r), &pmf, k, DEFAULT_BUDGET).unwrap();
                let m = law.pushforward(|t| {
                    let nb: Vec<&[Sym]> = t[1..=n].iter().map(|x| x.as_slice()).collect();
                    neighborhood_atom(&t[0], &nb)
                });
                parts.push((w, m));
                Ok(())
            })
            .unwrap();
        }
        let want = EmpiricalMeasure::from_weighted(
            &Projection::Neighborhood.kind(k),
            parts.into_iter().flat_map(|(w, a)| a.into_iter().map(move |(s, p)| (s, w * p))),
        )
        .unwrap();
        assert!(crate::tv_distance(&got, &want).unwrap() < 1e-13);
    }

    #[test]
    fn matches_brute_force_on_small_trees() {
        compare_with_brute(2, 2, 2, &kernels::voter_flip(0.25));
        compare_with_brute(2, 1, 3, &kernels::persistence());
        compare_with_brute(3, 1, 2, &kernels::contact(0.3));
        compare_with_brute(3, 2, 1, &kernels::noisy_majority(0.1));
    }
}
