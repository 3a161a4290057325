use std::collections::{BTreeMap, BTreeSet};

use pca_core::{FiniteRule, Sym};
use pca_engine::{propagate_exact_law, RuleMap, DEFAULT_BUDGET};
use pca_graphs::{boundary_sets, FiniteGraph};
use serde::Serialize;

use crate::VerifyError;

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    /// Conditioning atoms with positive mass under both laws.
    pub atoms: usize,
    /// Atoms charged by only one of the two laws, where the conditional law
    /// on the other side is undefined.
    pub one_sided: usize,
    /// Largest TV between the two conditional laws of `X_A` over atoms.
    pub max_tv: f64,
    pub pass: bool,
}

/// A subgraph `H` of `G` given by `embed[h] = g`.
pub struct Subgraph<'a> {
    pub graph: &'a FiniteGraph,
    pub embed: &'a [usize],
}

fn all_trajectories(q: usize, len: usize) -> Vec<Vec<Sym>> {
    (0..q.pow(len as u32))
        .map(|mut i| {
            (0..len)
                .map(|_| {
                    let s = (i % q) as Sym;
                    i /= q;
                    s
                })
                .collect()
        })
        .collect()
}

/// Whether two rules agree on every trajectory configuration of the given
/// arity up to horizon `k`.
fn rules_agree(r: &FiniteRule, s: &FiniteRule, arity: usize, k: usize) -> Result<bool, VerifyError> {
    let q = r.alphabet_size();
    if s.alphabet_size() != q {
        return Ok(false);
    }
    let (mut p1, mut p2) = (vec![0.0; q], vec![0.0; q]);
    for len in 1..=k {
        let trajs = all_trajectories(q, len);
        let t = trajs.len();
        for code in 0..t.pow(arity as u32 + 1) {
            let mut c = code;
            let mut pick = || {
                let x = &trajs[c % t];
                c /= t;
                x.as_slice()
            };
            let own = pick();
            let nb: Vec<&[Sym]> = (0..arity).map(|_| pick()).collect();
            r.probs(own, &nb, &mut p1)?;
            s.probs(own, &nb, &mut p2)?;
            if p1.iter().zip(&p2).any(|(x, y)| (x - y).abs() > 1e-15) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Compares `ℒ(X_A[k] | X_{∂²A}[k])` computed on `G` and on a subgraph `H`
/// containing `A ∪ ∂²A`. `a` is given in `G`'s vertex labels. Vertices of
/// `H` whose full `G`-neighborhood lies in `H` must carry `G`'s rule and
/// neighborhood.
pub fn consistency_check(
    g: &FiniteGraph,
    h: Subgraph<'_>,
    a: &[usize],
    rule_g: &FiniteRule,
    rules_h: &[FiniteRule],
    pmf: &[f64],
    k: usize,
) -> Result<ConsistencyReport, VerifyError> {
    let hn = h.graph.n();
    if h.embed.len() != hn || rules_h.len() != hn {
        return Err(VerifyError::Precondition("embedding and rules must cover every vertex of H".into()));
    }
    let inv: BTreeMap<usize, usize> = h.embed.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    if inv.len() != hn || h.embed.iter().any(|&v| v >= g.n()) {
        return Err(VerifyError::Precondition("embedding must be injective into G".into()));
    }
    for u in 0..hn {
        for &w in h.graph.neighbors(u) {
            if !g.neighbors(h.embed[u]).contains(&h.embed[w]) {
                return Err(VerifyError::Precondition(format!("edge {u}-{w} of H is not an edge of G")));
            }
        }
    }
    let (_, d2) = boundary_sets(g, a)?;
    let region: BTreeSet<usize> = a.iter().copied().chain(d2.iter().copied()).collect();
    if let Some(v) = region.iter().find(|v| !inv.contains_key(v)) {
        return Err(VerifyError::Precondition(format!("vertex {v} of A ∪ ∂²A is missing from H")));
    }
    for u in 0..hn {
        let gv = h.embed[u];
        let interior = g.neighbors(gv).iter().all(|w| inv.contains_key(w));
        if interior {
            if h.graph.degree(u) != g.degree(gv) {
                return Err(VerifyError::Precondition(format!("interior vertex {gv} loses neighbors in H")));
            }
            if !rules_agree(rule_g, &rules_h[u], g.degree(gv), k)? {
                return Err(VerifyError::Precondition(format!("rule of interior vertex {gv} differs on H")));
            }
        }
    }

    let law_g = propagate_exact_law(g, RuleMap::Same(rule_g), pmf, k, DEFAULT_BUDGET)?;
    let law_h = propagate_exact_law(h.graph, RuleMap::PerVertex(rules_h), pmf, k, DEFAULT_BUDGET)?;
    let s: Vec<usize> = d2.iter().copied().collect();
    let order_g: Vec<usize> = s.iter().chain(a).copied().collect();
    let order_h: Vec<usize> = order_g.iter().map(|v| inv[v]).collect();
    let split = s.len() * (k + 1);
    let cond = |m: BTreeMap<Vec<Sym>, f64>| {
        let mut out: BTreeMap<Vec<Sym>, (f64, BTreeMap<Vec<Sym>, f64>)> = BTreeMap::new();
        for (key, p) in m {
            let (xs, xa) = key.split_at(split);
            let e = out.entry(xs.to_vec()).or_default();
            e.0 += p;
            *e.1.entry(xa.to_vec()).or_default() += p;
        }
        out
    };
    let cg = cond(law_g.marginal(&order_g));
    let ch = cond(law_h.marginal(&order_h));
    let atoms: BTreeSet<&Vec<Sym>> = cg.keys().chain(ch.keys()).collect();
    let (mut max_tv, mut one_sided, mut shared): (f64, usize, usize) = (0.0, 0, 0);
    for xs in &atoms {
        let (Some((pg, mg)), Some((ph, mh))) = (cg.get(*xs), ch.get(*xs)) else {
            one_sided += 1;
            continue;
        };
        shared += 1;
        let keys: BTreeSet<&Vec<Sym>> = mg.keys().chain(mh.keys()).collect();
        let tv = 0.5
            * keys
                .iter()
                .map(|x| (mg.get(*x).unwrap_or(&0.0) / pg - mh.get(*x).unwrap_or(&0.0) / ph).abs())
                .sum::<f64>();
        max_tv = max_tv.max(tv);
    }
    Ok(ConsistencyReport { atoms: shared, one_sided, max_tv, pass: shared > 0 && max_tv < 1e-12 })
}

/// The 7-path against its middle 5-path, `A` the center, boundary vertices
/// of the 5-path running `edge_rule`.
pub fn path7_vs_path5(rule: &FiniteRule, edge_rule: &FiniteRule, k: usize) -> Result<ConsistencyReport, VerifyError> {
    let g = FiniteGraph::path(7);
    let h = FiniteGraph::path(5);
    let embed = [1, 2, 3, 4, 5];
    let rules: Vec<FiniteRule> = (0..5).map(|i| if i == 0 || i == 4 { edge_rule.clone() } else { rule.clone() }).collect();
    consistency_check(&g, Subgraph { graph: &h, embed: &embed }, &[3], rule, &rules, &[0.5, 0.5], k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pca_core::kernels;

    #[test]
    fn same_graph_is_consistent() {
        let g = FiniteGraph::path(4);
        let r = kernels::contact(0.3);
        let rep = consistency_check(&g, Subgraph { graph: &g, embed: &[0, 1, 2, 3] }, &[1], &r, &vec![r.clone(); 4], &[0.5, 0.5], 2).unwrap();
        assert_eq!(rep.max_tv, 0.0);
    }

    #[test]
    fn path7_against_path5() {
        let rep = path7_vs_path5(&kernels::voter_flip(0.25), &kernels::noisy_majority(0.2), 2).unwrap();
        assert!(rep.pass, "{}", rep.max_tv);
    }

    #[test]
    fn interior_rule_mismatch_is_rejected() {
        let g = FiniteGraph::path(7);
        let h = FiniteGraph::path(5);
        let r = kernels::voter_flip(0.25);
        let mut rules = vec![r.clone(); 5];
        rules[2] = kernels::contact(0.25);
        let err = consistency_check(&g, Subgraph { graph: &h, embed: &[1, 2, 3, 4, 5] }, &[3], &r, &rules, &[0.5, 0.5], 2);
        assert!(matches!(err, Err(VerifyError::Precondition(_))));
    }

    #[test]
    fn region_must_fit_in_subgraph() {
        let g = FiniteGraph::path(7);
        let h = FiniteGraph::path(3);
        let r = kernels::voter_flip(0.25);
        let err = consistency_check(&g, Subgraph { graph: &h, embed: &[2, 3, 4] }, &[3], &r, &vec![r.clone(); 3], &[0.5, 0.5], 1);
        assert!(matches!(err, Err(VerifyError::Precondition(_))));
    }
}
