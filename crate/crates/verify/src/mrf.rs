use std::collections::{BTreeMap, BTreeSet};

use pca_core::{kernels, FiniteRule, Sym};
use pca_engine::{propagate_exact_law, RuleMap, TrajectoryLaw, DEFAULT_BUDGET};
use pca_graphs::{boundary_sets, FiniteGraph};
use serde::Serialize;

use crate::VerifyError;

#[derive(Clone, Debug, Serialize)]
pub struct IndependenceReport {
    /// Conditioning atoms with positive mass.
    pub atoms: usize,
    /// Per-atom residual `max |P(a,b|s) − P(a|s) P(b|s)|`, keyed by the
    /// conditioning trajectories.
    pub residuals: Vec<(Vec<Sym>, f64)>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

type Table = BTreeMap<Vec<Sym>, f64>;

/// Tests `X_A ⊥ X_B | X_S` on an exact law.
pub fn conditional_independence_test(
    law: &TrajectoryLaw,
    a: &[usize],
    b: &[usize],
    s: &[usize],
    tolerance: f64,
) -> Result<IndependenceReport, VerifyError> {
    let mut seen = BTreeSet::new();
    for &v in a.iter().chain(b).chain(s) {
        if v >= law.n() {
            return Err(VerifyError::Precondition(format!("vertex {v} outside the law")));
        }
        if !seen.insert(v) {
            return Err(VerifyError::Overlap(v));
        }
    }
    let w = law.horizon() + 1;
    let (la, lb) = (a.len() * w, b.len() * w);
    let order: Vec<usize> = a.iter().chain(b).chain(s).copied().collect();
    let joint = law.marginal(&order);

    // by conditioning atom: P(s), P(a,s), P(b,s), P(a,b,s)
    let mut by_s: BTreeMap<Vec<Sym>, (f64, Table, Table, Table)> = BTreeMap::new();
    for (key, &p) in &joint {
        let (xa, rest) = key.split_at(la);
        let (xb, xs) = rest.split_at(lb);
        let e = by_s.entry(xs.to_vec()).or_default();
        e.0 += p;
        *e.1.entry(xa.to_vec()).or_default() += p;
        *e.2.entry(xb.to_vec()).or_default() += p;
        *e.3.entry(key[..la + lb].to_vec()).or_default() += p;
    }
    let mut residuals = Vec::with_capacity(by_s.len());
    let mut ab = Vec::with_capacity(la + lb);
    for (xs, (ps, pa, pb, pab)) in by_s {
        if ps <= 0.0 {
            continue;
        }
        let mut worst: f64 = 0.0;
        for (xa, &qa) in &pa {
            for (xb, &qb) in &pb {
                ab.clear();
                ab.extend_from_slice(xa);
                ab.extend_from_slice(xb);
                let j = pab.get(&ab).copied().unwrap_or(0.0);
                worst = worst.max((j / ps - (qa / ps) * (qb / ps)).abs());
            }
        }
        residuals.push((xs, worst));
    }
    let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(IndependenceReport { atoms: residuals.len(), residuals, max_residual, tolerance, pass: max_residual < tolerance })
}

/// One row of the second-order MRF matrix.
#[derive(Clone, Debug, Serialize)]
pub struct MrfCase {
    pub graph: String,
    pub kernel: String,
    pub k: usize,
    pub a: Vec<usize>,
    pub max_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MrfMatrixReport {
    pub cases: Vec<MrfCase>,
    /// Graphs on which every block covers the whole vertex set.
    pub vacuous_graphs: Vec<String>,
    pub max_residual: f64,
    /// First-order residual on the 5-path (`A = {0}`, `S = ∂A`, `B = {3, 4}`)
    /// per kernel, maximized over `k ≤ max_k`.
    pub negative_controls: Vec<(String, f64)>,
    /// Smallest first-order residual among the nonlinear kernels.
    pub negative_control: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn matrix_kernels() -> Vec<FiniteRule> {
    vec![kernels::voter_flip(0.25), kernels::contact(0.3), kernels::noisy_majority(0.1), kernels::persistence()]
}

fn matrix_graphs() -> Result<Vec<(String, FiniteGraph)>, VerifyError> {
    let mut out = vec![];
    for n in 2..=5 {
        out.push((format!("path-{n}"), FiniteGraph::path(n)));
    }
    for n in 3..=5 {
        out.push((format!("cycle-{n}"), FiniteGraph::cycle(n)?));
    }
    for leaves in 2..=4 {
        out.push((format!("star-{}", leaves + 1), FiniteGraph::star(leaves)));
    }
    Ok(out)
}

/// Every nonempty `A` with a nonempty complement of `A ∪ ∂²A`, on paths,
/// cycles and stars of up to five vertices, for each kernel and `k ≤ max_k`.
pub fn mrf_matrix(max_k: usize, tolerance: f64) -> Result<MrfMatrixReport, VerifyError> {
    use rayon::prelude::*;
    let pmf = [0.4, 0.6];
    let graphs = matrix_graphs()?;
    let kernels = matrix_kernels();
    let mut jobs = vec![];
    for (gi, _) in graphs.iter().enumerate() {
        for ki in 0..kernels.len() {
            for k in 1..=max_k {
                jobs.push((gi, ki, k));
            }
        }
    }
    let mut vacuous = vec![];
    let mut blocks: Vec<Vec<(Vec<usize>, Vec<usize>, Vec<usize>)>> = vec![];
    for (name, g) in &graphs {
        let mut list = vec![];
        for mask in 1u32..(1 << g.n()) {
            let a: Vec<usize> = (0..g.n()).filter(|v| mask >> v & 1 == 1).collect();
            let (_, d2) = boundary_sets(g, &a)?;
            let b: Vec<usize> = (0..g.n()).filter(|v| mask >> v & 1 == 0 && !d2.contains(v)).collect();
            if !b.is_empty() {
                list.push((a, b, d2.into_iter().collect()));
            }
        }
        if list.is_empty() {
            vacuous.push(name.clone());
        }
        blocks.push(list);
    }
    let cases: Vec<Vec<MrfCase>> = jobs
        .par_iter()
        .map(|&(gi, ki, k)| {
            let (name, g) = &graphs[gi];
            if blocks[gi].is_empty() {
                return Ok(vec![]);
            }
            let law = propagate_exact_law(g, RuleMap::Same(&kernels[ki]), &pmf, k, DEFAULT_BUDGET)?;
            blocks[gi]
                .iter()
                .map(|(a, b, s)| {
                    let r = conditional_independence_test(&law, a, b, s, tolerance)?;
                    Ok(MrfCase { graph: name.clone(), kernel: kernels[ki].name().to_string(), k, a: a.clone(), max_residual: r.max_residual })
                })
                .collect()
        })
        .collect::<Result<_, VerifyError>>()?;
    let cases: Vec<MrfCase> = cases.into_iter().flatten().collect();
    let max_residual = cases.iter().map(|c| c.max_residual).fold(0.0, f64::max);
    let mut negative_controls = vec![];
    let mut negative_control = f64::INFINITY;
    for r in &kernels {
        let worst = (1..=max_k).map(|k| first_order_control(r, k)).collect::<Result<Vec<_>, _>>()?.into_iter().fold(0.0, f64::max);
        // the voter kernel is affine in the neighbor states and couples too weakly to count
        if !r.name().starts_with("voter") {
            negative_control = negative_control.min(worst);
        }
        negative_controls.push((r.name().to_string(), worst));
    }
    Ok(MrfMatrixReport {
        negative_controls,
        pass: max_residual < tolerance && negative_control > 1e-3,
        cases,
        vacuous_graphs: vacuous,
        max_residual,
        negative_control,
        tolerance,
    })
}

/// Residual of `X_0 ⊥ X_{3,4} | X_1` on the 5-path: conditioning on the
/// single boundary is not enough.
pub fn first_order_control(rule: &FiniteRule, k: usize) -> Result<f64, VerifyError> {
    let law = propagate_exact_law(&FiniteGraph::path(5), RuleMap::Same(rule), &[0.5, 0.5], k, DEFAULT_BUDGET)?;
    Ok(conditional_independence_test(&law, &[0], &[3, 4], &[1], 0.0)?.max_residual)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_law_is_independent() {
        let law = propagate_exact_law(&FiniteGraph::empty(3), RuleMap::Same(&kernels::flip(0.2)), &[0.3, 0.7], 2, DEFAULT_BUDGET).unwrap();
        let r = conditional_independence_test(&law, &[0], &[1, 2], &[], 1e-14).unwrap();
        assert!(r.pass, "{}", r.max_residual);
        assert_eq!(r.atoms, 1);
    }

    #[test]
    fn overlapping_blocks_are_rejected() {
        let law = propagate_exact_law(&FiniteGraph::path(3), RuleMap::Same(&kernels::flip(0.2)), &[0.5, 0.5], 1, DEFAULT_BUDGET).unwrap();
        assert!(matches!(conditional_independence_test(&law, &[0], &[0, 2], &[1], 1e-12), Err(VerifyError::Overlap(0))));
    }

    #[test]
    fn second_order_boundary_on_path5() {
        for k in 1..=3 {
            let law = propagate_exact_law(&FiniteGraph::path(5), RuleMap::Same(&kernels::voter_flip(0.25)), &[0.5, 0.5], k, DEFAULT_BUDGET).unwrap();
            let r = conditional_independence_test(&law, &[0], &[3, 4], &[1, 2], 1e-12).unwrap();
            assert!(r.pass, "k={k}: {}", r.max_residual);
        }
        assert!(first_order_control(&kernels::contact(0.3), 2).unwrap() > 1e-3);
        assert!(first_order_control(&kernels::voter_flip(0.25), 2).unwrap() > 1e-5);
    }

    #[test]
    fn cycles_and_stars_are_vacuous() {
        let r = mrf_matrix(1, 1e-12).unwrap();
        assert_eq!(r.negative_controls.len(), 4);
        assert!(r.vacuous_graphs.iter().any(|g| g == "cycle-5"));
        assert!(r.vacuous_graphs.iter().any(|g| g == "star-5"));
        assert!(r.pass);
    }
}
