use std::collections::BTreeMap;

use pca_core::{InitialLaw, NoiseSource, Rule, Sym};
use pca_engine::{simulate_on_tree, traj_atom, TreeFamily};
use pca_graphs::OffspringDistribution;
use serde::Serialize;

use crate::stats::{mean_se, ratio_se};
use crate::VerifyError;

#[derive(Clone, Debug, Serialize)]
pub struct RerootAtom {
    /// Trajectory in the first slot (`X_ø` on the left, `X_1` on the right).
    pub x: String,
    /// Trajectory in the second slot.
    pub y: String,
    pub hits_lhs: usize,
    pub hits_rhs: usize,
    /// Size-biased ratio `Ξ_k(x, y)`.
    pub lhs: f64,
    /// `E[h(X_1, X_ø, ⟨X_{N_1}⟩) | X_1 = x, X_ø = y]`.
    pub rhs: f64,
    pub se: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RerootReport {
    pub atoms: Vec<RerootAtom>,
    pub pass: bool,
}

type Sample = (Vec<Sym>, Vec<Sym>, f64, f64, f64);

/// Rerooting identity between the root and its first child on a GW tree.
/// Atoms where either side has fewer than `min_hits` samples are skipped.
#[allow(clippy::too_many_arguments)]
pub fn rerooting_check<R, H>(
    root: &OffspringDistribution,
    rest: &OffspringDistribution,
    rule: &R,
    law: &InitialLaw,
    k: usize,
    replicas: usize,
    min_hits: usize,
    noise: &NoiseSource,
    h: H,
) -> Result<RerootReport, VerifyError>
where
    R: Rule<S = Sym>,
    H: Fn(&[Sym], &[Sym], &[Vec<Sym>]) -> f64 + Send + Sync,
{
    let family = TreeFamily::Gw { root: root.clone(), rest: rest.clone() };
    // (x_ø, x_1, |N_ø|/|N_1|, h at the root, h at vertex 1)
    let samples: Vec<Option<Sample>> = simulate_on_tree(&family, k + 2, rule, law, k, replicas, noise, |tree, s| {
        let kids = tree.children(0);
        let &c = kids.first()?;
        let xo = s.trajectory(0);
        let x1 = s.trajectory(c);
        let mut n_root: Vec<Vec<Sym>> = kids.iter().map(|&v| s.trajectory(v).to_vec()).collect();
        n_root.sort();
        let mut n_one: Vec<Vec<Sym>> =
            std::iter::once(0).chain(tree.children(c).iter().copied()).map(|v| s.trajectory(v).to_vec()).collect();
        n_one.sort();
        let w = n_root.len() as f64 / n_one.len() as f64;
        Some((xo.to_vec(), x1.to_vec(), w, h(xo, x1, &n_root), h(x1, xo, &n_one)))
    })?;
    let mut lhs: BTreeMap<(Vec<Sym>, Vec<Sym>), Vec<(f64, f64)>> = BTreeMap::new();
    let mut rhs: BTreeMap<(Vec<Sym>, Vec<Sym>), Vec<f64>> = BTreeMap::new();
    for (xo, x1, w, ho, h1) in samples.into_iter().flatten() {
        lhs.entry((xo.clone(), x1.clone())).or_default().push((w, ho));
        rhs.entry((x1, xo)).or_default().push(h1);
    }
    let mut atoms = vec![];
    for (key, l) in &lhs {
        let Some(r) = rhs.get(key) else { continue };
        if l.len() < min_hits || r.len() < min_hits {
            continue;
        }
        let (lv, lse) = ratio_se(l);
        let (rv, rse) = mean_se(r);
        let se = (lse * lse + rse * rse).sqrt();
        atoms.push(RerootAtom {
            x: traj_atom(&key.0),
            y: traj_atom(&key.1),
            hits_lhs: l.len(),
            hits_rhs: r.len(),
            lhs: lv,
            rhs: rv,
            se,
            pass: (lv - rv).abs() <= 5.0 * se,
        });
    }
    if atoms.is_empty() {
        return Err(VerifyError::TooFewSamples(format!("no conditioning atom reached {min_hits} hits on both sides")));
    }
    Ok(RerootReport { pass: atoms.iter().all(|a| a.pass), atoms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pca_core::kernels;
    use pca_graphs::unimodular_offspring;

    #[test]
    fn constant_h_matches_exactly() {
        let root = OffspringDistribution::uniform(2);
        let rest = unimodular_offspring(&root).unwrap();
        let rep = rerooting_check(&root, &rest, &kernels::contact(0.3), &InitialLaw::bernoulli(0.5), 1, 5000, 50, &NoiseSource::new(8), |_, _, _| 1.0)
            .unwrap();
        assert!(rep.atoms.iter().all(|a| a.lhs == 1.0 && a.rhs == 1.0 && a.pass));
    }
}
