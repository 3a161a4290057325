use std::collections::BTreeMap;

use pca_core::{InitialLaw, NoiseSource, Rule, Sym};
use pca_engine::{simulate_on_tree, traj_atom, TreeFamily};
use pca_graphs::OffspringDistribution;
use serde::Serialize;

use crate::stats::{mean_se, Gate};
use crate::VerifyError;

/// A child's trajectory and the sorted trajectories of its own children.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ChildSummary {
    pub traj: Vec<Sym>,
    pub below: Vec<Vec<Sym>>,
}

impl ChildSummary {
    fn atom(&self) -> String {
        let below: Vec<String> = self.below.iter().map(|t| traj_atom(t)).collect();
        format!("{}<{}>", traj_atom(&self.traj), below.join(","))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExchangeReport {
    pub n: usize,
    /// Replicas with exactly `n` root children.
    pub hits: usize,
    /// TV between the law and its image under the cyclic shift of children.
    pub tv: Gate,
    /// Mean of `h(x) − h(σx)`.
    pub functional: Gate,
    pub pass: bool,
}

/// Leaf exchangeability on GW trees: given `n` root children, the law of
/// `(X_ø[k], children in order)` is invariant under permuting the children.
/// The permutation is the cyclic shift `i ↦ i + 1 mod n`.
#[allow(clippy::too_many_arguments)]
pub fn exchangeability_check<R, H>(
    root: &OffspringDistribution,
    rest: &OffspringDistribution,
    rule: &R,
    law: &InitialLaw,
    k: usize,
    n: usize,
    replicas: usize,
    noise: &NoiseSource,
    h: H,
) -> Result<ExchangeReport, VerifyError>
where
    R: Rule<S = Sym>,
    H: Fn(&[Sym], &[ChildSummary]) -> f64,
{
    let family = TreeFamily::Gw { root: root.clone(), rest: rest.clone() };
    let samples = simulate_on_tree(&family, k + 2, rule, law, k, replicas, noise, |tree, s| {
        let kids = tree.children(0);
        (kids.len() == n).then(|| {
            let summary: Vec<ChildSummary> = kids
                .iter()
                .map(|&c| {
                    let mut below: Vec<Vec<Sym>> = tree.children(c).iter().map(|&g| s.trajectory(g).to_vec()).collect();
                    below.sort();
                    ChildSummary { traj: s.trajectory(c).to_vec(), below }
                })
                .collect();
            (s.trajectory(0).to_vec(), summary)
        })
    })?;
    let samples: Vec<_> = samples.into_iter().flatten().collect();
    if samples.len() < 100 {
        return Err(VerifyError::TooFewSamples(format!("{} replicas with {n} root children", samples.len())));
    }
    let shift = |c: &[ChildSummary]| -> Vec<ChildSummary> { (0..n).map(|i| c[(i + 1) % n].clone()).collect() };
    let atom = |x: &[Sym], c: &[ChildSummary]| {
        let parts: Vec<String> = c.iter().map(|s| s.atom()).collect();
        format!("{}|{}", traj_atom(x), parts.join(";"))
    };

    // laws of X and σX; an atom fixed by σ contributes to both at once
    let total = samples.len() as f64;
    let mut p: BTreeMap<String, (f64, f64, f64)> = BTreeMap::new();
    let mut diffs = Vec::with_capacity(samples.len());
    for (x, c) in &samples {
        let sc = shift(c);
        let (a, b) = (atom(x, c), atom(x, &sc));
        if a == b {
            p.entry(a).or_default().2 += 1.0 / total;
        } else {
            p.entry(a).or_default().0 += 1.0 / total;
            p.entry(b).or_default().1 += 1.0 / total;
        }
        diffs.push(h(x, c) - h(x, &sc));
    }
    let (mut tv, mut sd_sum) = (0.0, 0.0);
    for &(pa, qa, _) in p.values() {
        tv += (pa - qa).abs();
        sd_sum += ((pa + qa - (pa - qa).powi(2)) / total).max(0.0).sqrt();
    }
    let tv = Gate::zero(0.5 * tv, 0.5 * sd_sum);
    let (m, se) = mean_se(&diffs);
    let functional = Gate::zero(m, se);
    Ok(ExchangeReport { n, hits: samples.len(), pass: tv.pass && functional.pass, tv, functional })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pca_core::kernels;

    #[test]
    fn single_child_is_trivially_exchangeable() {
        let u = OffspringDistribution::uniform(2);
        let r = exchangeability_check(&u, &u, &kernels::contact(0.3), &InitialLaw::bernoulli(0.5), 2, 1, 2000, &NoiseSource::new(3), |x, c| {
            (x[2] == c[0].traj[2]) as u8 as f64
        })
        .unwrap();
        assert_eq!(r.tv.value, 0.0);
        assert_eq!(r.functional.value, 0.0);
        assert!(r.pass);
    }
}
