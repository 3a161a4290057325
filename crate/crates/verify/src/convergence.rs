use pca_core::{domains, FiniteRule, InitialLaw, NoiseSource, StreamId};
use pca_engine::{simulate, tv_distance, EmpiricalMeasure, Projection, RuleMap, DEFAULT_BUDGET};
use pca_graphs::{configuration_model, erdos_renyi, random_regular, FiniteGraph, OffspringDistribution};
use pca_localfield::{KeyMissPolicy, NuTable, UgwEnsemble};
use rayon::prelude::*;
use serde::Serialize;

use crate::VerifyError;

/// Sparse random graph families with a known local limit.
#[derive(Clone, Debug)]
pub enum GraphFamily {
    /// Uniform κ-regular graph; limit the κ-regular tree.
    RandomRegular { kappa: usize },
    /// `G(n, λ/n)`; limit UGW(Poisson(λ)).
    ErdosRenyi { lambda: f64 },
    /// Configuration model with i.i.d. degrees from `degrees`; limit UGW(degrees).
    Configuration { degrees: OffspringDistribution },
}

impl GraphFamily {
    pub fn name(&self) -> String {
        match self {
            GraphFamily::RandomRegular { kappa } => format!("random-regular({kappa})"),
            GraphFamily::ErdosRenyi { lambda } => format!("erdos-renyi({lambda})"),
            GraphFamily::Configuration { .. } => "configuration".into(),
        }
    }

    fn sample(&self, n: usize, rng: &mut impl rand::Rng) -> Result<FiniteGraph, VerifyError> {
        Ok(match self {
            GraphFamily::RandomRegular { kappa } => random_regular(n, *kappa, rng)?,
            GraphFamily::ErdosRenyi { lambda } => erdos_renyi(n, *lambda, rng)?,
            GraphFamily::Configuration { degrees } => {
                let mut d: Vec<usize> = (0..n).map(|_| degrees.sample(rng.random())).collect();
                if d.iter().sum::<usize>() % 2 == 1 {
                    d[0] += 1;
                }
                configuration_model(&d, rng)?
            }
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub family: String,
    pub n: usize,
    pub seeds: usize,
    pub tv: f64,
    pub se: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Each TV at most the previous one plus two standard errors.
    pub monotone: bool,
    pub final_tv: f64,
    pub final_pass: bool,
    pub tolerance: f64,
}

impl ConvergenceReport {
    pub fn pass(&self) -> bool {
        self.monotone && self.final_pass
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), VerifyError> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Root-trajectory law of the matching local-field engine: the exact ν table
/// for regular graphs, the UGW ensemble with `lf_replicas` replicas
/// otherwise.
pub fn limit_law(
    family: &GraphFamily,
    rule: &FiniteRule,
    pmf: &[f64],
    k: usize,
    lf_replicas: usize,
    noise: &NoiseSource,
) -> Result<EmpiricalMeasure, VerifyError> {
    let root = match family {
        GraphFamily::RandomRegular { kappa } => {
            return Ok(NuTable::run(*kappa, pmf, rule, k, DEFAULT_BUDGET)?.root_measure()?);
        }
        GraphFamily::ErdosRenyi { lambda } => OffspringDistribution::poisson(*lambda)?,
        GraphFamily::Configuration { degrees } => degrees.clone(),
    };
    let mut e = UgwEnsemble::new(&root, pmf, lf_replicas, noise)?;
    for _ in 0..k {
        e.step(rule, noise, KeyMissPolicy::Strict)?;
    }
    Ok(e.root_measure()?)
}

/// Vertex-sweep root-trajectory measures on `seeds` sampled graphs per size,
/// averaged and compared with `limit`. The standard error combines the
/// seed-to-seed spread of each atom weight.
#[allow(clippy::too_many_arguments)]
pub fn convergence_experiment(
    family: &GraphFamily,
    rule: &FiniteRule,
    pmf: &[f64],
    sizes: &[usize],
    k: usize,
    seeds: usize,
    limit: &EmpiricalMeasure,
    tolerance: f64,
    noise: &NoiseSource,
) -> Result<ConvergenceReport, VerifyError> {
    if seeds < 2 || sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(VerifyError::Precondition("need ≥ 2 seeds and an increasing size grid".into()));
    }
    if limit.kind() != Projection::RootTrajectory.kind(k) {
        return Err(VerifyError::Precondition(format!("limit law has kind {}", limit.kind())));
    }
    let law = InitialLaw::Finite(pmf.to_vec());
    let graphs = noise.derive(domains::GRAPH);
    let dyn_root = noise.derive(domains::REPLICA);
    let mut rows = vec![];
    for &n in sizes {
        let parts: Vec<EmpiricalMeasure> = (0..seeds)
            .into_par_iter()
            .map(|s| {
                let mut rng = graphs.stream(StreamId::new(s as u64, n as u64, 0));
                let g = family.sample(n, &mut rng)?;
                let src = dyn_root.derive(pca_core::mix64((s as u64) << 32 | n as u64));
                let state = simulate(&g, RuleMap::Same(rule), &law, k, 1, &src)?.remove(0);
                Ok(EmpiricalMeasure::vertex_sweep(&state, &g, Projection::RootTrajectory)?)
            })
            .collect::<Result<_, VerifyError>>()?;
        let mean = EmpiricalMeasure::mixture(&parts)?;
        let tv = tv_distance(&mean, limit)?;
        let m = seeds as f64;
        let se = 0.5
            * mean
                .iter()
                .map(|(a, w)| {
                    let var = parts.iter().map(|p| (p.weight(a) - w).powi(2)).sum::<f64>() / (m - 1.0);
                    (var / m).sqrt()
                })
                .sum::<f64>();
        rows.push(ConvergenceRow { family: family.name(), n, seeds, tv, se, pass: tv < tolerance });
    }
    let monotone = rows.windows(2).all(|w| w[1].tv <= w[0].tv + 2.0 * w[1].se.max(w[0].se));
    let final_tv = rows.last().map(|r| r.tv).unwrap_or(f64::NAN);
    Ok(ConvergenceReport { monotone, final_tv, final_pass: final_tv < tolerance, tolerance, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pca_core::kernels;

    #[test]
    fn complete_graph_smoke() {
        // κ = n − 1 random-regular graphs are complete graphs
        let r = kernels::contact(0.25);
        let fam = GraphFamily::RandomRegular { kappa: 3 };
        let noise = NoiseSource::new(1);
        let limit = limit_law(&fam, &r, &[0.5, 0.5], 2, 0, &noise).unwrap();
        let rep = convergence_experiment(&fam, &r, &[0.5, 0.5], &[4], 2, 5, &limit, 0.05, &noise).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert!((0.0..=1.0).contains(&rep.final_tv));
        let mut buf = vec![];
        rep.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("family,n,seeds,tv,se,pass"));
    }

    #[test]
    fn rejects_unsorted_grid() {
        let r = kernels::contact(0.25);
        let fam = GraphFamily::RandomRegular { kappa: 3 };
        let noise = NoiseSource::new(1);
        let limit = limit_law(&fam, &r, &[0.5, 0.5], 1, 0, &noise).unwrap();
        assert!(convergence_experiment(&fam, &r, &[0.5, 0.5], &[100, 50], 1, 5, &limit, 0.05, &noise).is_err());
    }
}
