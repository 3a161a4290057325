use std::sync::atomic::{AtomicUsize, Ordering};

use pca_core::{NoiseSource, Rule, Sym};
use pca_engine::{neighborhood_atom, traj_atom, EmpiricalMeasure, Projection};
use pca_graphs::{sample_gw_tree, unimodular_offspring, OffspringDistribution};
use rayon::prelude::*;

use crate::kernel::{Draw, KeyMissPolicy, TrajKernel};
use crate::regular::{dynamics_uniform, initial_symbol, note_rematches, phantom_uniform, StepStats};
use crate::LfError;

fn sorted(mut v: Vec<&[Sym]>) -> Vec<&[Sym]> {
    v.sort();
    v
}

/// Two-generation slice of one GW replica. Vertices off the slice are at ϖ
/// and are not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct GwReplica {
    pub root: Vec<Sym>,
    pub children: Vec<Vec<Sym>>,
    pub grandchildren: Vec<Vec<Vec<Sym>>>,
}

/// Ensemble for the GW local-field recursion on generations 0 to 2.
#[derive(Clone, Debug)]
pub struct GwEnsemble {
    k: usize,
    pop: Vec<GwReplica>,
    /// `(replica, child)` of every first-generation vertex, in replica order.
    index: Vec<(usize, usize)>,
}

fn first_generation_index<T>(pop: &[T], count: impl Fn(&T) -> usize) -> Vec<(usize, usize)> {
    pop.iter().enumerate().flat_map(|(j, r)| (0..count(r)).map(move |c| (j, c))).collect()
}

impl GwEnsemble {
    /// Samples the slice `𝒯 ∩ 𝕍₂` and i.i.d. initial states per replica.
    pub fn new(
        root_law: &OffspringDistribution,
        rest_law: &OffspringDistribution,
        pmf: &[f64],
        replicas: usize,
        noise: &NoiseSource,
    ) -> Result<Self, LfError> {
        pca_core::InitialLaw::Finite(pmf.to_vec()).validate()?;
        if replicas < 2 {
            return Err(LfError::Precondition("need at least two replicas".into()));
        }
        let pop: Vec<GwReplica> = (0..replicas)
            .map(|i| {
                let t = sample_gw_tree(root_law, rest_law, 2, noise, i as u64);
                let init = |v: usize| vec![initial_symbol(noise, pmf, i, v)];
                GwReplica {
                    root: init(0),
                    children: t.children(0).iter().map(|&c| init(c)).collect(),
                    grandchildren: t.children(0).iter().map(|&c| t.children(c).iter().map(|&g| init(g)).collect()).collect(),
                }
            })
            .collect();
        Ok(Self::assemble(pop, 0))
    }

    fn assemble(pop: Vec<GwReplica>, k: usize) -> Self {
        let index = first_generation_index(&pop, |r| r.children.len());
        GwEnsemble { k, pop, index }
    }

    pub fn horizon(&self) -> usize {
        self.k
    }

    pub fn population(&self) -> &[GwReplica] {
        &self.pop
    }

    /// Empirical γ̄[k] keyed by (first-generation vertex, root). Pooling over
    /// the `n` first-generation vertices of a replica would weight it by `n`,
    /// so each entry carries weight `1/n`.
    pub fn estimate_kernel(&self, policy: KeyMissPolicy) -> Result<TrajKernel, LfError> {
        TrajKernel::build(
            self.k,
            policy,
            self.index.iter().enumerate().map(|(id, &(j, c))| {
                let r = &self.pop[j];
                (r.children[c].as_slice(), r.root.as_slice(), 1.0 / r.children.len() as f64, id)
            }),
        )
    }

    /// Neighborhood multiset of the first-generation vertex behind an entry:
    /// its parent (the root) and its children.
    pub fn payload(&self, id: usize) -> Vec<&[Sym]> {
        let (j, c) = self.index[id];
        let r = &self.pop[j];
        let mut p: Vec<&[Sym]> = vec![&r.root];
        p.extend(r.grandchildren[c].iter().map(|t| t.as_slice()));
        sorted(p)
    }

    pub fn step<R: Rule<S = Sym>>(&mut self, rule: &R, noise: &NoiseSource, policy: KeyMissPolicy) -> Result<StepStats, LfError> {
        let kernel = if self.index.is_empty() { None } else { Some(self.estimate_kernel(policy)?) };
        let k = self.k;
        let rematched = AtomicUsize::new(0);
        let drawn = AtomicUsize::new(0);
        let next: Vec<GwReplica> = (0..self.pop.len())
            .into_par_iter()
            .map(|i| {
                let r = &self.pop[i];
                let kids: Vec<&[Sym]> = r.children.iter().map(|t| t.as_slice()).collect();
                let root = rule.update(&r.root, &kids, dynamics_uniform(noise, i, 0, k))?;
                let mut children = Vec::with_capacity(r.children.len());
                let mut grandchildren = Vec::with_capacity(r.children.len());
                // BFS ids: root 0, children 1..=n, grandchildren afterwards
                let mut next_id = 1 + r.children.len();
                for (c, xc) in r.children.iter().enumerate() {
                    let mut nb: Vec<&[Sym]> = vec![&r.root];
                    nb.extend(r.grandchildren[c].iter().map(|t| t.as_slice()));
                    children.push(rule.update(xc, &nb, dynamics_uniform(noise, i, c + 1, k))?);
                    let mut gs = Vec::with_capacity(r.grandchildren[c].len());
                    for xg in &r.grandchildren[c] {
                        let kern = kernel.as_ref().expect("grandchildren imply first-generation vertices");
                        let d = kern.sample(xg, xc, phantom_uniform(noise, i, next_id, k))?;
                        if let Draw::Rematched(_) = d {
                            rematched.fetch_add(1, Ordering::Relaxed);
                        }
                        drawn.fetch_add(1, Ordering::Relaxed);
                        gs.push(rule.update(xg, &self.payload(d.id()), dynamics_uniform(noise, i, next_id, k))?);
                        next_id += 1;
                    }
                    grandchildren.push(gs);
                }
                Ok(GwReplica {
                    root: push(&r.root, root),
                    children: r.children.iter().zip(children).map(|(t, s)| push(t, s)).collect(),
                    grandchildren: r
                        .grandchildren
                        .iter()
                        .zip(grandchildren)
                        .map(|(ts, ss)| ts.iter().zip(ss).map(|(t, s)| push(t, s)).collect())
                        .collect(),
                })
            })
            .collect::<Result<_, LfError>>()?;
        self.pop = next;
        self.k += 1;
        let rematched = rematched.into_inner();
        note_rematches("GW ensemble", rematched, k, policy);
        Ok(StepStats {
            time: self.k,
            keys: kernel.as_ref().map(|k| k.keys()).unwrap_or(0),
            phantoms: drawn.into_inner(),
            rematched,
        })
    }

    pub fn neighborhood_measure(&self) -> Result<EmpiricalMeasure, LfError> {
        Ok(EmpiricalMeasure::from_atoms(
            &Projection::Neighborhood.kind(self.k),
            self.pop.iter().map(|r| {
                let nb: Vec<&[Sym]> = r.children.iter().map(|t| t.as_slice()).collect();
                neighborhood_atom(&r.root, &nb)
            }),
        )?)
    }

    pub fn root_measure(&self) -> Result<EmpiricalMeasure, LfError> {
        Ok(EmpiricalMeasure::from_atoms(
            &Projection::RootTrajectory.kind(self.k),
            self.pop.iter().map(|r| traj_atom(&r.root)),
        )?)
    }
}

fn push(t: &[Sym], s: Sym) -> Vec<Sym> {
    let mut v = Vec::with_capacity(t.len() + 1);
    v.extend_from_slice(t);
    v.push(s);
    v
}

/// One-generation slice of a UGW replica with the per-child degree proxy
/// `N̂`: `nhat[c]` plays the role of `|N_c|` for child `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct UgwReplica {
    pub root: Vec<Sym>,
    pub children: Vec<Vec<Sym>>,
    pub nhat: Vec<usize>,
}

/// Ensemble for the UGW local-field recursion.
#[derive(Clone, Debug)]
pub struct UgwEnsemble {
    k: usize,
    pop: Vec<UgwReplica>,
    index: Vec<(usize, usize)>,
}

impl UgwEnsemble {
    /// Draws `(𝒯 ∩ 𝕍₁, X(0), |N_c(𝒯)|)` jointly by sampling two generations
    /// and keeping only the degree of each child.
    pub fn new(root_law: &OffspringDistribution, pmf: &[f64], replicas: usize, noise: &NoiseSource) -> Result<Self, LfError> {
        pca_core::InitialLaw::Finite(pmf.to_vec()).validate()?;
        if replicas < 2 {
            return Err(LfError::Precondition("need at least two replicas".into()));
        }
        if !(root_law.mean() > 0.0) {
            return Err(LfError::Precondition("root offspring law needs positive mean".into()));
        }
        let rest = unimodular_offspring(root_law)?;
        let pop: Vec<UgwReplica> = (0..replicas)
            .map(|i| {
                let t = sample_gw_tree(root_law, &rest, 2, noise, i as u64);
                let init = |v: usize| vec![initial_symbol(noise, pmf, i, v)];
                UgwReplica {
                    root: init(0),
                    children: t.children(0).iter().map(|&c| init(c)).collect(),
                    nhat: t.children(0).iter().map(|&c| 1 + t.children(c).len()).collect(),
                }
            })
            .collect();
        let index = first_generation_index(&pop, |r| r.children.len());
        Ok(UgwEnsemble { k: 0, pop, index })
    }

    pub fn horizon(&self) -> usize {
        self.k
    }

    pub fn population(&self) -> &[UgwReplica] {
        &self.pop
    }

    /// The replica-level `N̂(k)`: the proxy degree of child 1, 0 for a lone root.
    pub fn nhat(&self, replica: usize) -> usize {
        self.pop[replica].nhat.first().copied().unwrap_or(0)
    }

    /// Size-biased γ̄[k] keyed by (root, child). The importance weight
    /// `|N_ø|/N̂` times the pooling correction `1/|N_ø|` leaves `1/N̂_c`.
    pub fn estimate_kernel(&self, policy: KeyMissPolicy) -> Result<TrajKernel, LfError> {
        TrajKernel::build(
            self.k,
            policy,
            self.index.iter().enumerate().map(|(id, &(j, c))| {
                let r = &self.pop[j];
                (r.root.as_slice(), r.children[c].as_slice(), 1.0 / r.nhat[c] as f64, id)
            }),
        )
    }

    /// Root neighborhood multiset of the replica behind an entry.
    pub fn payload(&self, id: usize) -> Vec<&[Sym]> {
        let r = &self.pop[self.index[id].0];
        sorted(r.children.iter().map(|t| t.as_slice()).collect())
    }

    pub fn step<R: Rule<S = Sym>>(&mut self, rule: &R, noise: &NoiseSource, policy: KeyMissPolicy) -> Result<StepStats, LfError> {
        let kernel = if self.index.is_empty() { None } else { Some(self.estimate_kernel(policy)?) };
        let k = self.k;
        let rematched = AtomicUsize::new(0);
        let next: Vec<UgwReplica> = (0..self.pop.len())
            .into_par_iter()
            .map(|i| {
                let r = &self.pop[i];
                let kids: Vec<&[Sym]> = r.children.iter().map(|t| t.as_slice()).collect();
                let root = push(&r.root, rule.update(&r.root, &kids, dynamics_uniform(noise, i, 0, k))?);
                let mut children = Vec::with_capacity(r.children.len());
                let mut nhat = Vec::with_capacity(r.children.len());
                for (c, xc) in r.children.iter().enumerate() {
                    let kern = kernel.as_ref().expect("children imply a nonempty kernel");
                    let d = kern.sample(xc, &r.root, phantom_uniform(noise, i, c + 1, k))?;
                    if let Draw::Rematched(_) = d {
                        rematched.fetch_add(1, Ordering::Relaxed);
                    }
                    let z = self.payload(d.id());
                    nhat.push(z.len());
                    children.push(push(xc, rule.update(xc, &z, dynamics_uniform(noise, i, c + 1, k))?));
                }
                Ok(UgwReplica { root, children, nhat })
            })
            .collect::<Result<_, LfError>>()?;
        if next.iter().any(|r| r.nhat.contains(&0)) {
            return Err(LfError::Invariant("N̂ = 0 for a non-isolated root".into()));
        }
        self.pop = next;
        self.k += 1;
        let rematched = rematched.into_inner();
        note_rematches("UGW ensemble", rematched, k, policy);
        Ok(StepStats { time: self.k, keys: kernel.as_ref().map(|k| k.keys()).unwrap_or(0), phantoms: self.index.len(), rematched })
    }

    pub fn neighborhood_measure(&self) -> Result<EmpiricalMeasure, LfError> {
        Ok(EmpiricalMeasure::from_atoms(
            &Projection::Neighborhood.kind(self.k),
            self.pop.iter().map(|r| {
                let nb: Vec<&[Sym]> = r.children.iter().map(|t| t.as_slice()).collect();
                neighborhood_atom(&r.root, &nb)
            }),
        )?)
    }

    pub fn root_measure(&self) -> Result<EmpiricalMeasure, LfError> {
        Ok(EmpiricalMeasure::from_atoms(
            &Projection::RootTrajectory.kind(self.k),
            self.pop.iter().map(|r| traj_atom(&r.root)),
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pca_core::kernels;

    #[test]
    fn lone_roots_update_alone() {
        let noise = NoiseSource::new(3);
        let d0 = OffspringDistribution::delta(0);
        let mut e = GwEnsemble::new(&d0, &OffspringDistribution::delta(2), &[0.5, 0.5], 100, &noise).unwrap();
        let s = e.step(&kernels::flip(0.2), &noise, KeyMissPolicy::Strict).unwrap();
        assert_eq!(s.phantoms, 0);
        assert!(e.population().iter().all(|r| r.children.is_empty() && r.root.len() == 2));
        // δ_0 has zero mean, so the size-biased law is undefined
        assert!(matches!(UgwEnsemble::new(&d0, &[0.5, 0.5], 100, &noise), Err(LfError::Precondition(_))));
    }

    #[test]
    fn payloads_contain_the_parent() {
        let noise = NoiseSource::new(5);
        let rho = OffspringDistribution::uniform(2);
        let mut e = GwEnsemble::new(&rho, &rho, &[0.5, 0.5], 2000, &noise).unwrap();
        let r = kernels::voter_flip(0.25);
        for _ in 0..2 {
            e.step(&r, &noise, KeyMissPolicy::Strict).unwrap();
        }
        let kern = e.estimate_kernel(KeyMissPolicy::Strict).unwrap();
        for rep in e.population() {
            for (c, xc) in rep.children.iter().enumerate() {
                for xg in &rep.grandchildren[c] {
                    for (id, _) in kern.conditional(xg, xc).unwrap() {
                        assert!(e.payload(id).contains(&xc.as_slice()));
                    }
                }
            }
        }
    }

    #[test]
    fn ugw_nhat_audit() {
        let noise = NoiseSource::new(7);
        let rho = OffspringDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let mut e = UgwEnsemble::new(&rho, &[0.5, 0.5], 5000, &noise).unwrap();
        let r = kernels::contact(0.25);
        for _ in 0..3 {
            e.step(&r, &noise, KeyMissPolicy::Strict).unwrap();
            for (i, rep) in e.population().iter().enumerate() {
                assert_eq!(e.nhat(i) == 0, rep.children.is_empty());
                assert!(rep.nhat.iter().all(|&n| (1..=2).contains(&n)));
            }
        }
    }
}
