use std::sync::atomic::{AtomicUsize, Ordering};

use pca_core::{domains, InitialLaw, NoiseSource, Rule, StreamId, Sym};
use pca_engine::{neighborhood_atom, traj_atom, EmpiricalMeasure, Projection};
use rayon::prelude::*;

use crate::kernel::{Draw, KeyMissPolicy, TrajKernel};
use crate::LfError;

/// Per-step bookkeeping shared by the ensemble engines.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    /// Time reached by the step.
    pub time: usize,
    /// Distinct conditioning keys in the estimated kernel.
    pub keys: usize,
    /// Phantom payloads drawn.
    pub phantoms: usize,
    /// Draws served by windowed rematching.
    pub rematched: usize,
}

pub(crate) fn initial_symbol(noise: &NoiseSource, pmf: &[f64], replica: usize, vertex: usize) -> Sym {
    let u = noise.derive(domains::INITIAL).uniform(StreamId::new(replica as u64, vertex as u64, 0));
    InitialLaw::sample_sym(pmf, u)
}

pub(crate) fn phantom_uniform(noise: &NoiseSource, replica: usize, vertex: usize, k: usize) -> f64 {
    noise.derive(domains::PHANTOM).uniform(StreamId::new(replica as u64, vertex as u64, k as u64))
}

pub(crate) fn dynamics_uniform(noise: &NoiseSource, replica: usize, vertex: usize, k: usize) -> f64 {
    noise.derive(domains::DYNAMICS).uniform(StreamId::new(replica as u64, vertex as u64, k as u64 + 1))
}

pub(crate) fn note_rematches(engine: &str, n: usize, k: usize, policy: KeyMissPolicy) {
    if let (KeyMissPolicy::Windowed(w), true) = (policy, n > 0) {
        log::warn!("{engine}: {n} phantom draws at time {k} rematched on a window of {w} (approximate kernel)");
    }
}

/// Interacting-ensemble approximation of the regular-tree recursion: each
/// replica holds the trajectories of a root (slot 0) and its `κ` neighbors.
#[derive(Clone, Debug)]
pub struct RegularEnsemble {
    kappa: usize,
    k: usize,
    pop: Vec<Vec<Vec<Sym>>>,
}

impl RegularEnsemble {
    pub fn new(kappa: usize, pmf: &[f64], replicas: usize, noise: &NoiseSource) -> Result<Self, LfError> {
        InitialLaw::Finite(pmf.to_vec()).validate()?;
        if kappa < 1 || replicas < 2 {
            return Err(LfError::Precondition("need κ ≥ 1 and at least two replicas".into()));
        }
        let pop = (0..replicas)
            .map(|i| (0..=kappa).map(|v| vec![initial_symbol(noise, pmf, i, v)]).collect())
            .collect();
        Ok(RegularEnsemble { kappa, k: 0, pop })
    }

    pub fn from_population(kappa: usize, pop: Vec<Vec<Vec<Sym>>>) -> Result<Self, LfError> {
        let k = pop.first().and_then(|r| r.first()).map(|t| t.len()).unwrap_or(0);
        if pop.len() < 2 || k == 0 || pop.iter().any(|r| r.len() != kappa + 1 || r.iter().any(|t| t.len() != k)) {
            return Err(LfError::Precondition("population must hold ≥ 2 replicas of κ + 1 equal-length trajectories".into()));
        }
        Ok(RegularEnsemble { kappa, k: k - 1, pop })
    }

    pub fn horizon(&self) -> usize {
        self.k
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn replicas(&self) -> usize {
        self.pop.len()
    }

    pub fn population(&self) -> &[Vec<Vec<Sym>>] {
        &self.pop
    }

    /// Empirical γ̄[k]: each replica contributes `κ` entries, one per choice
    /// of the neighbor in slot 1. Entry id `i·κ + (v − 1)`.
    pub fn estimate_kernel(&self, policy: KeyMissPolicy) -> Result<TrajKernel, LfError> {
        let kappa = self.kappa;
        TrajKernel::build(
            self.k,
            policy,
            self.pop.iter().enumerate().flat_map(|(i, r)| {
                (1..=kappa).map(move |v| (r[0].as_slice(), r[v].as_slice(), 1.0, i * kappa + v - 1))
            }),
        )
    }

    /// Phantom block of a kernel entry: the root's other neighbors.
    pub fn payload(&self, id: usize) -> Vec<&[Sym]> {
        let (j, w) = (id / self.kappa, id % self.kappa + 1);
        (1..=self.kappa).filter(|&u| u != w).map(|u| self.pop[j][u].as_slice()).collect()
    }

    pub fn step<R: Rule<S = Sym>>(&mut self, rule: &R, noise: &NoiseSource, policy: KeyMissPolicy) -> Result<StepStats, LfError> {
        let kernel = self.estimate_kernel(policy)?;
        let k = self.k;
        let rematched = AtomicUsize::new(0);
        let next: Vec<Vec<Sym>> = (0..self.pop.len())
            .into_par_iter()
            .map(|i| {
                let r = &self.pop[i];
                let mut out = Vec::with_capacity(self.kappa + 1);
                let nb: Vec<&[Sym]> = r[1..].iter().map(|t| t.as_slice()).collect();
                out.push(rule.update(&r[0], &nb, dynamics_uniform(noise, i, 0, k))?);
                for v in 1..=self.kappa {
                    // the neighbor takes the root slot, the root takes slot 1
                    let d = kernel.sample(&r[v], &r[0], phantom_uniform(noise, i, v, k))?;
                    if let Draw::Rematched(_) = d {
                        rematched.fetch_add(1, Ordering::Relaxed);
                    }
                    let mut nbv: Vec<&[Sym]> = vec![&r[0]];
                    nbv.extend(self.payload(d.id()));
                    out.push(rule.update(&r[v], &nbv, dynamics_uniform(noise, i, v, k))?);
                }
                Ok(out)
            })
            .collect::<Result<_, LfError>>()?;
        for (r, x) in self.pop.iter_mut().zip(next) {
            for (t, s) in r.iter_mut().zip(x) {
                t.push(s);
            }
        }
        self.k += 1;
        let rematched = rematched.into_inner();
        note_rematches("regular ensemble", rematched, k, policy);
        Ok(StepStats { time: self.k, keys: kernel.keys(), phantoms: self.pop.len() * self.kappa, rematched })
    }

    pub fn root_measure(&self) -> Result<EmpiricalMeasure, LfError> {
        Ok(EmpiricalMeasure::from_atoms(
            &Projection::RootTrajectory.kind(self.k),
            self.pop.iter().map(|r| traj_atom(&r[0])),
        )?)
    }

    pub fn neighborhood_measure(&self) -> Result<EmpiricalMeasure, LfError> {
        Ok(EmpiricalMeasure::from_atoms(
            &Projection::Neighborhood.kind(self.k),
            self.pop.iter().map(|r| {
                let nb: Vec<&[Sym]> = r[1..].iter().map(|t| t.as_slice()).collect();
                neighborhood_atom(&r[0], &nb)
            }),
        )?)
    }
}
