use pca_core::{domains, InitialLaw, NoiseSource, Rule, StateValue, StreamId, Sym, CEMETERY};
use pca_graphs::FiniteGraph;
use rayon::prelude::*;

use crate::EngineError;

/// State types the engine can initialise.
pub trait Simulable: StateValue {
    fn draw_initial(law: &InitialLaw, u: f64, z: f64) -> Result<Self, EngineError>;
    fn cemetery() -> Option<Self>;
}

impl Simulable for Sym {
    fn draw_initial(law: &InitialLaw, u: f64, _: f64) -> Result<Sym, EngineError> {
        match law {
            InitialLaw::Finite(p) => Ok(InitialLaw::sample_sym(p, u)),
            InitialLaw::Gaussian { .. } => Err(EngineError::Precondition("Gaussian start for a finite rule".into())),
        }
    }
    fn cemetery() -> Option<Sym> {
        Some(CEMETERY)
    }
}

impl Simulable for f64 {
    fn draw_initial(law: &InitialLaw, _: f64, z: f64) -> Result<f64, EngineError> {
        match law {
            InitialLaw::Gaussian { mean, var } => Ok(mean + var.sqrt() * z),
            InitialLaw::Finite(_) => Err(EngineError::Precondition("finite start for a real rule".into())),
        }
    }
    fn cemetery() -> Option<f64> {
        None
    }
}

/// Which rule each vertex uses.
#[derive(Debug)]
pub enum RuleMap<'a, R> {
    Same(&'a R),
    PerVertex(&'a [R]),
}

impl<R> Clone for RuleMap<'_, R> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<R> Copy for RuleMap<'_, R> {}

impl<'a, R> RuleMap<'a, R> {
    pub fn get(&self, v: usize) -> &'a R {
        match self {
            RuleMap::Same(r) => r,
            RuleMap::PerVertex(rs) => &rs[v],
        }
    }
}

/// Trajectories of all vertices up to a common time.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState<S> {
    traj: Vec<Vec<S>>,
}

impl<S: Simulable> SystemState<S> {
    /// i.i.d. draws from `law`, except at `absent` vertices which start (and
    /// stay) at the cemetery. Vertex `v` reads address `(replica, v, 0)`.
    pub fn initial(
        n: usize,
        law: &InitialLaw,
        absent: &[bool],
        noise: &NoiseSource,
        replica: u64,
    ) -> Result<Self, EngineError> {
        law.validate()?;
        let src = noise.derive(domains::INITIAL);
        let mut traj = Vec::with_capacity(n);
        for v in 0..n {
            if absent.get(v).copied().unwrap_or(false) {
                let c = S::cemetery().ok_or_else(|| EngineError::Precondition("no cemetery for real states".into()))?;
                traj.push(vec![c]);
                continue;
            }
            let id = StreamId::new(replica, v as u64, 0);
            traj.push(vec![S::draw_initial(law, src.uniform(id), src.normal(id))?]);
        }
        Ok(SystemState { traj })
    }

    pub fn from_trajectories(traj: Vec<Vec<S>>) -> Result<Self, EngineError> {
        let len = traj.first().map(|t| t.len()).unwrap_or(1);
        if len == 0 || traj.iter().any(|t| t.len() != len) {
            return Err(EngineError::Precondition("trajectories must be non-empty and of equal length".into()));
        }
        for t in &traj {
            if t.iter().any(|s| s.is_cemetery()) && !t.iter().all(|s| s.is_cemetery()) {
                return Err(pca_core::CoreError::MixedCemetery.into());
            }
        }
        Ok(SystemState { traj })
    }
}

impl<S: StateValue> SystemState<S> {
    pub fn n(&self) -> usize {
        self.traj.len()
    }

    pub fn horizon(&self) -> usize {
        self.traj.first().map(|t| t.len() - 1).unwrap_or(0)
    }

    pub fn trajectory(&self, v: usize) -> &[S] {
        &self.traj[v]
    }

    pub fn trajectories(&self) -> &[Vec<S>] {
        &self.traj
    }

    pub fn is_absent(&self, v: usize) -> bool {
        self.traj[v][0].is_cemetery()
    }
}

/// One synchronous step: every live vertex is updated from the time-`k`
/// snapshot, cemetery vertices stay put and are invisible to their
/// neighbors. Vertex `v` reads noise at `(replica, v, k + 1)`.
pub fn step_synchronous<R>(
    graph: &FiniteGraph,
    rules: RuleMap<'_, R>,
    state: &mut SystemState<R::S>,
    noise: &NoiseSource,
    replica: u64,
) -> Result<(), EngineError>
where
    R: Rule,
    R::S: Simulable,
{
    if graph.n() != state.n() {
        return Err(EngineError::Precondition(format!("graph has {} vertices, state {}", graph.n(), state.n())));
    }
    let k = state.horizon();
    let src = noise.derive(domains::DYNAMICS);
    let mut next = Vec::with_capacity(state.n());
    let mut nb: Vec<&[R::S]> = Vec::new();
    for v in 0..state.n() {
        if state.is_absent(v) {
            next.push(state.traj[v][0]);
            continue;
        }
        nb.clear();
        nb.extend(graph.neighbors(v).iter().filter(|&&u| !state.is_absent(u)).map(|&u| state.traj[u].as_slice()));
        let rule = rules.get(v);
        let xi = src.draw(rule.noise_kind(), StreamId::new(replica, v as u64, k as u64 + 1));
        next.push(rule.update(&state.traj[v], &nb, xi)?);
    }
    for (t, x) in state.traj.iter_mut().zip(next) {
        t.push(x);
    }
    Ok(())
}

/// `replicas` independent runs to time `k`, deterministic given `noise`.
pub fn simulate<R>(
    graph: &FiniteGraph,
    rules: RuleMap<'_, R>,
    law: &InitialLaw,
    k: usize,
    replicas: usize,
    noise: &NoiseSource,
) -> Result<Vec<SystemState<R::S>>, EngineError>
where
    R: Rule,
    R::S: Simulable,
{
    if replicas == 0 {
        return Err(EngineError::Precondition("need at least one replica".into()));
    }
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut s = SystemState::initial(graph.n(), law, &[], noise, r as u64)?;
            for _ in 0..k {
                step_synchronous(graph, rules, &mut s, noise, r as u64)?;
            }
            Ok(s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use pca_core::{kernels, AffineRule};

    #[test]
    fn affine_without_coupling_ignores_graph() {
        let g = FiniteGraph::complete(4);
        let e = FiniteGraph::empty(4);
        let r = AffineRule::new(0.5, 0.0, 0.2);
        let noise = NoiseSource::new(3);
        let law = InitialLaw::Gaussian { mean: 0.0, var: 1.0 };
        let a = simulate(&g, RuleMap::Same(&r), &law, 3, 2, &noise).unwrap();
        let b = simulate(&e, RuleMap::Same(&r), &law, 3, 2, &noise).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn majority_fixed_point() {
        let g = FiniteGraph::complete(3);
        let r = kernels::noisy_majority(0.0);
        let law = InitialLaw::Finite(vec![1.0, 0.0]);
        let out = simulate(&g, RuleMap::Same(&r), &law, 5, 3, &NoiseSource::new(1)).unwrap();
        assert!(out.iter().all(|s| s.trajectories().iter().all(|t| t.iter().all(|&x| x == 0))));
    }

    #[test]
    fn isolated_flip_rate() {
        let g = FiniteGraph::empty(1);
        let r = kernels::flip(0.3);
        let law = InitialLaw::Finite(vec![1.0, 0.0]);
        let m = 100_000;
        let out = simulate(&g, RuleMap::Same(&r), &law, 1, m, &NoiseSource::new(8)).unwrap();
        let ones = out.iter().filter(|s| s.trajectory(0)[1] == 1).count() as f64 / m as f64;
        let se = (0.3 * 0.7 / m as f64).sqrt();
        assert!((ones - 0.3).abs() < 4.0 * se, "{ones}");
    }

    #[test]
    fn identity_keeps_trajectories_constant_and_is_deterministic() {
        let g = FiniteGraph::cycle(5).unwrap();
        let r = kernels::identity(pca_core::StateSpace::binary());
        let law = InitialLaw::bernoulli(0.5);
        let a = simulate(&g, RuleMap::Same(&r), &law, 4, 1, &NoiseSource::new(2)).unwrap();
        let b = simulate(&g, RuleMap::Same(&r), &law, 4, 1, &NoiseSource::new(2)).unwrap();
        assert_eq!(a, b);
        assert!(a[0].trajectories().iter().all(|t| t.iter().all(|&x| x == t[0])));
    }

    #[test]
    fn cemetery_vertices_are_inert() {
        let g = FiniteGraph::path(3);
        let r = kernels::voter_flip(0.25);
        let noise = NoiseSource::new(5);
        let mut s = SystemState::initial(3, &InitialLaw::bernoulli(0.5), &[false, false, true], &noise, 0).unwrap();
        for _ in 0..3 {
            step_synchronous(&g, RuleMap::Same(&r), &mut s, &noise, 0).unwrap();
        }
        assert!(s.trajectory(2).iter().all(|&x| x == CEMETERY));
        assert!(s.trajectory(1).iter().all(|&x| x < 2));
    }

    #[test]
    fn initial_marginal() {
        let noise = NoiseSource::new(6);
        let s = SystemState::<Sym>::initial(50_000, &InitialLaw::bernoulli(0.3), &[], &noise, 0).unwrap();
        let p = s.trajectories().iter().filter(|t| t[0] == 1).count() as f64 / 50_000.0;
        assert!((p - 0.3).abs() < 4.0 * (0.21f64 / 50_000.0).sqrt());
    }
}
