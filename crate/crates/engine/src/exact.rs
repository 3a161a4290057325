use std::collections::{BTreeMap, HashMap};

use pca_core::{FiniteRule, Sym};
use pca_graphs::FiniteGraph;

use crate::{EngineError, RuleMap};

pub const DEFAULT_BUDGET: usize = 1 << 24;

/// Exact joint law of the trajectories of `n` vertices up to time `horizon`.
///
/// A configuration is packed into a `u64` with base-`q` digits; the state of
/// vertex `v` at time `t` is digit `v·(horizon+1) + t`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryLaw {
    n: usize,
    horizon: usize,
    q: usize,
    entries: Vec<(u64, f64)>,
}

impl TrajectoryLaw {
    /// Builds a law from packed codes; duplicates are merged, zero masses
    /// dropped, and the total is checked against 1 within 1e-10.
    pub fn from_codes(
        n: usize,
        horizon: usize,
        q: usize,
        masses: impl IntoIterator<Item = (u64, f64)>,
    ) -> Result<Self, EngineError> {
        if q < 1 || (q as f64).powi((n * (horizon + 1)) as i32) > u64::MAX as f64 {
            return Err(EngineError::Precondition("configuration code does not fit in 64 bits".into()));
        }
        let mut acc: HashMap<u64, f64> = HashMap::new();
        for (c, p) in masses {
            if !(p.is_finite() && p >= 0.0) {
                return Err(EngineError::Precondition(format!("mass {p}")));
            }
            *acc.entry(c).or_default() += p;
        }
        let mut entries: Vec<(u64, f64)> = acc.into_iter().filter(|&(_, p)| p > 0.0).collect();
        entries.sort_unstable_by_key(|e| e.0);
        let law = TrajectoryLaw { n, horizon, q, entries };
        let total = law.total();
        if (total - 1.0).abs() > 1e-10 {
            return Err(EngineError::Precondition(format!("law has total mass {total}")));
        }
        Ok(law)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn alphabet_size(&self) -> usize {
        self.q
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// Packs one trajectory per vertex.
    pub fn encode(&self, trajs: &[&[Sym]]) -> u64 {
        encode(self.q, self.horizon, trajs)
    }

    /// Packing used by a law with alphabet `q` and the given horizon.
    pub fn pack(q: usize, horizon: usize, trajs: &[&[Sym]]) -> u64 {
        encode(q, horizon, trajs)
    }

    pub fn decode(&self, code: u64) -> Vec<Vec<Sym>> {
        let mut out = vec![vec![0; self.horizon + 1]; self.n];
        let mut c = code;
        for traj in out.iter_mut() {
            for s in traj.iter_mut() {
                *s = (c % self.q as u64) as Sym;
                c /= self.q as u64;
            }
        }
        out
    }

    pub fn prob(&self, trajs: &[&[Sym]]) -> f64 {
        let c = self.encode(trajs);
        self.entries.binary_search_by_key(&c, |e| e.0).map(|i| self.entries[i].1).unwrap_or(0.0)
    }

    /// Joint law of the listed vertices; keys concatenate their trajectories
    /// in the given order.
    pub fn marginal(&self, vertices: &[usize]) -> BTreeMap<Vec<Sym>, f64> {
        let mut out = BTreeMap::new();
        for &(c, p) in &self.entries {
            let t = self.decode(c);
            let key: Vec<Sym> = vertices.iter().flat_map(|&v| t[v].iter().copied()).collect();
            *out.entry(key).or_insert(0.0) += p;
        }
        out
    }

    /// Applies `f` to each configuration and aggregates masses by its value.
    pub fn pushforward<K: Ord>(&self, mut f: impl FnMut(&[Vec<Sym>]) -> K) -> BTreeMap<K, f64> {
        let mut out = BTreeMap::new();
        for &(c, p) in &self.entries {
            *out.entry(f(&self.decode(c))).or_insert(0.0) += p;
        }
        out
    }
}

pub(crate) fn encode(q: usize, horizon: usize, trajs: &[&[Sym]]) -> u64 {
    let mut c = 0u64;
    for traj in trajs.iter().rev() {
        for t in (0..=horizon).rev() {
            c = c * q as u64 + traj.get(t).copied().unwrap_or(0) as u64;
        }
    }
    c
}

fn check_budget(q: usize, cells: usize, budget: usize) -> Result<(), EngineError> {
    let required = (q as f64).powi(cells as i32);
    if required > budget as f64 {
        return Err(EngineError::Budget { required, budget });
    }
    Ok(())
}

/// Exact law of all trajectories of a finite system, propagated by
/// extending every support configuration with all joint next states.
pub fn propagate_exact_law(
    graph: &FiniteGraph,
    rules: RuleMap<'_, FiniteRule>,
    pmf: &[f64],
    k: usize,
    budget: usize,
) -> Result<TrajectoryLaw, EngineError> {
    let n = graph.n();
    let q = pmf.len();
    pca_core::InitialLaw::Finite(pmf.to_vec()).validate()?;
    for v in 0..n {
        if rules.get(v).alphabet_size() != q {
            return Err(EngineError::Precondition(format!("vertex {v}: rule alphabet differs from initial pmf")));
        }
    }
    check_budget(q, n * (k + 1), budget)?;
    let stride = k + 1;
    let place: Vec<u64> = (0..n * stride).map(|i| (q as u64).pow(i as u32)).collect();

    let mut support: Vec<(u64, f64)> = vec![(0, 1.0)];
    for v in 0..n {
        let mut next = Vec::with_capacity(support.len() * q);
        for &(c, p) in &support {
            for (s, &w) in pmf.iter().enumerate() {
                if w > 0.0 {
                    next.push((c + s as u64 * place[v * stride], p * w));
                }
            }
        }
        support = next;
    }

    let mut traj = vec![vec![0 as Sym; stride]; n];
    let mut probs = vec![vec![0.0; q]; n];
    let mut choices: Vec<Vec<(Sym, f64)>> = vec![vec![]; n];
    for t in 0..k {
        let mut acc: HashMap<u64, f64> = HashMap::with_capacity(support.len() * 2);
        for &(c, p) in &support {
            let mut rest = c;
            for tr in traj.iter_mut() {
                for s in tr.iter_mut() {
                    *s = (rest % q as u64) as Sym;
                    rest /= q as u64;
                }
            }
            for v in 0..n {
                let nb: Vec<&[Sym]> = graph.neighbors(v).iter().map(|&u| &traj[u][..=t]).collect();
                rules.get(v).probs(&traj[v][..=t], &nb, &mut probs[v])?;
                choices[v].clear();
                choices[v].extend(probs[v].iter().enumerate().filter(|e| *e.1 > 0.0).map(|(s, &w)| (s as Sym, w)));
            }
            // odometer over the joint next states
            let mut idx = vec![0usize; n];
            'outer: loop {
                let mut code = c;
                let mut w = p;
                for v in 0..n {
                    let (s, pv) = choices[v][idx[v]];
                    code += s as u64 * place[v * stride + t + 1];
                    w *= pv;
                }
                *acc.entry(code).or_insert(0.0) += w;
                for v in 0..n {
                    idx[v] += 1;
                    if idx[v] < choices[v].len() {
                        continue 'outer;
                    }
                    idx[v] = 0;
                }
                break;
            }
        }
        support = acc.into_iter().collect();
        support.sort_unstable_by_key(|e| e.0);
    }
    TrajectoryLaw::from_codes(n, k, q, support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pca_core::{kernels, StateSpace};

    #[test]
    fn single_vertex_flip() {
        let g = FiniteGraph::empty(1);
        let r = kernels::flip(0.3);
        let law = propagate_exact_law(&g, RuleMap::Same(&r), &[1.0, 0.0], 1, DEFAULT_BUDGET).unwrap();
        assert!((law.prob(&[&[0, 1]]) - 0.3).abs() < 1e-15);
        assert!((law.prob(&[&[0, 0]]) - 0.7).abs() < 1e-15);
        assert_eq!(law.support_len(), 2);
    }

    #[test]
    fn identity_lifts_product_law() {
        let g = FiniteGraph::path(3);
        let r = kernels::identity(StateSpace::binary());
        let law = propagate_exact_law(&g, RuleMap::Same(&r), &[0.25, 0.75], 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(law.support_len(), 8);
        let p = law.prob(&[&[1, 1, 1, 1], &[0, 0, 0, 0], &[1, 1, 1, 1]]);
        assert!((p - 0.75 * 0.25 * 0.75).abs() < 1e-15);
    }

    #[test]
    fn budget_is_reported() {
        let g = FiniteGraph::path(10);
        let r = kernels::flip(0.1);
        match propagate_exact_law(&g, RuleMap::Same(&r), &[0.5, 0.5], 3, DEFAULT_BUDGET) {
            Err(EngineError::Budget { required, .. }) => assert_eq!(required, 2f64.powi(40)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn encode_roundtrip_and_marginal() {
        let g = FiniteGraph::path(2);
        let r = kernels::voter_flip(0.25);
        let law = propagate_exact_law(&g, RuleMap::Same(&r), &[0.5, 0.5], 2, DEFAULT_BUDGET).unwrap();
        for &(c, _) in law.entries() {
            let t = law.decode(c);
            let s: Vec<&[Sym]> = t.iter().map(|x| x.as_slice()).collect();
            assert_eq!(law.encode(&s), c);
        }
        let m0 = law.marginal(&[0]);
        let m1 = law.marginal(&[1]);
        assert!((m0.values().sum::<f64>() - 1.0).abs() < 1e-12);
        for (k, v) in &m0 {
            assert!((v - m1[k]).abs() < 1e-14);
        }
    }
}
