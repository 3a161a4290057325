use std::collections::HashMap;

use pca_core::{FiniteRule, InitialLaw, Sym};
use pca_engine::{EmpiricalMeasure, TrajectoryLaw};

use crate::LfError;

type Traj = Vec<Sym>;

/// Exact conditional law of the other `κ − 1` neighbor trajectories given
/// the root and neighbor 1.
pub type ExactGamma = HashMap<(Traj, Traj), Vec<(Vec<Traj>, f64)>>;

/// Exact table ν_k of the root and its `κ` neighbors on the regular tree.
#[derive(Clone, Debug)]
pub struct NuTable {
    kappa: usize,
    law: TrajectoryLaw,
}

impl NuTable {
    /// Product law of `κ + 1` i.i.d. initial states.
    pub fn initial(kappa: usize, pmf: &[f64]) -> Result<Self, LfError> {
        if kappa < 1 {
            return Err(LfError::Precondition("κ must be at least 1".into()));
        }
        InitialLaw::Finite(pmf.to_vec()).validate()?;
        let q = pmf.len();
        let mut masses = vec![(0u64, 1.0)];
        for v in 0..=kappa {
            let mut next = vec![];
            for &(c, p) in &masses {
                for (s, &w) in pmf.iter().enumerate() {
                    if w > 0.0 {
                        next.push((c + s as u64 * (q as u64).pow(v as u32), p * w));
                    }
                }
            }
            masses = next;
        }
        Ok(NuTable { kappa, law: TrajectoryLaw::from_codes(kappa + 1, 0, q, masses)? })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn horizon(&self) -> usize {
        self.law.horizon()
    }

    pub fn law(&self) -> &TrajectoryLaw {
        &self.law
    }

    pub fn neighborhood_measure(&self) -> Result<EmpiricalMeasure, LfError> {
        Ok(EmpiricalMeasure::root_neighborhood(&self.law)?)
    }

    pub fn root_measure(&self) -> Result<EmpiricalMeasure, LfError> {
        Ok(EmpiricalMeasure::root_trajectory(&self.law)?)
    }

    /// γ_k(· | x_0, x_1) read off ν_k by conditioning on the first two slots.
    pub fn gamma(&self) -> ExactGamma {
        let mut g: ExactGamma = HashMap::new();
        for &(c, p) in self.law.entries() {
            let mut t = self.law.decode(c);
            let rest = t.split_off(2);
            let x1 = t.pop().expect("two slots");
            let x0 = t.pop().expect("two slots");
            g.entry((x0, x1)).or_default().push((rest, p));
        }
        for list in g.values_mut() {
            let total: f64 = list.iter().map(|e| e.1).sum();
            for e in list.iter_mut() {
                e.1 /= total;
            }
        }
        g
    }

    /// ν_{k+1} from ν_k. Each neighbor's phantom block is integrated out
    /// against γ_k with the neighbor in the root slot, so the next-state law
    /// of the configuration factorizes over the `κ + 1` vertices.
    pub fn step(&self, rule: &FiniteRule, budget: usize) -> Result<NuTable, LfError> {
        let q = self.law.alphabet_size();
        if rule.alphabet_size() != q {
            return Err(LfError::Precondition("rule alphabet differs from the table".into()));
        }
        let k = self.horizon();
        let n = self.kappa + 1;
        let required = (q as f64).powi((n * (k + 2)) as i32);
        if required > budget as f64 {
            return Err(pca_engine::EngineError::Budget { required, budget }.into());
        }
        let gamma = self.gamma();
        let mut neighbor_next: HashMap<(Traj, Traj), Vec<f64>> = HashMap::new();
        let mut buf = vec![0.0; q];
        let mut masses = Vec::new();
        let mut next: Vec<Vec<f64>> = vec![vec![0.0; q]; n];
        for &(c, p) in self.law.entries() {
            let t = self.law.decode(c);
            let nb: Vec<&[Sym]> = t[1..].iter().map(|x| x.as_slice()).collect();
            rule.probs(&t[0], &nb, &mut next[0])?;
            for v in 1..n {
                let key = (t[v].clone(), t[0].clone());
                if !neighbor_next.contains_key(&key) {
                    let blocks = gamma.get(&key).ok_or_else(|| {
                        LfError::Invariant(format!("conditioning pair with zero mass at time {k}"))
                    })?;
                    let mut pi = vec![0.0; q];
                    for (block, w) in blocks {
                        let mut nbv: Vec<&[Sym]> = vec![&t[0]];
                        nbv.extend(block.iter().map(|x| x.as_slice()));
                        rule.probs(&t[v], &nbv, &mut buf)?;
                        for (acc, b) in pi.iter_mut().zip(&buf) {
                            *acc += w * b;
                        }
                    }
                    neighbor_next.insert(key.clone(), pi);
                }
                next[v].copy_from_slice(&neighbor_next[&key]);
            }
            let mut idx = vec![0usize; n];
            let mut ext: Vec<Traj> = t.iter().map(|x| {
                let mut y = x.clone();
                y.push(0);
                y
            }).collect();
            'odo: loop {
                let w: f64 = (0..n).map(|v| next[v][idx[v]]).product();
                if w > 0.0 {
                    for v in 0..n {
                        ext[v][k + 1] = idx[v] as Sym;
                    }
                    let refs: Vec<&[Sym]> = ext.iter().map(|x| x.as_slice()).collect();
                    masses.push((TrajectoryLaw::pack(q, k + 1, &refs), p * w));
                }
                for v in 0..n {
                    idx[v] += 1;
                    if idx[v] < q {
                        continue 'odo;
                    }
                    idx[v] = 0;
                }
                break;
            }
        }
        Ok(NuTable { kappa: self.kappa, law: TrajectoryLaw::from_codes(n, k + 1, q, masses)? })
    }

    /// Runs `k` steps from the initial product law.
    pub fn run(kappa: usize, pmf: &[f64], rule: &FiniteRule, k: usize, budget: usize) -> Result<NuTable, LfError> {
        let mut nu = NuTable::initial(kappa, pmf)?;
        for _ in 0..k {
            nu = nu.step(rule, budget)?;
        }
        Ok(nu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pca_core::{kernels, StateSpace};
    use pca_engine::DEFAULT_BUDGET;

    #[test]
    fn identity_keeps_product_law() {
        let r = kernels::identity(StateSpace::binary());
        let nu = NuTable::run(2, &[0.3, 0.7], &r, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(nu.law().support_len(), 8);
        let p = nu.law().prob(&[&[1, 1, 1, 1], &[0, 0, 0, 0], &[1, 1, 1, 1]]);
        assert!((p - 0.7 * 0.3 * 0.7).abs() < 1e-15);
    }

    #[test]
    fn neighbor_marginals_are_exchangeable() {
        let r = kernels::persistence();
        let nu = NuTable::run(3, &[0.5, 0.5], &r, 2, DEFAULT_BUDGET).unwrap();
        let a = nu.law().marginal(&[0, 1]);
        let b = nu.law().marginal(&[0, 2]);
        let c = nu.law().marginal(&[0, 3]);
        for (key, p) in &a {
            assert!((p - b[key]).abs() < 1e-14 && (p - c[key]).abs() < 1e-14);
        }
    }

    #[test]
    fn gamma_rows_are_normalized() {
        let nu = NuTable::run(3, &[0.4, 0.6], &kernels::voter_flip(0.25), 1, DEFAULT_BUDGET).unwrap();
        for rows in nu.gamma().values() {
            assert!((rows.iter().map(|r| r.1).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
