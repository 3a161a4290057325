use std::collections::BTreeMap;
use std::io::{Read, Write};

use pca_core::{Sym, CEMETERY};
use pca_graphs::FiniteGraph;

use crate::{EngineError, SystemState, TrajectoryLaw};

/// Canonical text of one symbol trajectory: base-36 digits, `*` for ϖ.
pub fn traj_atom(t: &[Sym]) -> String {
    t.iter()
        .map(|&s| {
            if s == CEMETERY {
                '*'
            } else {
                char::from_digit(s as u32, 36).unwrap_or('?')
            }
        })
        .collect()
}

/// `root|n1,n2,…` with the neighbor trajectories sorted, so the atom only
/// depends on the multiset of neighbor trajectories.
pub fn neighborhood_atom(root: &[Sym], nbrs: &[&[Sym]]) -> String {
    let mut n: Vec<String> = nbrs.iter().map(|t| traj_atom(t)).collect();
    n.sort();
    format!("{}|{}", traj_atom(root), n.join(","))
}

/// Functional applied to a vertex before it enters a measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    RootTrajectory,
    Neighborhood,
}

impl Projection {
    pub fn atom(&self, own: &[Sym], nbrs: &[&[Sym]]) -> String {
        match self {
            Projection::RootTrajectory => traj_atom(own),
            Projection::Neighborhood => neighborhood_atom(own, nbrs),
        }
    }

    pub fn kind(&self, k: usize) -> String {
        match self {
            Projection::RootTrajectory => format!("trajectory[k={k}]"),
            Projection::Neighborhood => format!("neighborhood[k={k}]"),
        }
    }
}

/// Normalized weighted multiset of atoms, tagged with the kind of atom it holds.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    kind: String,
    weights: BTreeMap<String, f64>,
}

impl EmpiricalMeasure {
    pub fn from_weighted(kind: &str, items: impl IntoIterator<Item = (String, f64)>) -> Result<Self, EngineError> {
        let mut weights: BTreeMap<String, f64> = BTreeMap::new();
        for (a, w) in items {
            if !(w.is_finite() && w >= 0.0) {
                return Err(EngineError::Precondition(format!("weight {w}")));
            }
            *weights.entry(a).or_insert(0.0) += w;
        }
        let total: f64 = weights.values().sum();
        if weights.is_empty() || total <= 0.0 {
            return Err(EngineError::Empty);
        }
        weights.retain(|_, w| *w > 0.0);
        for w in weights.values_mut() {
            *w /= total;
        }
        Ok(EmpiricalMeasure { kind: kind.to_string(), weights })
    }

    /// Equal weight on every item.
    pub fn from_atoms(kind: &str, atoms: impl IntoIterator<Item = String>) -> Result<Self, EngineError> {
        Self::from_weighted(kind, atoms.into_iter().map(|a| (a, 1.0)))
    }

    /// Pushes an exact law through `f`.
    pub fn from_law(kind: &str, law: &TrajectoryLaw, f: impl FnMut(&[Vec<Sym>]) -> String) -> Result<Self, EngineError> {
        Self::from_weighted(kind, law.pushforward(f))
    }

    /// Neighborhood law of vertex 0 given neighbors `1..n` of an exact law.
    pub fn root_neighborhood(law: &TrajectoryLaw) -> Result<Self, EngineError> {
        Self::from_law(&Projection::Neighborhood.kind(law.horizon()), law, |t| {
            let nb: Vec<&[Sym]> = t[1..].iter().map(|x| x.as_slice()).collect();
            neighborhood_atom(&t[0], &nb)
        })
    }

    /// Root trajectory law (vertex 0) of an exact law.
    pub fn root_trajectory(law: &TrajectoryLaw) -> Result<Self, EngineError> {
        Self::from_law(&Projection::RootTrajectory.kind(law.horizon()), law, |t| traj_atom(&t[0]))
    }

    /// Average of point masses over every live vertex of one system.
    pub fn vertex_sweep(state: &SystemState<Sym>, graph: &FiniteGraph, proj: Projection) -> Result<Self, EngineError> {
        let atoms = (0..state.n()).filter(|&v| !state.is_absent(v)).map(|v| {
            let nb: Vec<&[Sym]> =
                graph.neighbors(v).iter().filter(|&&u| !state.is_absent(u)).map(|&u| state.trajectory(u)).collect();
            proj.atom(state.trajectory(v), &nb)
        });
        Self::from_atoms(&proj.kind(state.horizon()), atoms)
    }

    /// Equal-weight mixture of measures of one kind.
    pub fn mixture(parts: &[EmpiricalMeasure]) -> Result<Self, EngineError> {
        let first = parts.first().ok_or(EngineError::Empty)?;
        if let Some(p) = parts.iter().find(|p| p.kind != first.kind) {
            return Err(EngineError::KindMismatch(first.kind.clone(), p.kind.clone()));
        }
        Self::from_weighted(&first.kind, parts.iter().flat_map(|p| p.weights.iter().map(|(a, w)| (a.clone(), *w))))
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, atom: &str) -> f64 {
        self.weights.get(atom).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(a, &w)| (a.as_str(), w))
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    /// `atom,weight` rows in canonical atom order, preceded by a header.
    pub fn write_csv(&self, w: impl Write) -> Result<(), EngineError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["atom", "weight"])?;
        for (a, p) in &self.weights {
            out.write_record([a.as_str(), &format!("{p:.17e}")])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(kind: &str, r: impl Read) -> Result<Self, EngineError> {
        let mut rd = csv::Reader::from_reader(r);
        let mut items = vec![];
        for rec in rd.records() {
            let rec = rec?;
            let w: f64 = rec
                .get(1)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| EngineError::Precondition(format!("bad weight in row {:?}", rec)))?;
            items.push((rec.get(0).unwrap_or("").to_string(), w));
        }
        Self::from_weighted(kind, items)
    }
}

/// `½ Σ |p − q|` over the union of the supports.
pub fn tv_distance(p: &EmpiricalMeasure, q: &EmpiricalMeasure) -> Result<f64, EngineError> {
    if p.kind != q.kind {
        return Err(EngineError::KindMismatch(p.kind.clone(), q.kind.clone()));
    }
    let mut s = 0.0;
    for (a, &w) in &p.weights {
        s += (w - q.weight(a)).abs();
    }
    for (a, &w) in &q.weights {
        if !p.weights.contains_key(a) {
            s += w;
        }
    }
    Ok((0.5 * s).min(1.0))
}

/// Mean and standard deviation of the TV distance between `p` and the
/// empirical law of `m` i.i.d. draws from `p`. Each atom count is binomial;
/// its mean absolute deviation is taken in closed form, and the spread
/// treats atoms as independent.
pub fn sampling_tv_envelope(p: &EmpiricalMeasure, m: usize) -> (f64, f64) {
    let mf = m as f64;
    let mut ln_fact = vec![0.0f64; m + 1];
    for i in 1..=m {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let (mut mean, mut var) = (0.0, 0.0);
    for &w in p.weights.values() {
        if w >= 1.0 {
            continue;
        }
        let j = ((mf * w).floor() as usize + 1).min(m);
        let ln_mad = 2f64.ln() + (j as f64).ln() + ln_fact[m] - ln_fact[j] - ln_fact[m - j]
            + j as f64 * w.ln()
            + (m - j + 1) as f64 * (1.0 - w).ln();
        let mad = ln_mad.exp();
        mean += mad;
        var += (mf * w * (1.0 - w) - mad * mad).max(0.0);
    }
    (0.5 * mean / mf, 0.5 * var.sqrt() / mf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(items: &[(&str, f64)]) -> EmpiricalMeasure {
        EmpiricalMeasure::from_weighted("t", items.iter().map(|(a, w)| (a.to_string(), *w))).unwrap()
    }

    #[test]
    fn counting() {
        let e = EmpiricalMeasure::from_atoms("t", ["01", "01"].map(String::from)).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.weight("01"), 1.0);
        let e = EmpiricalMeasure::from_atoms("t", ["a", "b", "a", "c"].map(String::from)).unwrap();
        assert_eq!((e.weight("a"), e.weight("b"), e.weight("c")), (0.5, 0.25, 0.25));
        assert!((e.total() - 1.0).abs() < 1e-12);
        assert!(matches!(EmpiricalMeasure::from_atoms("t", Vec::<String>::new()), Err(EngineError::Empty)));
    }

    #[test]
    fn tv_examples() {
        let p = m(&[("a", 0.75), ("b", 0.25)]);
        let q = m(&[("a", 0.25), ("b", 0.75)]);
        assert!((tv_distance(&p, &q).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(tv_distance(&m(&[("a", 1.0)]), &m(&[("b", 1.0)])).unwrap(), 1.0);
        let r = EmpiricalMeasure::from_atoms("other", ["a".to_string()]).unwrap();
        assert!(matches!(tv_distance(&p, &r), Err(EngineError::KindMismatch(..))));
    }

    #[test]
    fn neighborhood_atom_is_order_free() {
        let a = neighborhood_atom(&[0, 1], &[&[1, 1], &[0, 0]]);
        let b = neighborhood_atom(&[0, 1], &[&[0, 0], &[1, 1]]);
        assert_eq!(a, b);
        assert_eq!(a, "01|00,11");
        assert_eq!(traj_atom(&[CEMETERY, CEMETERY]), "**");
    }

    #[test]
    fn csv_roundtrip() {
        let p = m(&[("0|1", 0.125), ("1|", 0.875)]);
        let mut buf = vec![];
        p.write_csv(&mut buf).unwrap();
        let back = EmpiricalMeasure::read_csv("t", buf.as_slice()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn envelope_matches_simulated_sampling() {
        use rand::{rngs::SmallRng, Rng, SeedableRng};
        let w = [0.4, 0.2, 0.15, 0.1, 0.08, 0.04, 0.02, 0.01];
        let p = m(&w.iter().enumerate().map(|(i, &x)| (["a", "b", "c", "d", "e", "f", "g", "h"][i], x)).collect::<Vec<_>>());
        let n = 200;
        let (mean, sd) = sampling_tv_envelope(&p, n);
        let mut rng = SmallRng::seed_from_u64(5);
        let trials = 4000;
        let tvs: Vec<f64> = (0..trials)
            .map(|_| {
                let mut counts = [0usize; 8];
                for _ in 0..n {
                    let mut u: f64 = rng.random();
                    let i = w.iter().position(|&x| {
                        u -= x;
                        u < 0.0
                    });
                    counts[i.unwrap_or(7)] += 1;
                }
                0.5 * counts.iter().zip(&w).map(|(&c, &x)| (c as f64 / n as f64 - x).abs()).sum::<f64>()
            })
            .collect();
        let emp = tvs.iter().sum::<f64>() / trials as f64;
        let emp_sd = (tvs.iter().map(|t| (t - emp).powi(2)).sum::<f64>() / trials as f64).sqrt();
        assert!((emp - mean).abs() < 4.0 * emp_sd / (trials as f64).sqrt(), "{emp} vs {mean}");
        // independence ignores the negative correlation of counts
        assert!(sd >= emp_sd * 0.9 && sd < 2.0 * emp_sd, "{sd} vs {emp_sd}");
    }
}
