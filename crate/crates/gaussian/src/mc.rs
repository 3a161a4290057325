//! Brute-force Monte Carlo of the affine system on truncated trees.
//!
//! A vertex at depth `d` holds its infinite-tree value at time `t` whenever
//! `d + t ≤ D`, `D` the truncation depth, so each step only updates that
//! light cone.

use pca_core::{domains, NoiseSource, StreamId};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::GaussError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeShape {
    /// Root has κ children, every other vertex κ − 1.
    Regular { kappa: usize },
    /// As regular, except vertices whose last label is 1 have κ̃ children.
    Regularish { kappa: usize, kappa_tilde: usize },
}

impl TreeShape {
    fn children(&self, label: &[u32]) -> usize {
        match (*self, label.last()) {
            (TreeShape::Regular { kappa } | TreeShape::Regularish { kappa, .. }, None) => kappa,
            (TreeShape::Regularish { kappa_tilde, .. }, Some(1)) => kappa_tilde,
            (TreeShape::Regular { kappa } | TreeShape::Regularish { kappa, .. }, Some(_)) => kappa - 1,
        }
    }
}

/// Breadth-first tree with vertices sorted by depth.
#[derive(Clone, Debug)]
pub struct FlatTree {
    pub labels: Vec<Vec<u32>>,
    pub parent: Vec<usize>,
    pub children: Vec<Vec<usize>>,
    /// `level_end[d]` is one past the last vertex of depth `d`.
    pub level_end: Vec<usize>,
}

impl FlatTree {
    pub fn build(shape: TreeShape, depth: usize) -> FlatTree {
        let mut t = FlatTree { labels: vec![vec![]], parent: vec![usize::MAX], children: vec![vec![]], level_end: vec![1] };
        let mut start = 0;
        for _ in 0..depth {
            let end = t.labels.len();
            for p in start..end {
                for j in 1..=shape.children(&t.labels[p].clone()) {
                    let mut l = t.labels[p].clone();
                    l.push(j as u32);
                    let id = t.labels.len();
                    t.labels.push(l);
                    t.parent.push(p);
                    t.children.push(vec![]);
                    t.children[p].push(id);
                }
            }
            start = end;
            t.level_end.push(t.labels.len());
        }
        t
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.level_end.len() - 1
    }

    pub fn find(&self, label: &[u32]) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Tracked trajectories of all replicas, laid out `[replica][tracked][time]`.
#[derive(Clone, Debug)]
pub struct Samples {
    pub replicas: usize,
    pub tracked: usize,
    pub horizon: usize,
    pub values: Vec<f64>,
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// `|value − target|` in units of the standard error.
    pub fn z(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.se.max(f64::MIN_POSITIVE)
    }
}

impl Samples {
    fn at(&self, r: usize, i: usize, t: usize) -> f64 {
        self.values[(r * self.tracked + i) * (self.horizon + 1) + t]
    }

    pub fn mean(&self, i: usize, t: usize) -> Estimate {
        let m = self.replicas as f64;
        let xs: Vec<f64> = (0..self.replicas).map(|r| self.at(r, i, t)).collect();
        let mu = xs.iter().sum::<f64>() / m;
        let var = xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (m - 1.0);
        Estimate { value: mu, se: (var / m).sqrt() }
    }

    /// `Cov(X_i(t), X_j(s))`, with the standard error of the mean of centred products.
    pub fn cov(&self, i: usize, t: usize, j: usize, s: usize) -> Estimate {
        let m = self.replicas as f64;
        let mx = self.mean(i, t).value;
        let my = self.mean(j, s).value;
        let prods: Vec<f64> = (0..self.replicas).map(|r| (self.at(r, i, t) - mx) * (self.at(r, j, s) - my)).collect();
        let c = prods.iter().sum::<f64>() / m;
        let v = prods.iter().map(|p| (p - c) * (p - c)).sum::<f64>() / (m - 1.0);
        Estimate { value: c * m / (m - 1.0), se: (v / m).sqrt() }
    }
}

/// Simulate `X_v(t+1) = a X_v(t) + b Σ_{u~v} X_u(t) + c + ξ` with `X(0)`
/// i.i.d. standard Gaussian on `tree` for `horizon` steps and record the
/// trajectories of `track`. Requires `depth(v) + horizon ≤ D` for tracked
/// vertices.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    tree: &FlatTree,
    a: f64,
    b: f64,
    c: f64,
    horizon: usize,
    replicas: usize,
    seed: u64,
    track: &[usize],
) -> Result<Samples, GaussError> {
    let d = tree.depth();
    for &v in track {
        let dv = tree.labels.get(v).map(|l| l.len()).ok_or_else(|| GaussError::Dimension(format!("vertex {v}")))?;
        if dv + horizon > d {
            return Err(GaussError::Precondition(format!(
                "vertex at depth {dv} is not exact up to time {horizon} on a depth-{d} tree"
            )));
        }
    }
    if replicas < 2 {
        return Err(GaussError::Precondition("need at least two replicas".into()));
    }
    let noise = NoiseSource::new(seed).derive(domains::REPLICA);
    let n = tree.len();
    let width = track.len() * (horizon + 1);
    let run = |r: usize| -> Vec<f64> {
        let mut rng = noise.stream(StreamId::new(r as u64, 0, 0));
        let mut cur: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut next = cur.clone();
        let mut out = vec![0.0; width];
        let rec = |out: &mut [f64], cur: &[f64], t: usize| {
            for (i, &v) in track.iter().enumerate() {
                out[i * (horizon + 1) + t] = cur[v];
            }
        };
        rec(&mut out, &cur, 0);
        for t in 1..=horizon {
            let live = tree.level_end[d - t];
            for v in 0..live {
                let mut s = 0.0;
                if v != 0 {
                    s += cur[tree.parent[v]];
                }
                for &ch in &tree.children[v] {
                    s += cur[ch];
                }
                let xi: f64 = StandardNormal.sample(&mut rng);
                next[v] = a * cur[v] + b * s + c + xi;
            }
            std::mem::swap(&mut cur, &mut next);
            rec(&mut out, &cur, t);
        }
        out
    };
    let chunks: Vec<Vec<f64>> = (0..replicas).into_par_iter().map(run).collect();
    Ok(Samples { replicas, tracked: track.len(), horizon, values: chunks.concat() })
}
