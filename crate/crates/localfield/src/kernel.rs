use std::collections::HashMap;

use pca_core::Sym;
use pca_engine::traj_atom;

use crate::LfError;

/// What to do when a replica's conditioning key has no population mass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KeyMissPolicy {
    /// Abort the run.
    #[default]
    Strict,
    /// Rematch on the last `w` states of both trajectories.
    Windowed(usize),
}

#[derive(Debug, Default)]
struct Bucket {
    ids: Vec<usize>,
    cum: Vec<f64>,
}

impl Bucket {
    fn push(&mut self, id: usize, w: f64) {
        let last = self.cum.last().copied().unwrap_or(0.0);
        self.ids.push(id);
        self.cum.push(last + w);
    }

    fn pick(&self, u: f64) -> usize {
        let total = *self.cum.last().expect("nonempty bucket");
        let x = u * total;
        let i = self.cum.partition_point(|&c| c <= x).min(self.ids.len() - 1);
        self.ids[i]
    }
}

fn key(a: &[Sym], b: &[Sym], window: Option<usize>) -> Vec<Sym> {
    let cut = |t: &[Sym]| match window {
        Some(w) if w < t.len() => t.len() - w,
        _ => 0,
    };
    let mut k = Vec::with_capacity(a.len() + b.len() + 1);
    k.extend_from_slice(&a[cut(a)..]);
    k.push(Sym::MAX - 1);
    k.extend_from_slice(&b[cut(b)..]);
    k
}

/// Empirical conditional kernel indexed by a pair of trajectories.
///
/// Each entry carries a caller-defined id and a positive weight; sampling
/// returns an id with probability proportional to its weight among the
/// entries sharing the requested key.
#[derive(Debug)]
pub struct TrajKernel {
    time: usize,
    policy: KeyMissPolicy,
    full: HashMap<Vec<Sym>, Bucket>,
    window: HashMap<Vec<Sym>, Bucket>,
}

pub enum Draw {
    Exact(usize),
    Rematched(usize),
}

impl Draw {
    pub fn id(&self) -> usize {
        match self {
            Draw::Exact(i) | Draw::Rematched(i) => *i,
        }
    }
}

impl TrajKernel {
    pub fn build<'a>(
        time: usize,
        policy: KeyMissPolicy,
        entries: impl IntoIterator<Item = (&'a [Sym], &'a [Sym], f64, usize)>,
    ) -> Result<Self, LfError> {
        let mut full: HashMap<Vec<Sym>, Bucket> = HashMap::new();
        let mut window: HashMap<Vec<Sym>, Bucket> = HashMap::new();
        for (a, b, w, id) in entries {
            if !(w.is_finite() && w > 0.0) {
                return Err(LfError::Invariant(format!("kernel weight {w}")));
            }
            full.entry(key(a, b, None)).or_default().push(id, w);
            if let KeyMissPolicy::Windowed(win) = policy {
                window.entry(key(a, b, Some(win))).or_default().push(id, w);
            }
        }
        Ok(TrajKernel { time, policy, full, window })
    }

    pub fn keys(&self) -> usize {
        self.full.len()
    }

    /// Normalized weights of the entries under key `(a, b)`.
    pub fn conditional(&self, a: &[Sym], b: &[Sym]) -> Option<Vec<(usize, f64)>> {
        let bucket = self.full.get(&key(a, b, None))?;
        let total = *bucket.cum.last()?;
        let mut prev = 0.0;
        Some(
            bucket
                .ids
                .iter()
                .zip(&bucket.cum)
                .map(|(&id, &c)| {
                    let w = (c - prev) / total;
                    prev = c;
                    (id, w)
                })
                .collect(),
        )
    }

    pub fn sample(&self, a: &[Sym], b: &[Sym], u: f64) -> Result<Draw, LfError> {
        if let Some(bk) = self.full.get(&key(a, b, None)) {
            return Ok(Draw::Exact(bk.pick(u)));
        }
        if let KeyMissPolicy::Windowed(w) = self.policy {
            if let Some(bk) = self.window.get(&key(a, b, Some(w))) {
                return Ok(Draw::Rematched(bk.pick(u)));
            }
        }
        Err(LfError::KeyMiss { time: self.time, key: format!("({}, {})", traj_atom(a), traj_atom(b)) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_pick_and_miss() {
        let a: &[Sym] = &[0, 1];
        let b: &[Sym] = &[1, 1];
        let c: &[Sym] = &[0, 0];
        let k = TrajKernel::build(1, KeyMissPolicy::Strict, vec![(a, b, 1.0, 7), (a, b, 3.0, 9), (b, a, 1.0, 1)]).unwrap();
        assert_eq!(k.keys(), 2);
        let cond = k.conditional(a, b).unwrap();
        assert_eq!(cond, vec![(7, 0.25), (9, 0.75)]);
        assert_eq!(k.sample(a, b, 0.1).unwrap().id(), 7);
        assert_eq!(k.sample(a, b, 0.3).unwrap().id(), 9);
        assert_eq!(k.sample(a, b, 0.999_999).unwrap().id(), 9);
        match k.sample(c, b, 0.5) {
            Err(LfError::KeyMiss { time, key }) => assert_eq!((time, key.as_str()), (1, "(00, 11)")),
            _ => panic!(),
        }
    }

    #[test]
    fn window_rematches_on_suffix() {
        let a: &[Sym] = &[0, 1];
        let b: &[Sym] = &[1, 1];
        let k = TrajKernel::build(1, KeyMissPolicy::Windowed(1), vec![(a, b, 1.0, 3)]).unwrap();
        match k.sample(&[1, 1], &[0, 1], 0.5).unwrap() {
            Draw::Rematched(3) => {}
            _ => panic!(),
        }
    }
}
