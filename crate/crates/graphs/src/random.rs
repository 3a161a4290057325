use rand::seq::SliceRandom;
use rand::Rng;

use crate::{FiniteGraph, GraphError};

/// `G(n, λ/n)`, sampled by geometric skipping over the pairs in
/// lexicographic order.
pub fn erdos_renyi(n: usize, lambda: f64, rng: &mut impl Rng) -> Result<FiniteGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::Parameter("n must be positive".into()));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(GraphError::Parameter(format!("λ = {lambda}")));
    }
    let mut p = lambda / n as f64;
    if p > 1.0 {
        log::warn!("edge probability {p} clamped to 1");
        p = 1.0;
    }
    let mut edges = vec![];
    if p >= 1.0 {
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
    } else if p > 0.0 {
        let lq = (1.0 - p).ln();
        // walk v > u pairs; (u, v) starts at (0, 0) so the first step lands on (0, 1) or later
        let (mut u, mut v) = (0usize, 0usize);
        loop {
            let r: f64 = rng.random();
            let skip = ((1.0 - r).ln() / lq).floor() as usize;
            v += skip + 1;
            while u < n && v >= n {
                v = v - n + u + 2;
                u += 1;
            }
            if u + 1 >= n {
                break;
            }
            edges.push((u, v));
        }
    }
    FiniteGraph::from_edges(n, &edges)
}

fn half_edges(degrees: &[usize]) -> Result<Vec<usize>, GraphError> {
    let total: usize = degrees.iter().sum();
    if total % 2 == 1 {
        return Err(GraphError::OddDegreeSum(total));
    }
    Ok(degrees.iter().enumerate().flat_map(|(v, &d)| std::iter::repeat_n(v, d)).collect())
}

/// Erased configuration model: a uniform matching of half-edges with
/// self-loops and repeated edges removed.
pub fn configuration_model(degrees: &[usize], rng: &mut impl Rng) -> Result<FiniteGraph, GraphError> {
    let mut h = half_edges(degrees)?;
    h.shuffle(rng);
    Ok(FiniteGraph::from_edges_erased(degrees.len(), h.chunks(2).map(|c| (c[0], c[1]))))
}

/// Uniform κ-regular simple graph by rejection from the pairing model.
pub fn random_regular(n: usize, kappa: usize, rng: &mut impl Rng) -> Result<FiniteGraph, GraphError> {
    const CAP: usize = 10_000;
    if (n * kappa) % 2 == 1 {
        return Err(GraphError::OddDegreeSum(n * kappa));
    }
    if n < kappa + 1 {
        return Err(GraphError::Parameter(format!("need n ≥ κ + 1, got n = {n}, κ = {kappa}")));
    }
    let base = half_edges(&vec![kappa; n])?;
    for _ in 0..CAP {
        let mut h = base.clone();
        h.shuffle(rng);
        let pairs: Vec<(usize, usize)> = h.chunks(2).map(|c| (c[0], c[1])).collect();
        if let Ok(g) = FiniteGraph::from_edges(n, &pairs) {
            return Ok(g);
        }
    }
    Err(GraphError::RetryCapExceeded(CAP))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::SmallRng;
    use rand::SeedableRng;

    #[test]
    fn er_extremes() {
        let mut r = SmallRng::seed_from_u64(1);
        assert_eq!(erdos_renyi(50, 0.0, &mut r).unwrap().edge_count(), 0);
        assert_eq!(erdos_renyi(3, 3.0, &mut r).unwrap(), FiniteGraph::complete(3));
        assert!(erdos_renyi(0, 1.0, &mut r).is_err());
    }

    #[test]
    fn er_covers_last_pair() {
        // p close to 1 must still reach (n-2, n-1)
        let mut r = SmallRng::seed_from_u64(3);
        let g = erdos_renyi(6, 5.999_999, &mut r).unwrap();
        assert_eq!(g.edge_count(), 15);
    }

    #[test]
    fn configuration_small() {
        let mut r = SmallRng::seed_from_u64(1);
        assert_eq!(configuration_model(&[0, 0, 0], &mut r).unwrap().edge_count(), 0);
        assert_eq!(configuration_model(&[1, 1], &mut r).unwrap().edges(), vec![(0, 1)]);
        assert!(configuration_model(&[1, 2], &mut r).is_err());
    }

    #[test]
    fn regular_small() {
        let mut r = SmallRng::seed_from_u64(1);
        assert_eq!(random_regular(4, 3, &mut r).unwrap(), FiniteGraph::complete(4));
        assert!(matches!(random_regular(5, 3, &mut r), Err(GraphError::OddDegreeSum(15))));
        let g = random_regular(100, 2, &mut r).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 2));
    }
}
