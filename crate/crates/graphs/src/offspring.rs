use crate::GraphError;

/// Law on child counts, stored as a pmf over `0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct OffspringDistribution {
    pmf: Vec<f64>,
    mean: f64,
}

impl OffspringDistribution {
    pub fn new(pmf: Vec<f64>) -> Result<Self, GraphError> {
        if pmf.is_empty() {
            return Err(GraphError::Pmf("empty".into()));
        }
        if let Some(p) = pmf.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(GraphError::Pmf(format!("entry {p}")));
        }
        let s: f64 = pmf.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(GraphError::Pmf(format!("sums to {s}")));
        }
        let mut pmf = pmf;
        while pmf.len() > 1 && *pmf.last().expect("non-empty") == 0.0 {
            pmf.pop();
        }
        let mean = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        Ok(OffspringDistribution { pmf, mean })
    }

    pub fn delta(k: usize) -> Self {
        let mut p = vec![0.0; k + 1];
        p[k] = 1.0;
        OffspringDistribution::new(p).expect("point mass")
    }

    /// Uniform on `0..=max`.
    pub fn uniform(max: usize) -> Self {
        OffspringDistribution::new(vec![1.0 / (max + 1) as f64; max + 1]).expect("uniform")
    }

    pub fn binomial(n: usize, p: f64) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphError::Pmf(format!("success probability {p}")));
        }
        let mut pmf = vec![0.0; n + 1];
        let mut choose = 1.0;
        for (k, slot) in pmf.iter_mut().enumerate() {
            *slot = choose * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
            choose = choose * (n - k) as f64 / (k + 1) as f64;
        }
        let s: f64 = pmf.iter().sum();
        OffspringDistribution::new(pmf.into_iter().map(|x| x / s).collect())
    }

    /// Poisson(λ), cut where the remaining tail drops below 1e-18 and renormalized.
    pub fn poisson(lambda: f64) -> Result<Self, GraphError> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(GraphError::Pmf(format!("rate {lambda}")));
        }
        let mut pmf = vec![(-lambda).exp()];
        let mut acc = pmf[0];
        let mut k = 0usize;
        while 1.0 - acc > 1e-18 || (k as f64) < lambda + 20.0 {
            k += 1;
            let next = pmf[k - 1] * lambda / k as f64;
            pmf.push(next);
            acc += next;
            if k > 10_000 {
                break;
            }
        }
        let s: f64 = pmf.iter().sum();
        OffspringDistribution::new(pmf.into_iter().map(|x| x / s).collect())
    }

    /// Poisson(λ) conditioned on at most `max` children.
    pub fn poisson_truncated(lambda: f64, max: usize) -> Result<Self, GraphError> {
        let full = OffspringDistribution::poisson(lambda)?;
        let mut p: Vec<f64> = (0..=max).map(|k| full.prob(k)).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        OffspringDistribution::new(p)
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Largest count with positive mass.
    pub fn max_support(&self) -> usize {
        self.pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    /// Inverse-CDF draw.
    pub fn sample(&self, u: f64) -> usize {
        pca_core::sample_index(&self.pmf, u)
    }
}

/// Size-biased shift `ρ(k) = (k+1) ρ_ø(k+1) / Σ_n n ρ_ø(n)`.
pub fn unimodular_offspring(root: &OffspringDistribution) -> Result<OffspringDistribution, GraphError> {
    let mean = root.mean();
    if !(mean.is_finite() && mean > 0.0) {
        return Err(GraphError::Pmf(format!("root law has mean {mean}")));
    }
    let pmf: Vec<f64> = (0..root.pmf().len().saturating_sub(1).max(1))
        .map(|k| (k + 1) as f64 * root.prob(k + 1) / mean)
        .collect();
    let s: f64 = pmf.iter().sum();
    // renormalize away rounding only
    OffspringDistribution::new(pmf.into_iter().map(|x| x / s).collect())
}
