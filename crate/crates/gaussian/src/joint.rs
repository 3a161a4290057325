use nalgebra::{DMatrix, DVector};

use crate::GaussError;

/// A finite Gaussian vector with labelled coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianJoint {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub labels: Vec<String>,
}

impl GaussianJoint {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, labels: Vec<String>) -> Result<Self, GaussError> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n || labels.len() != n {
            return Err(GaussError::Dimension(format!(
                "mean {n}, covariance {}x{}, labels {}",
                cov.nrows(),
                cov.ncols(),
                labels.len()
            )));
        }
        let scale = cov.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(GaussError::NotPsd(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        if n > 0 {
            let min = cov.clone().symmetric_eigenvalues().min();
            if min < -1e-10 * scale {
                return Err(GaussError::NotPsd(format!("eigenvalue {min:e}")));
            }
        }
        Ok(GaussianJoint { mean, cov, labels })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Indices of the given labels; errors on an unknown label.
    pub fn indices(&self, labels: &[&str]) -> Result<Vec<usize>, GaussError> {
        labels
            .iter()
            .map(|l| self.index_of(l).ok_or_else(|| GaussError::Dimension(format!("no coordinate {l:?}"))))
            .collect()
    }

    pub fn marginal(&self, idx: &[usize]) -> GaussianJoint {
        GaussianJoint {
            mean: DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i])),
            cov: self.cov.select_rows(idx).select_columns(idx),
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }
}

/// Law of `target` given `cond = values`: mean `μ_t + Σ_tc Σ_cc⁻¹ (v − μ_c)`,
/// covariance `Σ_tt − Σ_tc Σ_cc⁻¹ Σ_ct`.
pub fn conditional_gaussian(
    joint: &GaussianJoint,
    target: &[usize],
    cond: &[usize],
    values: &[f64],
) -> Result<GaussianJoint, GaussError> {
    if cond.len() != values.len() {
        return Err(GaussError::Dimension(format!("{} conditioning indices, {} values", cond.len(), values.len())));
    }
    let n = joint.dim();
    if let Some(&bad) = target.iter().chain(cond).find(|&&i| i >= n) {
        return Err(GaussError::Dimension(format!("index {bad} out of range {n}")));
    }
    let t = joint.marginal(target);
    if cond.is_empty() {
        return Ok(t);
    }
    let scc = joint.cov.select_rows(cond).select_columns(cond);
    let stc = joint.cov.select_rows(target).select_columns(cond);
    let chol = scc.clone().cholesky().ok_or_else(|| GaussError::singular("conditioning block", &scc))?;
    let min_pivot = (0..cond.len()).map(|i| chol.l_dirty()[(i, i)]).fold(f64::INFINITY, f64::min);
    if min_pivot * min_pivot < 1e-14 * scc.amax().max(1.0) {
        return Err(GaussError::singular("conditioning block", &scc));
    }
    let resid = DVector::from_iterator(cond.len(), cond.iter().zip(values).map(|(&i, v)| v - joint.mean[i]));
    // Σ_cc⁻¹ Σ_ct and Σ_cc⁻¹ (v − μ_c)
    let gain_t = chol.solve(&stc.transpose());
    let shift = chol.solve(&resid);
    let mean = &t.mean + &stc * shift;
    let mut cov = &t.cov - &stc * gain_t;
    cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianJoint { mean, cov, labels: t.labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_spd(n: usize, seed: &[f64]) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()] * ((i + 2 * j) as f64).sin());
        &g * g.transpose() + DMatrix::identity(n, n) * 0.5
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn independent_blocks_unchanged() {
        let mut cov = DMatrix::zeros(4, 4);
        cov[(0, 0)] = 2.0;
        cov[(1, 1)] = 3.0;
        cov[(0, 1)] = 1.0;
        cov[(1, 0)] = 1.0;
        cov[(2, 2)] = 1.0;
        cov[(3, 3)] = 5.0;
        let j = GaussianJoint::new(DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]), cov, labels(4)).unwrap();
        let c = conditional_gaussian(&j, &[0, 1], &[2, 3], &[7.0, -1.0]).unwrap();
        assert_eq!(c.mean.as_slice(), &[1.0, 2.0]);
        assert_eq!(c.cov, j.marginal(&[0, 1]).cov);
    }

    #[test]
    fn singular_conditioning_rejected() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let j = GaussianJoint::new(DVector::zeros(2), cov, labels(2)).unwrap();
        let z = GaussianJoint::new(DVector::zeros(3), DMatrix::zeros(3, 3), labels(3)).unwrap();
        assert!(conditional_gaussian(&z, &[0], &[1, 2], &[0.0, 0.0]).is_err());
        assert!(conditional_gaussian(&j, &[0], &[1], &[0.0]).is_ok());
    }

    #[test]
    fn rejects_non_psd() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianJoint::new(DVector::zeros(2), cov, labels(2)).is_err());
    }

    proptest! {
        #[test]
        fn conditioning_composes(seed in prop::collection::vec(-1.0f64..1.0, 36), v in prop::collection::vec(-2.0f64..2.0, 3)) {
            let cov = random_spd(6, &seed);
            let mean = DVector::from_fn(6, |i, _| i as f64 * 0.1);
            let j = GaussianJoint::new(mean, cov, labels(6)).unwrap();
            // condition on {4} then {5} vs on {4,5} at once
            let once = conditional_gaussian(&j, &[0, 1], &[4, 5], &v[..2]).unwrap();
            let step = conditional_gaussian(&j, &[0, 1, 5], &[4], &v[..1]).unwrap();
            let twice = conditional_gaussian(&step, &[0, 1], &[2], &v[1..2]).unwrap();
            prop_assert!((once.mean - twice.mean).amax() < 1e-9);
            prop_assert!((once.cov - twice.cov).amax() < 1e-9);
        }
    }
}
