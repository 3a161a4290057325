//! Conditional covariances on small linear Gaussian systems on a path,
//! showing that conditioning on less than the past of the double boundary
//! breaks conditional independence.

use nalgebra::{DMatrix, DVector};

use crate::{conditional_gaussian, GaussError, GaussianJoint};

/// Joint law of `(X(0), …, X(steps))` for `X(k+1) = B X(k) + ξ(k+1)` with
/// standard Gaussian noise and `X(0) ~ N(0, init_cov)`. Coordinates are
/// labelled `"X{i}({t})"` with 1-based vertices, ordered time-major.
pub fn linear_system_joint(b: &DMatrix<f64>, init_cov: &DMatrix<f64>, steps: usize) -> Result<GaussianJoint, GaussError> {
    let n = b.nrows();
    if b.ncols() != n || init_cov.shape() != (n, n) {
        return Err(GaussError::Dimension("B and the initial covariance must be n x n".into()));
    }
    let dim = n * (steps + 1);
    let mut cov = DMatrix::zeros(dim, dim);
    cov.view_mut((0, 0), (n, n)).copy_from(init_cov);
    for t in 1..=steps {
        // Cov(X(t), X(s)) = B Cov(X(t-1), X(s)) for s < t
        for s in 0..t {
            let prev = cov.view(((t - 1) * n, s * n), (n, n)).clone_owned();
            let blk = b * prev;
            cov.view_mut((t * n, s * n), (n, n)).copy_from(&blk);
            cov.view_mut((s * n, t * n), (n, n)).copy_from(&blk.transpose());
        }
        let prev = cov.view(((t - 1) * n, (t - 1) * n), (n, n)).clone_owned();
        let var = b * prev * b.transpose() + DMatrix::identity(n, n);
        cov.view_mut((t * n, t * n), (n, n)).copy_from(&var);
    }
    let labels = (0..=steps).flat_map(|t| (1..=n).map(move |i| format!("X{i}({t})"))).collect();
    GaussianJoint::new(DVector::zeros(dim), cov, labels)
}

fn path_b(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) <= 1 { 1.0 } else { 0.0 })
}

#[derive(Clone, Debug)]
pub struct CounterexampleReport {
    pub name: &'static str,
    /// The conditional covariance of the counterexample.
    pub value: f64,
    pub expected: f64,
    /// Largest absolute conditional cross-covariance when conditioning on
    /// the full trajectory of the double boundary; `None` when the
    /// complement is empty.
    pub full_conditioning_residual: Option<f64>,
}

impl CounterexampleReport {
    pub fn error(&self) -> f64 {
        (self.value - self.expected).abs()
    }
}

fn cond_cov(j: &GaussianJoint, a: &str, b: &str, given: &[&str]) -> Result<f64, GaussError> {
    let t = j.indices(&[a, b])?;
    let c = j.indices(given)?;
    let z = vec![0.0; c.len()];
    Ok(conditional_gaussian(j, &t, &c, &z)?.cov[(0, 1)])
}

fn cross_residual(j: &GaussianJoint, a: &[&str], b: &[&str], given: &[&str]) -> Result<f64, GaussError> {
    let mut t = j.indices(a)?;
    t.extend(j.indices(b)?);
    let c = j.indices(given)?;
    let z = vec![0.0; c.len()];
    let cc = conditional_gaussian(j, &t, &c, &z)?.cov;
    let na = a.len();
    Ok(cc.view((0, na), (na, b.len())).amax())
}

/// Path of 4 vertices started at zero; condition on the current states of
/// the double boundary only.
pub fn current_of_double_boundary() -> Result<CounterexampleReport, GaussError> {
    let j = linear_system_joint(&path_b(4), &DMatrix::zeros(4, 4), 2)?;
    let value = cond_cov(&j, "X1(2)", "X4(2)", &["X2(2)", "X3(2)"])?;
    // X(0) is deterministic, so trajectories start at time 1
    let residual = cross_residual(&j, &["X1(1)", "X1(2)"], &["X4(1)", "X4(2)"], &["X2(1)", "X2(2)", "X3(1)", "X3(2)"])?;
    Ok(CounterexampleReport {
        name: "current-of-double-boundary",
        value,
        expected: -0.5,
        full_conditioning_residual: Some(residual),
    })
}

/// Path of 3 vertices with i.i.d. standard initial states; condition on
/// the past of the single boundary only.
pub fn past_of_single_boundary() -> Result<CounterexampleReport, GaussError> {
    let j = linear_system_joint(&path_b(3), &DMatrix::identity(3, 3), 1)?;
    let value = cond_cov(&j, "X1(1)", "X3(1)", &["X2(1)", "X2(0)"])?;
    Ok(CounterexampleReport {
        name: "past-of-single-boundary",
        value,
        expected: -1.0 / 3.0,
        // the double boundary of {1} is {2, 3}: nothing left to compare against
        full_conditioning_residual: None,
    })
}

pub fn all() -> Result<Vec<CounterexampleReport>, GaussError> {
    Ok(vec![current_of_double_boundary()?, past_of_single_boundary()?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn displayed_covariances() {
        let j = linear_system_joint(&path_b(4), &DMatrix::zeros(4, 4), 2).unwrap();
        let idx = j.indices(&["X1(2)", "X2(2)", "X3(2)", "X4(2)"]).unwrap();
        let m = j.marginal(&idx).cov;
        let want = [3., 2., 1., 0., 2., 4., 2., 1., 1., 2., 4., 2., 0., 1., 2., 3.];
        assert_eq!(m, DMatrix::from_row_slice(4, 4, &want));

        let j = linear_system_joint(&path_b(3), &DMatrix::identity(3, 3), 1).unwrap();
        let idx = j.indices(&["X1(1)", "X2(1)", "X3(1)", "X2(0)"]).unwrap();
        let want = [3., 2., 1., 1., 2., 4., 2., 1., 1., 2., 3., 1., 1., 1., 1., 1.];
        assert_eq!(j.marginal(&idx).cov, DMatrix::from_row_slice(4, 4, &want));
    }

    #[test]
    fn values() {
        for r in all().unwrap() {
            assert!(r.error() < 1e-12, "{} = {}", r.name, r.value);
        }
        let r = current_of_double_boundary().unwrap();
        assert!(r.full_conditioning_residual.unwrap() < 1e-12);
    }
}
