use nalgebra::{DMatrix, DVector, SymmetricEigen};
use pca_core::{domains, AffineRule, NoiseSource, Rule, StreamId};
use pca_gaussian::{AffineParams, CovState};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::LfError;

/// Regular-tree recursion for the Gaussian affine rule, with phantoms drawn
/// from the exact conditional Gaussian given by the covariance state.
#[derive(Clone, Debug)]
pub struct GaussianLocalField {
    params: AffineParams,
    cov: CovState,
    pop: Vec<Vec<Vec<f64>>>,
}

/// Gain and noise factor of `Z | (X_v[k], X_0[k])`.
struct Conditional {
    mean_z: DVector<f64>,
    mean_c: DVector<f64>,
    gain: DMatrix<f64>,
    factor: DMatrix<f64>,
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn blocks(rows: &[Vec<&DMatrix<f64>>], n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows.len() * n, rows[0].len() * n);
    for (i, row) in rows.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            out.view_mut((i * n, j * n), (n, n)).copy_from(b);
        }
    }
    out
}

impl Conditional {
    fn new(cov: &CovState) -> Result<Self, LfError> {
        let kappa = cov.params().kappa;
        let n = cov.horizon() + 1;
        let (o0, o1, o2) = (sym(cov.omega(0)), sym(cov.omega(1)), sym(cov.omega(2)));
        let p = kappa - 1;
        let s_cc = blocks(&[vec![&o0, &o1], vec![&o1, &o0]], n);
        let s_zc = blocks(&vec![vec![&o1, &o2]; p], n);
        let s_zz = blocks(&(0..p).map(|i| (0..p).map(|j| if i == j { &o0 } else { &o2 }).collect()).collect::<Vec<_>>(), n);
        let eig = SymmetricEigen::new(s_cc.clone());
        let min = eig.eigenvalues.min();
        if !(min > 1e-12) {
            return Err(pca_gaussian::GaussError::Singular { what: "Υ_k".into(), min_eig: min, cond: f64::INFINITY }.into());
        }
        let inv = s_cc.cholesky().ok_or_else(|| LfError::Invariant("Υ_k Cholesky failed".into()))?.inverse();
        let gain = &s_zc * inv;
        let c = sym(&(s_zz - &gain * s_zc.transpose()));
        let e = SymmetricEigen::new(c);
        let root = DMatrix::from_diagonal(&e.eigenvalues.map(|l| l.max(0.0).sqrt()));
        let m = DVector::from_iterator(n, cov.means().iter().copied());
        let stack = |times: usize| DVector::from_iterator(times * n, (0..times).flat_map(|_| m.iter().copied()));
        Ok(Conditional { mean_z: stack(p), mean_c: stack(2), gain, factor: &e.eigenvectors * root })
    }
}

impl GaussianLocalField {
    /// `X(0)` i.i.d. standard normal.
    pub fn new(params: AffineParams, replicas: usize, noise: &NoiseSource) -> Result<Self, LfError> {
        if params.kappa < 2 || replicas < 2 {
            return Err(LfError::Precondition("need κ ≥ 2 and at least two replicas".into()));
        }
        let src = noise.derive(domains::INITIAL);
        let pop = (0..replicas)
            .map(|i| (0..=params.kappa).map(|v| vec![src.normal(StreamId::new(i as u64, v as u64, 0))]).collect())
            .collect();
        Ok(GaussianLocalField { params, cov: CovState::new(params), pop })
    }

    pub fn horizon(&self) -> usize {
        self.cov.horizon()
    }

    pub fn cov(&self) -> &CovState {
        &self.cov
    }

    pub fn population(&self) -> &[Vec<Vec<f64>>] {
        &self.pop
    }

    pub fn step(&mut self, noise: &NoiseSource) -> Result<(), LfError> {
        let cond = Conditional::new(&self.cov)?;
        let AffineParams { kappa, a, b, c, .. } = self.params;
        let rule = AffineRule::new(a, b, c);
        let k = self.horizon();
        let n = k + 1;
        let dyn_src = noise.derive(domains::DYNAMICS);
        let ph_src = noise.derive(domains::PHANTOM);
        let next: Vec<Vec<f64>> = self
            .pop
            .par_iter()
            .enumerate()
            .map(|(i, r)| {
                let xi = |v: usize| dyn_src.normal(StreamId::new(i as u64, v as u64, k as u64 + 1));
                let nb: Vec<&[f64]> = r[1..].iter().map(|t| t.as_slice()).collect();
                let mut out = vec![rule.update(&r[0], &nb, xi(0))?];
                for v in 1..=kappa {
                    let mut rng = ph_src.stream(StreamId::new(i as u64, v as u64, k as u64));
                    let xc = DVector::from_iterator(2 * n, r[v].iter().chain(r[0].iter()).copied());
                    let eps = DVector::from_iterator(cond.factor.ncols(), (0..cond.factor.ncols()).map(|_| StandardNormal.sample(&mut rng)));
                    let z = &cond.mean_z + &cond.gain * (xc - &cond.mean_c) + &cond.factor * eps;
                    let phantoms: Vec<Vec<f64>> = (0..kappa - 1).map(|j| z.rows(j * n, n).iter().copied().collect()).collect();
                    let mut nbv: Vec<&[f64]> = vec![&r[0]];
                    nbv.extend(phantoms.iter().map(|t| t.as_slice()));
                    out.push(rule.update(&r[v], &nbv, xi(v))?);
                }
                Ok(out)
            })
            .collect::<Result<_, LfError>>()?;
        for (r, x) in self.pop.iter_mut().zip(next) {
            for (t, s) in r.iter_mut().zip(x) {
                t.push(s);
            }
        }
        self.cov.advance()?;
        Ok(())
    }

    /// Root values at time `t` across replicas.
    pub fn root_values(&self, t: usize) -> Vec<f64> {
        self.pop.iter().map(|r| r[0][t]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncoupled_conditional_is_unconditional() {
        let mut cov = CovState::new(AffineParams::new(3, 0.5, 0.0, 0.1).unwrap());
        cov.advance().unwrap();
        cov.advance().unwrap();
        let c = Conditional::new(&cov).unwrap();
        assert!(c.gain.amax() < 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let p = AffineParams::new(3, 0.4, 0.2, 0.1).unwrap();
        let run = || {
            let noise = NoiseSource::new(4);
            let mut g = GaussianLocalField::new(p, 50, &noise).unwrap();
            for _ in 0..3 {
                g.step(&noise).unwrap();
            }
            g.root_values(3)
        };
        assert_eq!(run(), run());
    }
}
