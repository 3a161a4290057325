use nalgebra::{DMatrix, DVector};

use crate::schur::{blocked_from_interleaved, schur_update};
use crate::GaussError;

/// Parameters of `X_v(k+1) = a X_v(k) + b Σ_{u~v} X_u(k) + c + ξ_v(k+1)` on
/// the κ-regular tree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineParams {
    pub kappa: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AffineParams {
    pub fn new(kappa: usize, a: f64, b: f64, c: f64) -> Result<Self, GaussError> {
        if kappa == 0 {
            return Err(GaussError::Precondition("κ must be at least 1".into()));
        }
        if ![a, b, c].iter().all(|x| x.is_finite()) {
            return Err(GaussError::Precondition("coefficients must be finite".into()));
        }
        Ok(AffineParams { kappa, a, b, c })
    }
}

/// One row of a covariance sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub a: [f64; 5],
    pub m: f64,
}

/// Covariance structure of `(X_u[k])` on the κ-regular tree at horizon `k`.
///
/// `omega[i]` is `Cov(X_u[k], X_v[k])` for `d(u, v) = i`, `c[i]` its last
/// column `Cov(X_u[k], X_v(k))` (`i ≤ 3`), `a[i]` the equal-time scalar at
/// distance `i ≤ 4`.
#[derive(Clone, Debug)]
pub struct CovState {
    params: AffineParams,
    k: usize,
    m: Vec<f64>,
    omega: [DMatrix<f64>; 3],
    c: [DVector<f64>; 4],
    a: [f64; 5],
    ups_tilde_inv: DMatrix<f64>,
    ups_inv: DMatrix<f64>,
}

fn hstack(l: &DMatrix<f64>, r: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(l.nrows(), l.ncols() + r.ncols());
    out.view_mut((0, 0), l.shape()).copy_from(l);
    out.view_mut((0, l.ncols()), r.shape()).copy_from(r);
    out
}

fn block2(tl: &DMatrix<f64>, tr: &DMatrix<f64>, bl: &DMatrix<f64>, br: &DMatrix<f64>) -> DMatrix<f64> {
    let n = tl.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(tl);
    out.view_mut((0, n), (n, n)).copy_from(tr);
    out.view_mut((n, 0), (n, n)).copy_from(bl);
    out.view_mut((n, n), (n, n)).copy_from(br);
    out
}

fn vstack(t: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(t.len() + b.len(), t.iter().chain(b.iter()).cloned())
}

fn extend(om: &DMatrix<f64>, b: &DVector<f64>, a: f64) -> DMatrix<f64> {
    let n = om.nrows();
    let mut out = DMatrix::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(om);
    out.view_mut((0, n), (n, 1)).copy_from(b);
    out.view_mut((n, 0), (1, n)).copy_from(&b.transpose());
    out[(n, n)] = a;
    out
}

/// `C_{k,3} = [Ω1 Ω2] Υ⁻¹ [C2; C1]` and
/// `A_{k,4} = [C1ᵀ C2ᵀ] Υ⁻¹ [[Ω2, Ω1], [Ω1, Ω0]] Υ⁻¹ [C1; C2]`.
fn third_and_fourth(omega: &[DMatrix<f64>; 3], c: &[DVector<f64>; 4], ups_inv: &DMatrix<f64>) -> (DVector<f64>, f64) {
    let lhs = hstack(&omega[1], &omega[2]) * ups_inv;
    let c3 = lhs * vstack(&c[2], &c[1]);
    let mid = block2(&omega[2], &omega[1], &omega[1], &omega[0]);
    let w = ups_inv * mid * ups_inv;
    let v = vstack(&c[1], &c[2]);
    let a4 = v.dot(&(w * &v));
    (c3, a4)
}

impl CovState {
    /// Horizon 0: `X(0)` i.i.d. standard Gaussian.
    pub fn new(params: AffineParams) -> Self {
        let one = DMatrix::from_element(1, 1, 1.0);
        let zero = DMatrix::zeros(1, 1);
        let omega = [one, zero.clone(), zero];
        let c = [DVector::from_element(1, 1.0), DVector::zeros(1), DVector::zeros(1), DVector::zeros(1)];
        CovState {
            params,
            k: 0,
            m: vec![0.0],
            omega,
            c,
            a: [1.0, 0.0, 0.0, 0.0, 0.0],
            ups_tilde_inv: DMatrix::identity(2, 2),
            ups_inv: DMatrix::identity(2, 2),
        }
    }

    pub fn params(&self) -> AffineParams {
        self.params
    }

    pub fn horizon(&self) -> usize {
        self.k
    }

    /// `m_0..=m_k`.
    pub fn means(&self) -> &[f64] {
        &self.m
    }

    pub fn omega(&self, i: usize) -> &DMatrix<f64> {
        &self.omega[i]
    }

    pub fn c_vec(&self, i: usize) -> &DVector<f64> {
        &self.c[i]
    }

    /// `A_{k,i}` for `i ≤ 4`.
    pub fn a_scalar(&self, i: usize) -> f64 {
        self.a[i]
    }

    /// `Υ_k = Var(X_0[k], X_1[k])` in blocked order.
    pub fn upsilon(&self) -> DMatrix<f64> {
        block2(&self.omega[0], &self.omega[1], &self.omega[1], &self.omega[0])
    }

    /// `Υ_k⁻¹` in blocked order.
    pub fn upsilon_inv(&self) -> &DMatrix<f64> {
        &self.ups_inv
    }

    /// `Υ̃_k⁻¹` in interleaved order.
    pub fn upsilon_tilde_inv(&self) -> &DMatrix<f64> {
        &self.ups_tilde_inv
    }

    pub fn record(&self) -> StepRecord {
        StepRecord { k: self.k, a: self.a, m: self.m[self.k] }
    }

    /// Advance to horizon `k + 1`.
    pub fn step(&self) -> Result<CovState, GaussError> {
        let AffineParams { kappa, a, b, c: drift } = self.params;
        let kap = kappa as f64;
        let q = kap - 1.0;
        let [a0, a1, a2, a3, a4] = self.a;
        let c = &self.c;

        let b0 = &c[0] * a + &c[1] * (kap * b);
        let b1 = &c[1] * a + &c[0] * b + &c[2] * (b * q);
        let b2 = &c[2] * a + &c[1] * b + &c[3] * (b * q);
        let na0 = (a * a + kap * b * b) * a0 + 2.0 * a * b * kap * a1 + kap * q * b * b * a2 + 1.0;
        let na1 = 2.0 * a * b * a0 + (a * a + (2.0 * kap - 1.0) * b * b) * a1 + 2.0 * a * b * q * a2 + b * b * q * q * a3;
        let na2 = b * b * a0 + 2.0 * a * b * a1 + (a * a + 2.0 * b * b * q) * a2 + 2.0 * a * b * q * a3 + b * b * q * q * a4;

        let n = self.k + 1;
        let bt = DMatrix::from_fn(2 * n, 2, |r, col| {
            let t = r / 2;
            if (r % 2) == col {
                b0[t]
            } else {
                b1[t]
            }
        });
        let at = DMatrix::from_row_slice(2, 2, &[na0, na1, na1, na0]);
        let ups_tilde_inv = schur_update(&self.ups_tilde_inv, &bt, &at)?;
        let ups_inv = blocked_from_interleaved(&ups_tilde_inv);

        let omega = [extend(&self.omega[0], &b0, na0), extend(&self.omega[1], &b1, na1), extend(&self.omega[2], &b2, na2)];
        let push = |v: &DVector<f64>, x: f64| v.clone().insert_row(v.len(), x);
        let mut cv = [push(&b0, na0), push(&b1, na1), push(&b2, na2), DVector::zeros(0)];
        let (c3, na4) = third_and_fourth(&omega, &cv, &ups_inv);
        let na3 = c3[n];
        cv[3] = c3;

        let mut m = self.m.clone();
        m.push((a + kap * b) * m[self.k] + drift);
        Ok(CovState {
            params: self.params,
            k: self.k + 1,
            m,
            omega,
            c: cv,
            a: [na0, na1, na2, na3, na4],
            ups_tilde_inv,
            ups_inv,
        })
    }

    pub fn advance(&mut self) -> Result<(), GaussError> {
        *self = self.step()?;
        Ok(())
    }

    /// States at horizons `0..=k`.
    pub fn run(params: AffineParams, k: usize) -> Result<Vec<CovState>, GaussError> {
        let mut out = vec![CovState::new(params)];
        for _ in 0..k {
            let next = out.last().expect("non-empty").step()?;
            out.push(next);
        }
        Ok(out)
    }

    /// Sweep records for `0..=k` without keeping the states.
    pub fn sweep(params: AffineParams, k: usize) -> Result<Vec<StepRecord>, GaussError> {
        let mut s = CovState::new(params);
        let mut out = vec![s.record()];
        for _ in 0..k {
            s.advance()?;
            out.push(s.record());
        }
        Ok(out)
    }

    /// `max |Υ̃ Υ̃⁻¹ − I|`, with `Υ̃` rebuilt from the Ω blocks.
    pub fn inverse_residual(&self) -> f64 {
        let n = self.k + 1;
        let ut = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let (ti, si, tj, sj) = (i / 2, i % 2, j / 2, j % 2);
            if si == sj {
                self.omega[0][(ti, tj)]
            } else {
                self.omega[1][(ti, tj)]
            }
        });
        (ut * &self.ups_tilde_inv - DMatrix::identity(2 * n, 2 * n)).amax()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(kappa: usize, a: f64, b: f64, c: f64) -> AffineParams {
        AffineParams::new(kappa, a, b, c).unwrap()
    }

    #[test]
    fn initial_state() {
        let s = CovState::new(p(3, 0.4, 0.2, 0.1));
        assert_eq!(s.a_scalar(0), 1.0);
        assert_eq!(s.a_scalar(1), 0.0);
        assert_eq!(s.omega(0)[(0, 0)], 1.0);
    }

    #[test]
    fn decoupled_ar1() {
        let states = CovState::run(p(3, 0.6, 0.0, 0.0), 10).unwrap();
        let mut v = 1.0;
        for s in &states {
            assert!((s.a_scalar(0) - v).abs() < 1e-12);
            assert!(s.a_scalar(1).abs() < 1e-15 && s.a_scalar(2).abs() < 1e-15);
            v = 0.36 * v + 1.0;
        }
    }

    #[test]
    fn first_step_by_hand() {
        // X_0(1) = a X_0 + b Σ X_j + ξ: variance a² + κ b² + 1
        let s = CovState::new(p(3, 0.4, 0.2, 0.0)).step().unwrap();
        assert!((s.a_scalar(0) - (0.16 + 3.0 * 0.04 + 1.0)).abs() < 1e-15);
        assert!((s.a_scalar(1) - 2.0 * 0.4 * 0.2).abs() < 1e-15);
        assert!((s.a_scalar(2) - 0.04).abs() < 1e-15);
        assert_eq!(s.omega(0).shape(), (2, 2));
        assert!((s.omega(0)[(0, 1)] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn inverse_is_maintained() {
        let mut s = CovState::new(p(3, 0.4, 0.2, 0.1));
        for _ in 0..30 {
            s.advance().unwrap();
            assert!(s.inverse_residual() < 1e-9);
        }
        let dense = s.upsilon().try_inverse().unwrap();
        let rel = (&dense - s.upsilon_inv()).amax() / dense.amax();
        assert!(rel < 1e-9, "{rel}");
    }

    #[test]
    fn omega_blocks_symmetric() {
        let s = CovState::run(p(4, 0.3, 0.15, 0.0), 8).unwrap().pop().unwrap();
        for i in 0..3 {
            let o = s.omega(i);
            assert!((o - o.transpose()).amax() < 1e-12);
        }
    }
}
