//! Affine Gaussian dynamics on the regular-ish tree: the root has κ
//! children, a vertex whose last label is 1 has κ̃ children and every other
//! vertex has κ − 1.
//!
//! The state is the joint covariance of all trajectories up to generation 2.
//! Third-generation values at time `k` are reached through the subtree
//! self-similarity: the law of the subtree below `w·j` given `(X_w, X_p)`,
//! `p` the parent of `w`, equals the law below `r·j` given `(X_r, X_0)` for
//! the first-generation vertex `r` of the same kind as `w`. With conditional
//! independence across the edge `(p, w)` this yields every covariance the
//! affine update needs.

use nalgebra::{DMatrix, DVector};

use crate::{CovState, GaussError};

/// A tracked vertex of generation at most 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub label: Vec<u32>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl Vertex {
    /// 0 for the root, 1 if the last label is 1, 2 otherwise.
    pub fn kind(&self) -> u8 {
        match self.label.last() {
            None => 0,
            Some(1) => 1,
            Some(_) => 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RegularishState {
    kappa: usize,
    kappa_tilde: usize,
    a: f64,
    b: f64,
    c: f64,
    k: usize,
    verts: Vec<Vertex>,
    /// Index `t * n + v`.
    sigma: DMatrix<f64>,
    mean: DVector<f64>,
}

/// A third-generation vertex below the tracked set: child `j` of `w`.
struct Grandchild {
    w: usize,
    j: usize,
}

/// Regression of the children of a representative on `(X_r[k], X_0[k])`.
struct KindFit {
    /// `Cov(X_{rj}(k), S) Var(S)⁻¹`, one row per child `j`.
    reg: Vec<DVector<f64>>,
    /// Conditional covariance of the children at time `k`.
    resid: DMatrix<f64>,
    /// `E X_{rj}(k) − reg_j · E S`.
    offset: Vec<f64>,
}

impl RegularishState {
    pub fn new(kappa: usize, kappa_tilde: usize, a: f64, b: f64, c: f64) -> Result<Self, GaussError> {
        if kappa < 3 || kappa_tilde < 1 {
            return Err(GaussError::Precondition(format!("need κ ≥ 3 and κ̃ ≥ 1, got {kappa}, {kappa_tilde}")));
        }
        let mut verts = vec![Vertex { label: vec![], parent: None, children: vec![] }];
        let mut frontier = vec![0usize];
        for _ in 0..2 {
            let mut next = vec![];
            for &p in &frontier {
                let cnt = Self::child_count(kappa, kappa_tilde, verts[p].kind());
                for j in 1..=cnt {
                    let mut label = verts[p].label.clone();
                    label.push(j as u32);
                    let id = verts.len();
                    verts.push(Vertex { label, parent: Some(p), children: vec![] });
                    verts[p].children.push(id);
                    next.push(id);
                }
            }
            frontier = next;
        }
        let n = verts.len();
        Ok(RegularishState {
            kappa,
            kappa_tilde,
            a,
            b,
            c,
            k: 0,
            verts,
            sigma: DMatrix::identity(n, n),
            mean: DVector::zeros(n),
        })
    }

    fn child_count(kappa: usize, kappa_tilde: usize, kind: u8) -> usize {
        match kind {
            0 => kappa,
            1 => kappa_tilde,
            _ => kappa - 1,
        }
    }

    pub fn horizon(&self) -> usize {
        self.k
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.verts
    }

    pub fn vertex(&self, label: &[u32]) -> Option<usize> {
        self.verts.iter().position(|v| v.label == label)
    }

    /// Tracked vertices among `0, 1, 11, 12, 2, 21, 22`.
    pub fn representatives(&self) -> Vec<usize> {
        [&[][..], &[1], &[1, 1], &[1, 2], &[2], &[2, 1], &[2, 2]]
            .iter()
            .filter_map(|l| self.vertex(l))
            .collect()
    }

    fn idx(&self, v: usize, t: usize) -> usize {
        t * self.verts.len() + v
    }

    fn traj(&self, v: usize) -> Vec<usize> {
        (0..=self.k).map(|t| self.idx(v, t)).collect()
    }

    /// `Cov(X_u[k], X_v[k])`.
    pub fn cov_block(&self, u: usize, v: usize) -> DMatrix<f64> {
        self.sigma.select_rows(&self.traj(u)).select_columns(&self.traj(v))
    }

    /// `E X_v[k]`.
    pub fn mean_traj(&self, v: usize) -> Vec<f64> {
        self.traj(v).iter().map(|&i| self.mean[i]).collect()
    }

    /// Joint covariance of all tracked trajectories, time-major.
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn root_variance(&self) -> f64 {
        let i = self.idx(0, self.k);
        self.sigma[(i, i)]
    }

    fn rep(&self, kind: u8) -> usize {
        self.vertex(if kind == 1 { &[1] } else { &[2] }).expect("generation one is complete")
    }

    fn fit_kind(&self, kind: u8) -> Result<KindFit, GaussError> {
        let r = self.rep(kind);
        let mut s = self.traj(r);
        s.extend(self.traj(0));
        let v = self.sigma.select_rows(&s).select_columns(&s);
        let chol = v.clone().cholesky().ok_or_else(|| GaussError::singular("representative conditioning block", &v))?;
        let vinv = chol.inverse();
        let kids = &self.verts[r].children;
        let rows: Vec<DVector<f64>> = kids
            .iter()
            .map(|&ch| {
                let i = self.idx(ch, self.k);
                DVector::from_iterator(s.len(), s.iter().map(|&j| self.sigma[(i, j)]))
            })
            .collect();
        let reg: Vec<DVector<f64>> = rows.iter().map(|c| &vinv * c).collect();
        let m = kids.len();
        let resid = DMatrix::from_fn(m, m, |x, y| {
            let (ix, iy) = (self.idx(kids[x], self.k), self.idx(kids[y], self.k));
            self.sigma[(ix, iy)] - reg[x].dot(&rows[y])
        });
        let ms = DVector::from_iterator(s.len(), s.iter().map(|&i| self.mean[i]));
        let offset = kids.iter().zip(&reg).map(|(&ch, rg)| self.mean[self.idx(ch, self.k)] - rg.dot(&ms)).collect();
        Ok(KindFit { reg, resid, offset })
    }

    /// Advance to horizon `k + 1`.
    pub fn step(&self) -> Result<RegularishState, GaussError> {
        let n = self.verts.len();
        let big = n * (self.k + 1);
        let gen2: Vec<usize> = (0..n).filter(|&v| self.verts[v].label.len() == 2).collect();
        let fits = [None, Some(self.fit_kind(1)?), Some(self.fit_kind(2)?)];

        let mut grand = vec![];
        for &w in &gen2 {
            let cnt = Self::child_count(self.kappa, self.kappa_tilde, self.verts[w].kind());
            for j in 0..cnt {
                grand.push(Grandchild { w, j });
            }
        }
        // conditioning sets (X_w[k], X_p[k]) and the regression rows of each grandchild
        let cond = |w: usize| {
            let mut s = self.traj(w);
            s.extend(self.traj(self.verts[w].parent.expect("generation two")));
            s
        };
        let gfit = |g: &Grandchild| fits[self.verts[g.w].kind() as usize].as_ref().expect("non-root kind");
        let gcross: Vec<DVector<f64>> = grand
            .iter()
            .map(|g| {
                let rows = self.sigma.select_rows(&cond(g.w));
                rows.tr_mul(&gfit(g).reg[g.j])
            })
            .collect();
        let gmean: Vec<f64> = grand
            .iter()
            .map(|g| {
                let s = cond(g.w);
                let f = gfit(g);
                f.offset[g.j] + s.iter().zip(f.reg[g.j].iter()).map(|(&i, r)| r * self.mean[i]).sum::<f64>()
            })
            .collect();

        // time-k covariance over tracked vertices followed by grandchildren
        let e = n + grand.len();
        let now: Vec<usize> = (0..n).map(|v| self.idx(v, self.k)).collect();
        let mut ke = DMatrix::zeros(e, e);
        for x in 0..n {
            for y in 0..n {
                ke[(x, y)] = self.sigma[(now[x], now[y])];
            }
        }
        for (gi, g) in gcross.iter().enumerate() {
            for z in 0..n {
                ke[(n + gi, z)] = g[now[z]];
                ke[(z, n + gi)] = g[now[z]];
            }
        }
        for (x, gx) in grand.iter().enumerate() {
            for (y, gy) in grand.iter().enumerate().skip(x) {
                let cross = self.sigma.select_rows(&cond(gx.w)).select_columns(&cond(gy.w));
                let mut v = gfit(gx).reg[gx.j].dot(&(cross * &gfit(gy).reg[gy.j]));
                if gx.w == gy.w {
                    v += gfit(gx).resid[(gx.j, gy.j)];
                }
                ke[(n + x, n + y)] = v;
                ke[(n + y, n + x)] = v;
            }
        }

        let mut lin = DMatrix::zeros(n, e);
        for v in 0..n {
            lin[(v, v)] += self.a;
            if let Some(p) = self.verts[v].parent {
                lin[(v, p)] += self.b;
            }
            for &ch in &self.verts[v].children {
                lin[(v, ch)] += self.b;
            }
        }
        for (gi, g) in grand.iter().enumerate() {
            lin[(g.w, n + gi)] += self.b;
        }

        let mut cols = DMatrix::zeros(big, e);
        for v in 0..n {
            cols.set_column(v, &self.sigma.column(now[v]));
        }
        for (gi, g) in gcross.iter().enumerate() {
            cols.set_column(n + gi, g);
        }
        let g = &cols * lin.transpose();
        let mut h = &lin * &ke * lin.transpose() + DMatrix::identity(n, n);
        h = (&h + h.transpose()) * 0.5;

        let mut me = DVector::zeros(e);
        for v in 0..n {
            me[v] = self.mean[now[v]];
        }
        for (gi, m) in gmean.iter().enumerate() {
            me[n + gi] = *m;
        }
        let mnew = &lin * me + DVector::from_element(n, self.c);

        let mut sigma = DMatrix::zeros(big + n, big + n);
        sigma.view_mut((0, 0), (big, big)).copy_from(&self.sigma);
        sigma.view_mut((0, big), (big, n)).copy_from(&g);
        sigma.view_mut((big, 0), (n, big)).copy_from(&g.transpose());
        sigma.view_mut((big, big), (n, n)).copy_from(&h);
        let mut mean = DVector::zeros(big + n);
        mean.rows_mut(0, big).copy_from(&self.mean);
        mean.rows_mut(big, n).copy_from(&mnew);

        Ok(RegularishState { sigma, mean, k: self.k + 1, verts: self.verts.clone(), ..*self })
    }

    pub fn advance(&mut self) -> Result<(), GaussError> {
        *self = self.step()?;
        Ok(())
    }

    /// Smallest eigenvalue of the tracked covariance.
    pub fn min_eigenvalue(&self) -> f64 {
        self.sigma.clone().symmetric_eigenvalues().min()
    }

    /// Largest deviation from the regular-tree blocks of `reg` (same
    /// horizon, κ̃ = κ − 1): Ω blocks for pairs at distance ≤ 2, `C_{k,3}`
    /// and `A_{k,4}`, and the means.
    pub fn regular_discrepancy(&self, reg: &CovState) -> Result<f64, GaussError> {
        if self.kappa_tilde + 1 != self.kappa || reg.params().kappa != self.kappa || reg.horizon() != self.k {
            return Err(GaussError::Precondition("needs κ̃ = κ − 1 and matching κ and horizon".into()));
        }
        let v = |l: &[u32]| self.vertex(l).expect("tracked");
        let pairs: [(&[u32], &[u32], usize); 8] = [
            (&[], &[], 0),
            (&[1], &[1], 0),
            (&[1, 2], &[1, 2], 0),
            (&[], &[1], 1),
            (&[1], &[1, 1], 1),
            (&[1], &[2], 2),
            (&[], &[2, 1], 2),
            (&[1, 1], &[1, 2], 2),
        ];
        let mut worst: f64 = 0.0;
        for (x, y, d) in pairs {
            worst = worst.max((self.cov_block(v(x), v(y)) - reg.omega(d)).amax());
        }
        let c3 = self.cov_block(v(&[1]), v(&[2, 1])).column(self.k).clone_owned();
        worst = worst.max((c3 - reg.c_vec(3)).amax());
        let a4 = self.cov_block(v(&[1, 1]), v(&[2, 1]))[(self.k, self.k)];
        worst = worst.max((a4 - reg.a_scalar(4)).abs());
        for (m, r) in self.mean_traj(v(&[2, 2])).iter().zip(reg.means()) {
            worst = worst.max((m - r).abs());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::AffineParams;

    #[test]
    fn vertex_layout() {
        let s = RegularishState::new(3, 1, 0.3, 0.2, 0.0).unwrap();
        // root, 1, 2, 3, 11, 21, 22, 31, 32
        assert_eq!(s.vertices().len(), 9);
        assert_eq!(s.representatives().len(), 6);
        assert!(RegularishState::new(2, 1, 0.3, 0.2, 0.0).is_err());
    }

    #[test]
    fn first_step_by_hand() {
        let s = RegularishState::new(3, 1, 0.3, 0.2, 0.0).unwrap().step().unwrap();
        let var = |l: &[u32]| {
            let v = s.vertex(l).unwrap();
            s.cov_block(v, v)[(1, 1)]
        };
        // degree: root 3, vertex 1 has 1 + 1, vertex 2 has 1 + 2, vertex 11 has 1 + 1
        assert!((var(&[]) - (0.09 + 3.0 * 0.04 + 1.0)).abs() < 1e-14);
        assert!((var(&[1]) - (0.09 + 2.0 * 0.04 + 1.0)).abs() < 1e-14);
        assert!((var(&[2]) - (0.09 + 3.0 * 0.04 + 1.0)).abs() < 1e-14);
        assert!((var(&[1, 1]) - (0.09 + 2.0 * 0.04 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn degenerate_case_is_regular() {
        for kappa in [3usize, 4] {
            let p = AffineParams::new(kappa, 0.35, 0.15, 0.05).unwrap();
            let mut reg = CovState::new(p);
            let mut ish = RegularishState::new(kappa, kappa - 1, 0.35, 0.15, 0.05).unwrap();
            for _ in 0..6 {
                reg.advance().unwrap();
                ish.advance().unwrap();
                let d = ish.regular_discrepancy(&reg).unwrap();
                assert!(d < 1e-8, "κ={kappa} k={} diff {d}", ish.horizon());
            }
        }
    }

    #[test]
    fn stays_psd() {
        let mut s = RegularishState::new(3, 1, 0.3, 0.2, 0.0).unwrap();
        for _ in 0..6 {
            s.advance().unwrap();
            assert!(s.min_eigenvalue() > -1e-9);
            assert!((s.sigma() - s.sigma().transpose()).amax() < 1e-12);
        }
    }
}
