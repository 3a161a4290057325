use nalgebra::DMatrix;

use crate::GaussError;

/// Position of `X_side(t)` in the interleaved order `X_0(0), X_1(0), X_0(1), …`.
pub fn interleaved_index(t: usize, side: usize) -> usize {
    2 * t + side
}

/// Reorder an interleaved `2(k+1)` matrix into blocked order
/// `X_0(0..=k), X_1(0..=k)`.
pub fn blocked_from_interleaved(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() / 2;
    let src = |i: usize| if i < n { interleaved_index(i, 0) } else { interleaved_index(i - n, 1) };
    DMatrix::from_fn(2 * n, 2 * n, |i, j| m[(src(i), src(j))])
}

/// Inverse of `[[Y, B], [Bᵀ, A]]` from `Y⁻¹` by block inversion around the
/// Schur complement `A − Bᵀ Y⁻¹ B`.
pub fn schur_update(prev_inv: &DMatrix<f64>, b: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>, GaussError> {
    let n = prev_inv.nrows();
    let m = a.nrows();
    if prev_inv.ncols() != n || b.shape() != (n, m) || a.ncols() != m {
        return Err(GaussError::Dimension(format!(
            "inverse {}x{}, B {}x{}, A {}x{}",
            n,
            prev_inv.ncols(),
            b.nrows(),
            b.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    let yb = prev_inv * b;
    let mut s = a - b.transpose() * &yb;
    s = (&s + s.transpose()) * 0.5;
    let ev = s.clone().symmetric_eigenvalues();
    let min = ev.min();
    if min < 1e-10 {
        return Err(GaussError::Singular { what: "Schur complement".into(), min_eig: min, cond: ev.max() / min.abs() });
    }
    let s_inv = s.try_inverse().ok_or_else(|| GaussError::Singular {
        what: "Schur complement".into(),
        min_eig: min,
        cond: f64::INFINITY,
    })?;
    let ybs = &yb * &s_inv;
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(&(prev_inv + &ybs * yb.transpose()));
    out.view_mut((0, n), (n, m)).copy_from(&(-&ybs));
    out.view_mut((n, 0), (m, n)).copy_from(&(-ybs.transpose()));
    out.view_mut((n, n), (m, m)).copy_from(&s_inv);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_stays_identity() {
        let inv = schur_update(&DMatrix::identity(4, 4), &DMatrix::zeros(4, 2), &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(inv, DMatrix::identity(6, 6));
    }

    #[test]
    fn singular_complement_rejected() {
        let b = DMatrix::from_row_slice(1, 1, &[1.0]);
        let e = schur_update(&DMatrix::identity(1, 1), &b, &DMatrix::identity(1, 1)).unwrap_err();
        assert!(matches!(e, GaussError::Singular { .. }));
    }

    #[test]
    fn reorder_roundtrip() {
        let m = DMatrix::from_fn(6, 6, |i, j| (10 * i + j) as f64);
        let b = blocked_from_interleaved(&m);
        // X_1(0) sits at interleaved 1, blocked 3
        assert_eq!(b[(3, 0)], m[(1, 0)]);
        assert_eq!(b[(5, 4)], m[(5, 3)]);
    }

    proptest! {
        #[test]
        fn grows_to_dense_inverse(seed in prop::collection::vec(-1.0f64..1.0, 64), steps in 1usize..5) {
            let n = 2 * steps + 2;
            let g = DMatrix::from_fn(n, n, |i, j| seed[(i * 7 + j * 3) % 64] + if i == j { 1.0 } else { 0.0 });
            let full = &g * g.transpose() + DMatrix::identity(n, n);
            let mut inv = full.view((0, 0), (2, 2)).clone_owned().try_inverse().unwrap();
            for s in 1..=steps {
                let p = 2 * s;
                let b = full.view((0, p), (p, 2)).clone_owned();
                let a = full.view((p, p), (2, 2)).clone_owned();
                inv = schur_update(&inv, &b, &a).unwrap();
            }
            let prod = &full * &inv;
            prop_assert!((prod - DMatrix::identity(n, n)).amax() < 1e-9);
        }
    }
}
