use serde::Serialize;

/// A Monte Carlo statistic with its standard error and the 5·SE verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gate {
    pub value: f64,
    pub se: f64,
    pub pass: bool,
}

impl Gate {
    /// Passes when `|value| ≤ 5·se`.
    pub fn zero(value: f64, se: f64) -> Gate {
        Gate { value, se, pass: value.abs() <= 5.0 * se }
    }
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, f64::INFINITY);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Weighted ratio `Σ w h / Σ w` and its delta-method standard error.
pub fn ratio_se(pairs: &[(f64, f64)]) -> (f64, f64) {
    let sw: f64 = pairs.iter().map(|p| p.0).sum();
    let r = pairs.iter().map(|(w, h)| w * h).sum::<f64>() / sw;
    let v = pairs.iter().map(|(w, h)| (w * (h - r)).powi(2)).sum::<f64>();
    (r, v.sqrt() / sw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_values() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        let (r, se) = ratio_se(&[(1.0, 2.0), (1.0, 2.0)]);
        assert_eq!((r, se), (2.0, 0.0));
        assert!(Gate::zero(0.0, 0.0).pass);
        assert!(!Gate::zero(1.0, 0.1).pass);
    }

    proptest::proptest! {
        #[test]
        fn unit_weights_reduce_to_the_mean(hs in proptest::collection::vec(-10.0f64..10.0, 2..50)) {
            let pairs: Vec<(f64, f64)> = hs.iter().map(|&h| (1.0, h)).collect();
            let (r, rse) = ratio_se(&pairs);
            let (m, mse) = mean_se(&hs);
            let n = hs.len() as f64;
            proptest::prop_assert!((r - m).abs() < 1e-12);
            // the delta method uses the 1/n variance, the mean the 1/(n-1) one
            proptest::prop_assert!((rse - mse * ((n - 1.0) / n).sqrt()).abs() < 1e-12);
        }

        #[test]
        fn affine_equivariance(xs in proptest::collection::vec(-5.0f64..5.0, 2..40), a in 0.1f64..3.0, b in -2.0f64..2.0) {
            let (m, se) = mean_se(&xs);
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let (m2, se2) = mean_se(&ys);
            proptest::prop_assert!((m2 - (a * m + b)).abs() < 1e-9);
            proptest::prop_assert!((se2 - a * se).abs() < 1e-9);
        }
    }
}
