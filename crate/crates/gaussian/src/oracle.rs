/// Equal-time covariances by graph distance on the κ-regular tree with
/// `X(0)` i.i.d. standard Gaussian: `table[j][n] = C_n(j)` for `j ≤ k`,
/// `n ≤ max(k + 2, 4)`.
///
/// Expanding both sides of `Cov(X_u(j+1), X_v(j+1))` over the closed
/// neighborhoods of `u` and `v` gives, for `n ≥ 2`,
/// `C_n' = b² C_{n−2} + 2ab C_{n−1} + (a² + 2(κ−1)b²) C_n + 2ab(κ−1) C_{n+1} + b²(κ−1)² C_{n+2}`,
/// with the `n = 0, 1` rows specialised because the paths overlap.
pub fn distance_recurrence_oracle(a: f64, b: f64, kappa: usize, k: usize) -> Vec<Vec<f64>> {
    let kap = kappa as f64;
    let q = kap - 1.0;
    let out_w = (k + 2).max(4) + 1;
    // C_n(j) vanishes for n > 2j, so this width never truncates a needed term.
    let w = 2 * k + 6;
    let mut cur = vec![0.0; w + 3];
    cur[0] = 1.0;
    let mut table = vec![cur[..out_w].to_vec()];
    for _ in 0..k {
        let mut nxt = vec![0.0; w + 3];
        nxt[0] = (a * a + kap * b * b) * cur[0] + 2.0 * a * b * kap * cur[1] + kap * q * b * b * cur[2] + 1.0;
        nxt[1] = 2.0 * a * b * cur[0]
            + (a * a + (2.0 * kap - 1.0) * b * b) * cur[1]
            + 2.0 * a * b * q * cur[2]
            + b * b * q * q * cur[3];
        for n in 2..=w {
            nxt[n] = b * b * cur[n - 2]
                + 2.0 * a * b * cur[n - 1]
                + (a * a + 2.0 * q * b * b) * cur[n]
                + 2.0 * a * b * q * cur[n + 1]
                + b * b * q * q * cur[n + 2];
        }
        cur = nxt;
        table.push(cur[..out_w].to_vec());
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_row() {
        let t = distance_recurrence_oracle(0.4, 0.2, 3, 0);
        assert_eq!(t[0][0], 1.0);
        assert!(t[0][1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn decoupled_is_ar1() {
        let t = distance_recurrence_oracle(0.7, 0.0, 3, 12);
        let mut v = 1.0;
        for row in &t {
            assert!((row[0] - v).abs() < 1e-14);
            assert!(row[1..].iter().all(|&x| x == 0.0));
            v = 0.49 * v + 1.0;
        }
    }

    #[test]
    fn light_cone() {
        let t = distance_recurrence_oracle(0.4, 0.2, 3, 5);
        for (j, row) in t.iter().enumerate() {
            for (n, &c) in row.iter().enumerate() {
                if n > 2 * j {
                    assert_eq!(c, 0.0, "C_{n}({j})");
                } else {
                    assert!(c > 0.0);
                }
            }
        }
    }
}
