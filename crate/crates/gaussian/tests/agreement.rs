use std::time::Instant;

use pca_gaussian::mc::{simulate, FlatTree, TreeShape};
use pca_gaussian::{distance_recurrence_oracle, mean_sequence, AffineParams, CovState, RegularishState};

#[test]
fn cov_step_matches_distance_oracle() {
    for (kappa, a, b) in [(3, 0.4, 0.2), (2, 0.5, 0.3), (4, -0.3, 0.1)] {
        let k = 30;
        let states = CovState::run(AffineParams::new(kappa, a, b, 0.1).unwrap(), k).unwrap();
        let table = distance_recurrence_oracle(a, b, kappa, k);
        for (j, s) in states.iter().enumerate() {
            for n in 0..=4 {
                let scale = table[j][0].max(1.0);
                assert!(
                    (s.a_scalar(n) - table[j][n]).abs() < 1e-9 * scale,
                    "κ={kappa} k={j} n={n}: {} vs {}",
                    s.a_scalar(n),
                    table[j][n]
                );
            }
        }
    }
}

#[test]
fn omega_blocks_match_oracle_diagonals() {
    // the diagonal of Ω_{k,i} holds C_i(t) for t ≤ k
    let k = 12;
    let s = CovState::run(AffineParams::new(3, 0.4, 0.2, 0.1).unwrap(), k).unwrap().pop().unwrap();
    let table = distance_recurrence_oracle(0.4, 0.2, 3, k);
    for i in 0..3 {
        for t in 0..=k {
            assert!((s.omega(i)[(t, t)] - table[t][i]).abs() < 1e-9);
        }
    }
    let m = mean_sequence(0.4, 0.2, 0.1, 3, k);
    assert_eq!(s.means(), &m[..]);
}

#[test]
fn cov_step_matches_tree_monte_carlo() {
    let (k, m) = (5, 30_000);
    let p = AffineParams::new(3, 0.4, 0.2, 0.1).unwrap();
    let s = CovState::run(p, k).unwrap().pop().unwrap();
    let tree = FlatTree::build(TreeShape::Regular { kappa: 3 }, k + 1);
    let track = [0, tree.find(&[1]).unwrap(), tree.find(&[2]).unwrap()];
    let mc = simulate(&tree, 0.4, 0.2, 0.1, k, m, 17, &track).unwrap();
    for t in 0..=k {
        assert!(mc.mean(0, t).z(s.means()[t]) < 4.0);
        for u in 0..=t {
            assert!(mc.cov(0, u, 0, t).z(s.omega(0)[(u, t)]) < 4.0, "Ω0({u},{t})");
            assert!(mc.cov(0, u, 1, t).z(s.omega(1)[(u, t)]) < 4.0, "Ω1({u},{t})");
            assert!(mc.cov(1, u, 2, t).z(s.omega(2)[(u, t)]) < 4.0, "Ω2({u},{t})");
        }
    }
}

#[test]
fn regularish_matches_tree_monte_carlo() {
    let (k, m) = (4, 30_000);
    let tree = FlatTree::build(TreeShape::Regularish { kappa: 3, kappa_tilde: 1 }, k + 1);
    let track = [0, tree.find(&[1]).unwrap(), tree.find(&[2]).unwrap()];
    let mc = simulate(&tree, 0.3, 0.2, 0.0, k, m, 5, &track).unwrap();
    let mut s = RegularishState::new(3, 1, 0.3, 0.2, 0.0).unwrap();
    for t in 1..=k {
        s.advance().unwrap();
        let v1 = s.vertex(&[1]).unwrap();
        let v2 = s.vertex(&[2]).unwrap();
        assert!(mc.cov(0, t, 0, t).z(s.root_variance()) < 4.0, "t={t}");
        assert!(mc.cov(1, t, 1, t).z(s.cov_block(v1, v1)[(t, t)]) < 4.0);
        assert!(mc.cov(1, t, 2, t).z(s.cov_block(v1, v2)[(t, t)]) < 4.0);
    }
}

#[test]
fn two_hundred_steps_are_fast() {
    let start = Instant::now();
    let recs = CovState::sweep(AffineParams::new(3, 0.4, 0.2, 0.1).unwrap(), 200).unwrap();
    let el = start.elapsed().as_secs_f64();
    assert_eq!(recs.len(), 201);
    assert!(recs.iter().all(|r| r.a.iter().all(|x| x.is_finite())));
    assert!(el < 5.0, "{el} s");
}
