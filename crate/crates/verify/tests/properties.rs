use pca_core::{kernels, InitialLaw, NoiseSource, Sym};
use pca_engine::TreeFamily;
use pca_graphs::{unimodular_offspring, OffspringDistribution};
use pca_verify::*;

fn bern() -> InitialLaw {
    InitialLaw::bernoulli(0.5)
}

/// Agreements between the root's later states and child 1's earlier ones.
fn lag_agreement(x: &[Sym], c: &[ChildSummary]) -> f64 {
    (1..x.len()).filter(|&t| x[t] == c[0].traj[t - 1]).count() as f64
}

#[test]
fn exchangeability_holds_and_detects_order_bias() {
    let u = OffspringDistribution::uniform(2);
    let good = exchangeability_check(&u, &u, &kernels::contact(0.3), &bern(), 2, 2, 100_000, &NoiseSource::new(1), lag_agreement).unwrap();
    println!("symmetric: {good:?}");
    assert!(good.pass);
    let bad = exchangeability_check(&u, &u, &kernels::first_neighbor_copy(0.05), &bern(), 2, 2, 100_000, &NoiseSource::new(2), lag_agreement)
        .unwrap();
    println!("biased: {bad:?}");
    assert!(!bad.pass);
}

fn neighbor_in_state_one(t: &pca_graphs::RootedTree, s: &pca_engine::SystemState<Sym>, o: usize, p: usize) -> f64 {
    ((tree_distance(t, o, p) == 1) && s.trajectory(p)[s.horizon()] == 1) as u8 as f64
}

#[test]
fn mass_transport_separates_unimodular_from_not() {
    let (k, r) = (2, 1);
    let rule = kernels::contact(0.3);
    let ugw = TreeFamily::Ugw { root: OffspringDistribution::poisson(2.0).unwrap() };
    let good = mass_transport_check(&ugw, &rule, &bern(), k, r, k + r + 1, 100_000, &NoiseSource::new(3), neighbor_in_state_one).unwrap();
    println!("UGW Poisson(2): {good:?}");
    assert!(good.diff.pass);
    let gw = TreeFamily::Gw { root: OffspringDistribution::delta(1), rest: OffspringDistribution::delta(2) };
    let bad = mass_transport_check(&gw, &rule, &bern(), k, r, k + r + 1, 100_000, &NoiseSource::new(4), neighbor_in_state_one).unwrap();
    println!("GW(δ1, δ2): {bad:?}");
    assert!(!bad.diff.pass);
}

#[test]
fn rerooting_identity_and_its_failure() {
    let root = OffspringDistribution::poisson_truncated(2.0, 4).unwrap();
    let h = |_: &[Sym], _: &[Sym], m: &[Vec<Sym>]| (m.len() == 2) as u8 as f64;
    let rule = kernels::contact(0.3);
    let good = rerooting_check(&root, &unimodular_offspring(&root).unwrap(), &rule, &bern(), 1, 200_000, 100, &NoiseSource::new(5), h).unwrap();
    let worst = good.atoms.iter().map(|a| (a.lhs - a.rhs).abs() / a.se).fold(0.0, f64::max);
    println!("unimodular: {} atoms, worst z {worst:.2}", good.atoms.len());
    assert!(good.pass);
    let bad = rerooting_check(&root, &OffspringDistribution::delta(1), &rule, &bern(), 1, 200_000, 100, &NoiseSource::new(6), h).unwrap();
    assert!(!bad.pass);
}

#[test]
fn mrf_matrix_and_consistency() {
    let m = mrf_matrix(3, 1e-12).unwrap();
    println!("{} cases, max residual {:.2e}, controls {:?}", m.cases.len(), m.max_residual, m.negative_controls);
    assert!(m.pass);
    let c = path7_vs_path5(&kernels::voter_flip(0.25), &kernels::contact(0.2), 2).unwrap();
    assert!(c.pass, "{}", c.max_tv);
    let s = gaussian_counterexample_suite().unwrap();
    assert!(s.pass);
}
