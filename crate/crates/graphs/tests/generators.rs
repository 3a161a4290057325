use pca_core::NoiseSource;
use pca_graphs::*;
use proptest::prelude::*;
use rand::rngs::SmallRng;
use rand::SeedableRng;

#[test]
fn binomial_gw_two_generation_size() {
    let rho = OffspringDistribution::binomial(2, 0.5).unwrap();
    let noise = NoiseSource::new(11);
    let m = 100_000;
    let sizes: Vec<f64> = (0..m).map(|r| sample_gw_tree(&rho, &rho, 2, &noise, r).len() as f64).collect();
    let mean = sizes.iter().sum::<f64>() / m as f64;
    let var = sizes.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    let se = (var / m as f64).sqrt();
    assert!((mean - 3.0).abs() < 4.0 * se, "mean {mean} se {se}");
}

#[test]
fn gw_child_counts_follow_pmf() {
    let root = OffspringDistribution::new(vec![0.2, 0.5, 0.3]).unwrap();
    let rest = OffspringDistribution::new(vec![0.6, 0.1, 0.3]).unwrap();
    let noise = NoiseSource::new(4);
    let m = 20_000;
    let mut root_hist = [0usize; 3];
    let mut gen1_hist = [0usize; 3];
    for r in 0..m {
        let t = sample_gw_tree(&root, &rest, 3, &noise, r);
        t.audit().unwrap();
        root_hist[t.children(0).len()] += 1;
        for &c in t.children(0) {
            gen1_hist[t.children(c).len()] += 1;
        }
    }
    let check = |hist: &[usize; 3], law: &OffspringDistribution| {
        let n: usize = hist.iter().sum();
        for (k, &h) in hist.iter().enumerate() {
            let p = law.prob(k);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((h as f64 / n as f64 - p).abs() < 4.0 * se, "k={k}");
        }
    };
    check(&root_hist, &root);
    check(&gen1_hist, &rest);
}

#[test]
fn er_mean_degree() {
    let n = 10_000;
    let degs: Vec<f64> = (0..50)
        .map(|s| {
            let g = erdos_renyi(n, 2.0, &mut SmallRng::seed_from_u64(s)).unwrap();
            2.0 * g.edge_count() as f64 / n as f64
        })
        .collect();
    let mean = degs.iter().sum::<f64>() / 50.0;
    let var = degs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 49.0;
    assert!((mean - 2.0).abs() < 4.0 * (var / 50.0).sqrt() + 1e-3, "{mean}");
}

#[test]
fn erased_configuration_keeps_most_degrees() {
    for s in 0..20 {
        let g = configuration_model(&vec![3; 1000], &mut SmallRng::seed_from_u64(s)).unwrap();
        let full = g.degrees().iter().filter(|&&d| d == 3).count();
        assert!(full as f64 / 1000.0 >= 0.99, "seed {s}: {full}");
    }
}

#[test]
fn random_regular_degrees() {
    for s in 0..5 {
        let g = random_regular(1000, 3, &mut SmallRng::seed_from_u64(s)).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 3));
    }
}

proptest! {
    #[test]
    fn boundary_partition(seed in any::<u64>(), n in 2usize..30, pick in prop::collection::vec(any::<prop::sample::Index>(), 1..5)) {
        let g = erdos_renyi(n, 2.5, &mut SmallRng::seed_from_u64(seed)).unwrap();
        let a: Vec<usize> = pick.iter().map(|i| i.index(n)).collect();
        let (d1, d2) = boundary_sets(&g, &a).unwrap();
        for v in &a {
            prop_assert!(!d1.contains(v) && !d2.contains(v));
            for u in g.neighbors(*v) {
                prop_assert!(a.contains(u) || d1.contains(u));
            }
        }
        prop_assert!(d1.is_subset(&d2));
    }

    #[test]
    fn gw_trees_satisfy_axioms(seed in any::<u64>(), cap in 0usize..5) {
        let rho = OffspringDistribution::uniform(3);
        let t = sample_gw_tree(&rho, &rho, cap, &NoiseSource::new(seed), 0);
        prop_assert!(t.audit().is_ok());
        prop_assert!(t.depth() <= cap);
        prop_assert_eq!(RootedTree::parse_text(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn er_graphs_are_simple_and_symmetric(seed in any::<u64>(), n in 1usize..60, lambda in 0.0f64..8.0) {
        let g = erdos_renyi(n, lambda, &mut SmallRng::seed_from_u64(seed)).unwrap();
        for v in 0..n {
            for &u in g.neighbors(v) {
                prop_assert!(u != v && g.has_edge(u, v));
            }
        }
    }
}
