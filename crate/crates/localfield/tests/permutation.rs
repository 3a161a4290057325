//! Relabeling the neighbors of every replica changes no multiset-valued
//! statistic of the regular ensemble.

use std::collections::BTreeMap;

use pca_localfield::{KeyMissPolicy, RegularEnsemble};
use proptest::prelude::*;

type Payloads = BTreeMap<Vec<Vec<u8>>, u64>;

/// Per conditioning key, the multiset of sorted phantom payloads.
fn kernel_stats(e: &RegularEnsemble) -> BTreeMap<(Vec<u8>, Vec<u8>), Payloads> {
    let kern = e.estimate_kernel(KeyMissPolicy::Strict).unwrap();
    let mut out = BTreeMap::new();
    for r in e.population() {
        for v in 1..r.len() {
            let key = (r[0].clone(), r[v].clone());
            if out.contains_key(&key) {
                continue;
            }
            let mut m = Payloads::new();
            for (id, _) in kern.conditional(&key.0, &key.1).unwrap() {
                let mut p: Vec<Vec<u8>> = e.payload(id).iter().map(|t| t.to_vec()).collect();
                p.sort();
                *m.entry(p).or_insert(0) += 1;
            }
            out.insert(key, m);
        }
    }
    out
}

fn population(kappa: usize, len: usize) -> impl Strategy<Value = Vec<Vec<Vec<u8>>>> {
    prop::collection::vec(prop::collection::vec(prop::collection::vec(0u8..2, len), kappa + 1), 2..40)
}

proptest! {
    #[test]
    fn neighbor_relabeling_is_invisible(
        (kappa, pop, seeds) in (1usize..4, 1usize..4).prop_flat_map(|(kappa, len)| {
            (Just(kappa), population(kappa, len), prop::collection::vec(any::<u64>(), 40))
        })
    ) {
        let mut shuffled = pop.clone();
        for (r, s) in shuffled.iter_mut().zip(&seeds) {
            let nb = &mut r[1..];
            let n = nb.len();
            nb.rotate_left((*s as usize) % n);
            if s & 1 == 1 {
                nb.reverse();
            }
        }
        let a = RegularEnsemble::from_population(kappa, pop).unwrap();
        let b = RegularEnsemble::from_population(kappa, shuffled).unwrap();
        prop_assert_eq!(a.neighborhood_measure().unwrap(), b.neighborhood_measure().unwrap());
        prop_assert_eq!(a.root_measure().unwrap(), b.root_measure().unwrap());
        prop_assert_eq!(kernel_stats(&a), kernel_stats(&b));
    }
}
