//! Built-in binary kernels. All symmetric ones read neighbors only through
//! counts, so they satisfy the permutation contract by construction.

use crate::{CustomRule, FiniteRule, StateSpace, Sym};

fn ones(nbrs: &[&[Sym]]) -> usize {
    nbrs.iter().filter(|n| n[n.len() - 1] == 1).count()
}

fn last(t: &[Sym]) -> Sym {
    t[t.len() - 1]
}

/// Voter-style kernel with flip probability `q`: the fraction `f` of ones
/// among the closed neighborhood is copied, then flipped with probability `q`:
/// `P(1) = q + (1 - 2q) f`.
pub fn voter_flip(q: f64) -> FiniteRule {
    FiniteRule::from_fn(&format!("voter-flip-{q}"), StateSpace::binary(), true, move |_, own, nbrs, out| {
        let f = (last(own) as usize + ones(nbrs)) as f64 / (1 + nbrs.len()) as f64;
        out[1] = q + (1.0 - 2.0 * q) * f;
        out[0] = 1.0 - out[1];
    })
    .expect("binary")
}

/// Contact-style kernel: an infected site recovers with probability `q`, a
/// healthy one is infected by each infected neighbor independently with
/// probability `q`.
pub fn contact(q: f64) -> FiniteRule {
    FiniteRule::from_fn(&format!("contact-{q}"), StateSpace::binary(), true, move |_, own, nbrs, out| {
        out[1] = if last(own) == 1 { 1.0 - q } else { 1.0 - (1.0 - q).powi(ones(nbrs) as i32) };
        out[0] = 1.0 - out[1];
    })
    .expect("binary")
}

/// Majority of the closed neighborhood, followed by an error with probability `eps`; ties are fair coins.
pub fn noisy_majority(eps: f64) -> FiniteRule {
    FiniteRule::from_fn(&format!("majority-{eps}"), StateSpace::binary(), true, move |_, own, nbrs, out| {
        let n1 = last(own) as usize + ones(nbrs);
        let n = 1 + nbrs.len();
        out[1] = match (2 * n1).cmp(&n) {
            std::cmp::Ordering::Greater => 1.0 - eps,
            std::cmp::Ordering::Less => eps,
            std::cmp::Ordering::Equal => 0.5,
        };
        out[0] = 1.0 - out[1];
    })
    .expect("binary")
}

/// History-dependent kernel: a site that has been 1 at both of its last two
/// times is stickier. `P(1) = 0.1 + 0.5 f + 0.3·1{x(k)=x(k-1)=1}`.
pub fn persistence() -> FiniteRule {
    FiniteRule::from_fn("persistence", StateSpace::binary(), false, |k, own, nbrs, out| {
        let f = ones(nbrs) as f64 / nbrs.len().max(1) as f64;
        let prev = if k == 0 { own[0] } else { own[k - 1] };
        let sticky = if own[k] == 1 && prev == 1 { 0.3 } else { 0.0 };
        out[1] = 0.1 + 0.5 * f + sticky;
        out[0] = 1.0 - out[1];
    })
    .expect("binary")
}

/// Isolated flip: ignores neighbors, flips the own state with probability `q`.
pub fn flip(q: f64) -> FiniteRule {
    FiniteRule::from_fn(&format!("flip-{q}"), StateSpace::binary(), true, move |_, own, _, out| {
        let s = last(own) as usize;
        out[s] = 1.0 - q;
        out[1 - s] = q;
    })
    .expect("binary")
}

/// The state never changes.
pub fn identity(space: StateSpace) -> FiniteRule {
    FiniteRule::from_fn("identity", space, true, |_, own, _, out| {
        out[last(own) as usize] = 1.0;
    })
    .expect("finite")
}

/// Every update returns `s`.
pub fn constant(space: StateSpace, s: Sym) -> FiniteRule {
    FiniteRule::from_fn(&format!("constant-{s}"), space, true, move |_, _, _, out| {
        out[s as usize] = 1.0;
    })
    .expect("finite")
}

/// Order-sensitive rule: copies the first listed neighbor (own state if
/// isolated), flipping with probability `eps`. Breaks the symmetry contract.
pub fn first_neighbor_copy(eps: f64) -> CustomRule {
    CustomRule::new("first-neighbor-copy", StateSpace::binary(), move |_, own, nbrs, u| {
        let src = nbrs.first().map(|n| last(n)).unwrap_or(last(own));
        if u < eps {
            1 - src
        } else {
            src
        }
    })
    .expect("binary")
}

/// Resolve a built-in kernel by name: `voter:Q`, `contact:Q`, `majority:EPS`,
/// `flip:Q`, `persistence`, `identity`.
pub fn builtin(spec: &str) -> Option<FiniteRule> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, a.parse::<f64>().ok()),
        None => (spec, None),
    };
    let prob = |d: f64| arg.unwrap_or(d);
    if let Some(a) = arg {
        if !(0.0..=1.0).contains(&a) {
            return None;
        }
    }
    match name {
        "voter" => Some(voter_flip(prob(0.25))),
        "contact" => Some(contact(prob(0.25))),
        "majority" => Some(noisy_majority(prob(0.1))),
        "flip" => Some(flip(prob(0.25))),
        "persistence" => Some(persistence()),
        "identity" => Some(identity(StateSpace::binary())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_kernels() -> Vec<FiniteRule> {
        vec![voter_flip(0.25), contact(0.25), noisy_majority(0.1), persistence(), flip(0.3)]
    }

    #[test]
    fn voter_values() {
        let r = voter_flip(0.25);
        let mut p = [0.0; 2];
        r.probs(&[1], &[&[0], &[0], &[1]], &mut p).unwrap();
        assert!((p[1] - (0.25 + 0.5 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn builtin_lookup() {
        assert_eq!(builtin("voter:0.25").unwrap().name(), "voter-flip-0.25");
        assert!(builtin("voter:1.5").is_none());
        assert!(builtin("nope").is_none());
    }

    proptest! {
        #[test]
        fn rows_are_distributions(
            own in prop::collection::vec(0u8..2, 1..5),
            deg in 0usize..6,
            seed in any::<u64>(),
        ) {
            let len = own.len();
            let nb: Vec<Vec<u8>> = (0..deg)
                .map(|i| (0..len).map(|t| ((crate::mix64(seed ^ (i * 31 + t) as u64)) & 1) as u8).collect())
                .collect();
            let refs: Vec<&[u8]> = nb.iter().map(|v| v.as_slice()).collect();
            for r in all_kernels() {
                let mut p = [0.0; 2];
                r.probs(&own, &refs, &mut p).unwrap();
                prop_assert!((p[0] + p[1] - 1.0).abs() <= 1e-12);
                prop_assert!(p.iter().all(|x| *x >= 0.0));
            }
        }
    }
}
