use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rulefile::RuleTable;
use crate::{CoreError, InitialLaw, NoiseKind, State, StateSpace, StateValue, Sym, TrajMultiset, Trajectory};

/// Probability vector of the next state, written into the output buffer.
/// Arguments: time `k`, own trajectory, neighbor trajectories (all of length `k+1`).
pub type KernelFn = dyn Fn(usize, &[Sym], &[&[Sym]], &mut [f64]) + Send + Sync;

/// Deterministic map (time, own, neighbors, uniform draw) -> next symbol.
pub type CustomFn = dyn Fn(usize, &[Sym], &[&[Sym]], f64) -> Sym + Send + Sync;

/// The update map `F^k` together with the kind of noise it consumes.
pub trait Rule: Send + Sync {
    type S: StateValue;

    fn noise_kind(&self) -> NoiseKind;

    /// One transition. `noise` is a uniform on `[0,1)` or a standard normal
    /// according to [`Rule::noise_kind`].
    fn update(&self, own: &[Self::S], nbrs: &[&[Self::S]], noise: f64) -> Result<Self::S, CoreError>;
}

fn check_inputs<S: StateValue>(own: &[S], nbrs: &[&[S]]) -> Result<(), CoreError> {
    if own.is_empty() {
        return Err(CoreError::EmptyTrajectory);
    }
    if own[own.len() - 1].is_cemetery() {
        return Err(CoreError::OwnAtCemetery);
    }
    for (i, n) in nbrs.iter().enumerate() {
        if n.len() != own.len() {
            return Err(CoreError::LengthMismatch { own: own.len(), index: i, other: n.len() });
        }
        if n[n.len() - 1].is_cemetery() {
            return Err(CoreError::NeighborAtCemetery(i));
        }
    }
    Ok(())
}

#[derive(Clone)]
enum Kernel {
    Table(Arc<RuleTable>),
    Func(Arc<KernelFn>),
}

/// Finite-alphabet rule given by a probability vector per (own, neighbors).
#[derive(Clone)]
pub struct FiniteRule {
    name: String,
    space: StateSpace,
    markov: bool,
    kernel: Kernel,
}

impl fmt::Debug for FiniteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteRule")
            .field("name", &self.name)
            .field("alphabet", &self.space.size())
            .field("markov", &self.markov)
            .finish()
    }
}

impl FiniteRule {
    pub fn from_fn<F>(name: &str, space: StateSpace, markov: bool, f: F) -> Result<Self, CoreError>
    where
        F: Fn(usize, &[Sym], &[&[Sym]], &mut [f64]) + Send + Sync + 'static,
    {
        if !space.is_finite() {
            return Err(CoreError::InvalidStateSpace("finite kernel needs a finite alphabet".into()));
        }
        Ok(FiniteRule { name: name.to_string(), space, markov, kernel: Kernel::Func(Arc::new(f)) })
    }

    pub fn from_table(name: &str, space: StateSpace, table: RuleTable) -> Result<Self, CoreError> {
        if space.size() != table.alphabet_size() {
            return Err(CoreError::InvalidStateSpace(format!(
                "table has {} symbols, alphabet {}",
                table.alphabet_size(),
                space.size()
            )));
        }
        Ok(FiniteRule { name: name.to_string(), space, markov: true, kernel: Kernel::Table(Arc::new(table)) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn alphabet_size(&self) -> usize {
        self.space.size()
    }

    pub fn is_markov(&self) -> bool {
        self.markov
    }

    /// Next-state distribution, validated to be a probability vector within 1e-12.
    pub fn probs(&self, own: &[Sym], nbrs: &[&[Sym]], out: &mut [f64]) -> Result<(), CoreError> {
        check_inputs(own, nbrs)?;
        let n = self.alphabet_size();
        let out = &mut out[..n];
        out.fill(0.0);
        let k = own.len() - 1;
        match &self.kernel {
            Kernel::Func(f) => f(k, own, nbrs, out),
            Kernel::Table(t) => t.fill(k, own, nbrs, out)?,
        }
        let mut sum = 0.0;
        for &p in out.iter() {
            if !p.is_finite() || p < 0.0 {
                return Err(CoreError::BadProbability { k, value: p });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(CoreError::NotNormalized { k, sum });
        }
        Ok(())
    }

    /// Inverse-CDF sample in alphabet order.
    pub fn sample(&self, own: &[Sym], nbrs: &[&[Sym]], u: f64) -> Result<Sym, CoreError> {
        let mut buf = [0.0f64; 16];
        if self.alphabet_size() <= buf.len() {
            self.probs(own, nbrs, &mut buf)?;
            Ok(InitialLaw::sample_sym(&buf[..self.alphabet_size()], u))
        } else {
            let mut v = vec![0.0; self.alphabet_size()];
            self.probs(own, nbrs, &mut v)?;
            Ok(InitialLaw::sample_sym(&v, u))
        }
    }
}

impl Rule for FiniteRule {
    type S = Sym;

    fn noise_kind(&self) -> NoiseKind {
        NoiseKind::Uniform
    }

    fn update(&self, own: &[Sym], nbrs: &[&[Sym]], noise: f64) -> Result<Sym, CoreError> {
        self.sample(own, nbrs, noise)
    }
}

/// `x(k+1) = a x(k) + b Σ_neighbors x_u(k) + c + ξ` with standard Gaussian ξ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineRule {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AffineRule {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        AffineRule { a, b, c }
    }
}

impl Rule for AffineRule {
    type S = f64;

    fn noise_kind(&self) -> NoiseKind {
        NoiseKind::StdNormal
    }

    fn update(&self, own: &[f64], nbrs: &[&[f64]], noise: f64) -> Result<f64, CoreError> {
        check_inputs(own, nbrs)?;
        // sum in canonical order so that the result is bit-identical under permutation
        let mut last: Vec<f64> = nbrs.iter().map(|n| n[n.len() - 1]).collect();
        last.sort_by(|x, y| x.total_cmp(y));
        let s: f64 = last.iter().sum();
        Ok(self.a * own[own.len() - 1] + self.b * s + self.c + noise)
    }
}

/// Arbitrary deterministic map of (own, neighbors, uniform). Not assumed symmetric.
#[derive(Clone)]
pub struct CustomRule {
    name: String,
    space: StateSpace,
    f: Arc<CustomFn>,
}

impl fmt::Debug for CustomRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRule").field("name", &self.name).finish()
    }
}

impl CustomRule {
    pub fn new<F>(name: &str, space: StateSpace, f: F) -> Result<Self, CoreError>
    where
        F: Fn(usize, &[Sym], &[&[Sym]], f64) -> Sym + Send + Sync + 'static,
    {
        if !space.is_finite() {
            return Err(CoreError::InvalidStateSpace("custom rules act on finite alphabets".into()));
        }
        Ok(CustomRule { name: name.to_string(), space, f: Arc::new(f) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }
}

impl Rule for CustomRule {
    type S = Sym;

    fn noise_kind(&self) -> NoiseKind {
        NoiseKind::Uniform
    }

    fn update(&self, own: &[Sym], nbrs: &[&[Sym]], noise: f64) -> Result<Sym, CoreError> {
        check_inputs(own, nbrs)?;
        let s = (self.f)(own.len() - 1, own, nbrs, noise);
        if (s as usize) >= self.space.size() {
            return Err(CoreError::BadOutput(s));
        }
        Ok(s)
    }
}

/// Dynamically typed rule.
#[derive(Clone, Debug)]
pub enum TransitionRule {
    Finite(FiniteRule),
    Affine(AffineRule),
    Custom(CustomRule),
}

impl TransitionRule {
    pub fn noise_kind(&self) -> NoiseKind {
        match self {
            TransitionRule::Finite(r) => r.noise_kind(),
            TransitionRule::Affine(r) => r.noise_kind(),
            TransitionRule::Custom(r) => r.noise_kind(),
        }
    }

    pub fn space(&self) -> StateSpace {
        match self {
            TransitionRule::Finite(r) => r.space().clone(),
            TransitionRule::Affine(_) => StateSpace::Real,
            TransitionRule::Custom(r) => r.space().clone(),
        }
    }

    /// Transition on dynamically typed states.
    pub fn apply(&self, own: &[State], nbrs: &[&[State]], noise: f64) -> Result<State, CoreError> {
        fn syms(t: &[State]) -> Result<Vec<Sym>, CoreError> {
            t.iter()
                .map(|s| s.as_sym().ok_or_else(|| CoreError::KindMismatch("expected symbols".into())))
                .collect()
        }
        fn reals(t: &[State]) -> Result<Vec<f64>, CoreError> {
            t.iter()
                .map(|s| s.as_real().ok_or_else(|| CoreError::KindMismatch("expected reals".into())))
                .collect()
        }
        match self {
            TransitionRule::Affine(r) => {
                let o = reals(own)?;
                let ns = nbrs.iter().map(|n| reals(n)).collect::<Result<Vec<_>, _>>()?;
                let refs: Vec<&[f64]> = ns.iter().map(|v| v.as_slice()).collect();
                r.update(&o, &refs, noise).map(State::Real)
            }
            TransitionRule::Finite(_) | TransitionRule::Custom(_) => {
                let o = syms(own)?;
                let ns = nbrs.iter().map(|n| syms(n)).collect::<Result<Vec<_>, _>>()?;
                let refs: Vec<&[Sym]> = ns.iter().map(|v| v.as_slice()).collect();
                let out = match self {
                    TransitionRule::Finite(r) => r.update(&o, &refs, noise)?,
                    TransitionRule::Custom(r) => r.update(&o, &refs, noise)?,
                    TransitionRule::Affine(_) => unreachable!(),
                };
                Ok(State::Sym(out))
            }
        }
    }
}

/// `F^k(own, ⟨neighbors⟩, noise)` for a typed rule.
pub fn apply_transition<R: Rule>(
    rule: &R,
    own: &Trajectory<R::S>,
    neighbors: &TrajMultiset<R::S>,
    noise: f64,
) -> Result<R::S, CoreError> {
    let refs: Vec<&[R::S]> = neighbors.slices();
    rule.update(own.states(), &refs, noise)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryReport {
    pub probes: usize,
    pub pass: bool,
    /// Description of the first probe whose output changed under a permutation.
    pub witness: Option<String>,
}

fn audit<R, G>(rule: &R, probes: usize, rng: &mut impl Rng, mut gen: G) -> SymmetryReport
where
    R: Rule,
    G: FnMut(&mut dyn rand::RngCore) -> R::S,
{
    for p in 0..probes {
        let len = rng.random_range(1..=4usize);
        let deg = rng.random_range(2..=5usize);
        let own: Vec<R::S> = (0..len).map(|_| gen(rng)).collect();
        let nb: Vec<Vec<R::S>> = (0..deg).map(|_| (0..len).map(|_| gen(rng)).collect()).collect();
        let noise = match rule.noise_kind() {
            NoiseKind::Uniform => rng.random::<f64>(),
            NoiseKind::StdNormal => rng.sample(StandardNormal),
        };
        let refs: Vec<&[R::S]> = nb.iter().map(|v| v.as_slice()).collect();
        let base = rule.update(&own, &refs, noise);
        let mut order: Vec<usize> = (0..deg).collect();
        for trial in 0..6 {
            if trial == 0 {
                order.reverse();
            } else {
                order.shuffle(rng);
            }
            let perm: Vec<&[R::S]> = order.iter().map(|&i| nb[i].as_slice()).collect();
            let out = rule.update(&own, &perm, noise);
            let same = match (&base, &out) {
                (Ok(a), Ok(b)) => a.same_bits(b),
                (Err(a), Err(b)) => a == b,
                _ => false,
            };
            if !same {
                return SymmetryReport {
                    probes: p + 1,
                    pass: false,
                    witness: Some(format!(
                        "own={own:?} neighbors={nb:?} permutation={order:?} noise={noise}: {base:?} vs {out:?}"
                    )),
                };
            }
        }
    }
    SymmetryReport { probes, pass: true, witness: None }
}

/// Random audit of neighbor-permutation invariance.
pub fn verify_symmetry(
    rule: &TransitionRule,
    probes: usize,
    rng: &mut impl Rng,
) -> Result<SymmetryReport, CoreError> {
    if probes == 0 {
        return Err(CoreError::Precondition("probe count must be at least 1".into()));
    }
    Ok(match rule {
        TransitionRule::Finite(r) => {
            let n = r.alphabet_size() as u8;
            audit(r, probes, rng, |g| g.random_range(0..n))
        }
        TransitionRule::Custom(r) => {
            let n = r.space().size() as u8;
            audit(r, probes, rng, |g| g.random_range(0..n))
        }
        TransitionRule::Affine(r) => audit(r, probes, rng, |g| {
            let x: f64 = rand_distr::Distribution::sample(&StandardNormal, g);
            x
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels;
    use rand::rngs::SmallRng;
    use rand::SeedableRng;

    #[test]
    fn affine_example_value() {
        let r = AffineRule::new(1.0, 1.0, 0.0);
        let own = Trajectory::new(vec![2.0]).unwrap();
        let nb = TrajMultiset::from_unordered(vec![
            Trajectory::new(vec![3.0]).unwrap(),
            Trajectory::new(vec![5.0]).unwrap(),
        ])
        .unwrap();
        assert_eq!(apply_transition(&r, &own, &nb, 0.5).unwrap(), 10.5);
    }

    #[test]
    fn affine_b_zero_ignores_neighbors() {
        let r = AffineRule::new(0.7, 0.0, 0.3);
        let own = Trajectory::new(vec![1.0, 2.0]).unwrap();
        let n1 = TrajMultiset::from_unordered(vec![Trajectory::new(vec![0.0, 9.0]).unwrap()]).unwrap();
        let n2 = TrajMultiset::from_unordered(vec![
            Trajectory::new(vec![1.0, -4.0]).unwrap(),
            Trajectory::new(vec![2.0, 8.0]).unwrap(),
        ])
        .unwrap();
        let a = apply_transition(&r, &own, &n1, -0.2).unwrap();
        let b = apply_transition(&r, &own, &n2, -0.2).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn permutation_is_bit_identical() {
        let r = AffineRule::new(0.3, 0.1, 0.0);
        let own = [0.25];
        let a = [1e16];
        let b = [1.0];
        let c = [-1e16];
        let x = r.update(&own, &[&a, &b, &c], 0.1).unwrap();
        let y = r.update(&own, &[&c, &a, &b], 0.1).unwrap();
        assert_eq!(x.to_bits(), y.to_bits());
    }

    #[test]
    fn preconditions_reported() {
        let r = kernels::voter_flip(0.25);
        assert!(matches!(r.update(&[0, 1], &[&[0]], 0.3), Err(CoreError::LengthMismatch { .. })));
        assert!(matches!(r.update(&[crate::CEMETERY], &[], 0.3), Err(CoreError::OwnAtCemetery)));
        let bad = FiniteRule::from_fn("bad", StateSpace::binary(), true, |_, _, _, out| {
            out[0] = 0.5;
            out[1] = 0.4;
        })
        .unwrap();
        assert!(matches!(bad.update(&[0], &[], 0.3), Err(CoreError::NotNormalized { .. })));
    }

    #[test]
    fn majority_passes_audit() {
        let mut rng = SmallRng::seed_from_u64(3);
        let rule = TransitionRule::Finite(kernels::noisy_majority(0.1));
        let rep = verify_symmetry(&rule, 200, &mut rng).unwrap();
        assert!(rep.pass);
        let rule = TransitionRule::Affine(AffineRule::new(0.4, 0.2, 0.1));
        assert!(verify_symmetry(&rule, 200, &mut rng).unwrap().pass);
    }

    #[test]
    fn first_neighbor_rule_fails_audit() {
        let mut rng = SmallRng::seed_from_u64(4);
        let rule = TransitionRule::Custom(kernels::first_neighbor_copy(0.0));
        let rep = verify_symmetry(&rule, 200, &mut rng).unwrap();
        assert!(!rep.pass);
        assert!(rep.witness.is_some());
    }

    #[test]
    fn zero_probes_rejected() {
        let mut rng = SmallRng::seed_from_u64(4);
        let rule = TransitionRule::Finite(kernels::voter_flip(0.25));
        assert!(verify_symmetry(&rule, 0, &mut rng).is_err());
    }

    #[test]
    fn dynamic_apply_matches_typed() {
        let rule = TransitionRule::Finite(kernels::voter_flip(0.25));
        let own = [State::Sym(1)];
        let nb = [State::Sym(0)];
        let out = rule.apply(&own, &[&nb], 0.6).unwrap();
        let typed = kernels::voter_flip(0.25).update(&[1], &[&[0]], 0.6).unwrap();
        assert_eq!(out, State::Sym(typed));
        assert!(rule.apply(&[State::Real(0.0)], &[], 0.1).is_err());
    }
}
