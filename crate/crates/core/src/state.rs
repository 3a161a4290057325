use std::cmp::Ordering;
use std::fmt::Debug;

use crate::CoreError;

/// Index of a live symbol in a finite alphabet.
pub type Sym = u8;

/// Reserved encoding of the cemetery state.
pub const CEMETERY: Sym = u8::MAX;

/// Scalar types a trajectory can hold.
pub trait StateValue: Copy + Debug + PartialEq + Send + Sync + 'static {
    fn canonical_cmp(&self, other: &Self) -> Ordering;
    fn is_cemetery(&self) -> bool;
    /// Bitwise identity (distinguishes `-0.0` from `0.0`).
    fn same_bits(&self, other: &Self) -> bool;
}

impl StateValue for u8 {
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
    fn is_cemetery(&self) -> bool {
        *self == CEMETERY
    }
    fn same_bits(&self, other: &Self) -> bool {
        self == other
    }
}

impl StateValue for f64 {
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
    fn is_cemetery(&self) -> bool {
        false
    }
    fn same_bits(&self, other: &Self) -> bool {
        self.to_bits() == other.to_bits()
    }
}

impl StateValue for State {
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (State::Sym(a), State::Sym(b)) => a.cmp(b),
            (State::Real(a), State::Real(b)) => a.total_cmp(b),
            (State::Sym(_), State::Real(_)) => Ordering::Less,
            (State::Real(_), State::Sym(_)) => Ordering::Greater,
        }
    }
    fn is_cemetery(&self) -> bool {
        *self == State::Sym(CEMETERY)
    }
    fn same_bits(&self, other: &Self) -> bool {
        match (self, other) {
            (State::Sym(a), State::Sym(b)) => a == b,
            (State::Real(a), State::Real(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateSpace {
    Finite {
        symbols: Vec<String>,
        cemetery: Option<String>,
    },
    Real,
}

impl StateSpace {
    pub fn finite<S: AsRef<str>>(symbols: &[S]) -> Result<Self, CoreError> {
        let symbols: Vec<String> = symbols.iter().map(|s| s.as_ref().to_string()).collect();
        if symbols.is_empty() {
            return Err(CoreError::InvalidStateSpace("empty alphabet".into()));
        }
        if symbols.len() >= CEMETERY as usize {
            return Err(CoreError::InvalidStateSpace(format!(
                "alphabet of {} symbols exceeds the supported 254",
                symbols.len()
            )));
        }
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() {
                return Err(CoreError::InvalidStateSpace("empty symbol name".into()));
            }
            if symbols[..i].contains(s) {
                return Err(CoreError::InvalidStateSpace(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(StateSpace::Finite { symbols, cemetery: None })
    }

    /// `{0, 1}`.
    pub fn binary() -> Self {
        StateSpace::finite(&["0", "1"]).expect("binary alphabet")
    }

    pub fn with_cemetery(self, name: &str) -> Result<Self, CoreError> {
        match self {
            StateSpace::Finite { symbols, .. } => {
                if symbols.iter().any(|s| s == name) {
                    return Err(CoreError::InvalidStateSpace(format!(
                        "cemetery {name:?} collides with a live symbol"
                    )));
                }
                Ok(StateSpace::Finite { symbols, cemetery: Some(name.to_string()) })
            }
            StateSpace::Real => Err(CoreError::InvalidStateSpace(
                "real state spaces carry no cemetery".into(),
            )),
        }
    }

    /// Number of live symbols; zero for the real line.
    pub fn size(&self) -> usize {
        match self {
            StateSpace::Finite { symbols, .. } => symbols.len(),
            StateSpace::Real => 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, StateSpace::Finite { .. })
    }

    pub fn has_cemetery(&self) -> bool {
        matches!(self, StateSpace::Finite { cemetery: Some(_), .. })
    }

    pub fn symbol_index(&self, name: &str) -> Option<Sym> {
        match self {
            StateSpace::Finite { symbols, cemetery } => {
                if cemetery.as_deref() == Some(name) {
                    return Some(CEMETERY);
                }
                symbols.iter().position(|s| s == name).map(|i| i as Sym)
            }
            StateSpace::Real => None,
        }
    }

    pub fn symbol_name(&self, s: Sym) -> String {
        match self {
            StateSpace::Finite { symbols, cemetery } => {
                if s == CEMETERY {
                    cemetery.clone().unwrap_or_else(|| "w".to_string())
                } else {
                    symbols.get(s as usize).cloned().unwrap_or_else(|| format!("?{s}"))
                }
            }
            StateSpace::Real => format!("{s}"),
        }
    }

    /// Canonical text form of a symbol trajectory: single-character alphabets
    /// are concatenated, longer names are joined with `.`.
    pub fn format_traj(&self, t: &[Sym]) -> String {
        let names: Vec<String> = t.iter().map(|&s| self.symbol_name(s)).collect();
        if names.iter().all(|n| n.chars().count() == 1) {
            names.concat()
        } else {
            names.join(".")
        }
    }
}

/// A single state of either kind, used by the dynamically typed API.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum State {
    Sym(Sym),
    Real(f64),
}

impl State {
    pub fn as_sym(&self) -> Option<Sym> {
        match self {
            State::Sym(s) => Some(*s),
            State::Real(_) => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            State::Real(x) => Some(*x),
            State::Sym(_) => None,
        }
    }
}

/// Per-vertex i.i.d. initial law.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialLaw {
    Finite(Vec<f64>),
    Gaussian { mean: f64, var: f64 },
}

impl InitialLaw {
    pub fn bernoulli(p1: f64) -> Self {
        InitialLaw::Finite(vec![1.0 - p1, p1])
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        match self {
            InitialLaw::Finite(p) => {
                if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(CoreError::Precondition("initial pmf has a negative entry".into()));
                }
                let s: f64 = p.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return Err(CoreError::Precondition(format!("initial pmf sums to {s}")));
                }
                Ok(())
            }
            InitialLaw::Gaussian { var, .. } => {
                if *var < 0.0 || !var.is_finite() {
                    return Err(CoreError::Precondition("negative initial variance".into()));
                }
                Ok(())
            }
        }
    }

    /// Inverse-CDF draw of a symbol from a uniform.
    pub fn sample_sym(pmf: &[f64], u: f64) -> Sym {
        sample_index(pmf, u) as Sym
    }
}

/// Inverse-CDF draw of an index from a uniform on `[0, 1)`.
pub fn sample_index(pmf: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u sits in the rounding gap at the top: return the last atom with mass
    pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_symbols_rejected() {
        assert!(StateSpace::finite(&["a", "a"]).is_err());
        assert!(StateSpace::finite::<&str>(&[]).is_err());
    }

    #[test]
    fn cemetery_must_be_distinct() {
        let s = StateSpace::binary();
        assert!(s.clone().with_cemetery("0").is_err());
        let s = s.with_cemetery("w").unwrap();
        assert_eq!(s.symbol_index("w"), Some(CEMETERY));
        assert_eq!(s.symbol_name(CEMETERY), "w");
        assert_eq!(s.size(), 2);
    }

    #[test]
    fn inverse_cdf_boundaries() {
        let p = [0.25, 0.0, 0.75];
        assert_eq!(InitialLaw::sample_sym(&p, 0.0), 0);
        assert_eq!(InitialLaw::sample_sym(&p, 0.2499), 0);
        assert_eq!(InitialLaw::sample_sym(&p, 0.25), 2);
        assert_eq!(InitialLaw::sample_sym(&p, 0.999_999_999), 2);
    }

    #[test]
    fn multi_char_names_joined() {
        let s = StateSpace::finite(&["up", "down"]).unwrap();
        assert_eq!(s.format_traj(&[0, 1]), "up.down");
        assert_eq!(StateSpace::binary().format_traj(&[1, 0, 1]), "101");
    }
}
