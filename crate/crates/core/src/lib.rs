//! Shared building blocks for synchronous probabilistic cellular automata:
//! state spaces, trajectories, unordered trajectory multisets, transition
//! rules and deterministic noise streams.
//!
//! Finite alphabets are encoded as small integers ([`Sym`]); the cemetery
//! symbol is the reserved value [`CEMETERY`] and is never produced by a rule.

mod error;
pub mod kernels;
mod noise;
mod rule;
pub mod rulefile;
mod state;
mod trajectory;

pub use error::CoreError;
pub use noise::{domains, mix64, NoiseKind, NoiseSource, StreamId};
pub use rule::{
    apply_transition, verify_symmetry, AffineRule, CustomFn, CustomRule, FiniteRule, KernelFn,
    Rule, SymmetryReport, TransitionRule,
};
pub use rulefile::{parse_rule_file, RuleTable};
pub use state::{sample_index, InitialLaw, State, StateSpace, StateValue, Sym, CEMETERY};
pub use trajectory::{TrajMultiset, Trajectory};
