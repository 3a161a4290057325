//! Synchronous dynamics on finite graphs and the brute-force references
//! built on them: exact law propagation for tiny systems, exact
//! neighborhood laws on truncated regular trees, and Monte Carlo on
//! truncated (possibly random) trees.

mod error;
mod exact;
pub mod io;
mod measure;
mod oracle;
mod system;
mod treelaw;

pub use error::EngineError;
pub use exact::{propagate_exact_law, TrajectoryLaw, DEFAULT_BUDGET};
pub use measure::{neighborhood_atom, sampling_tv_envelope, traj_atom, tv_distance, EmpiricalMeasure, Projection};
pub use oracle::{simulate_on_tree, truncated_tree_oracle, TreeFamily};
pub use system::{simulate, step_synchronous, RuleMap, Simulable, SystemState};
pub use treelaw::{exact_gw_tree_law, exact_regular_tree_law};
