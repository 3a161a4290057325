//! Rooted trees with Ulam-Harris-Neveu labels, Galton-Watson samplers,
//! offspring laws, random graph generators and boundary operators.

mod error;
mod graph;
mod offspring;
mod random;
mod tree;

pub use error::GraphError;
pub use graph::{boundary_sets, FiniteGraph};
pub use offspring::{unimodular_offspring, OffspringDistribution};
pub use random::{configuration_model, erdos_renyi, random_regular};
pub use tree::{sample_gw_tree, truncated_regular_tree, RootedTree, UhnLabel};
