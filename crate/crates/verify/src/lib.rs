//! Property harnesses for the structural results on synchronous PCA:
//! second-order Markov random fields, boundary consistency, exchangeability,
//! mass transport, rerooting, empirical-measure convergence, plus the
//! acceptance matrix that ties every engine to its oracle.

pub mod acceptance;
mod consistency;
mod convergence;
mod counterexamples;
mod error;
mod exchange;
pub mod functionals;
mod mrf;
mod rerooting;
pub mod stats;
mod transport;

pub use consistency::{consistency_check, path7_vs_path5, ConsistencyReport, Subgraph};
pub use convergence::{convergence_experiment, limit_law, ConvergenceReport, ConvergenceRow, GraphFamily};
pub use counterexamples::{gaussian_counterexample_suite, CounterexampleRow, CounterexampleSuite};
pub use error::VerifyError;
pub use exchange::{exchangeability_check, ChildSummary, ExchangeReport};
pub use mrf::{conditional_independence_test, first_order_control, matrix_kernels, mrf_matrix, IndependenceReport, MrfCase, MrfMatrixReport};
pub use pca_engine::tv_distance;
pub use rerooting::{rerooting_check, RerootAtom, RerootReport};
pub use transport::{mass_transport_check, tree_distance, TransportReport};
