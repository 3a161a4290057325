//! Local-field equation engines: an exact table recursion and interacting
//! ensembles on regular trees, ensembles on Galton-Watson and unimodular
//! Galton-Watson trees, and a Gaussian-affine sampler driven by the exact
//! covariance state.

mod error;
mod exact;
mod gaussian;
mod gw;
mod kernel;
mod regular;

pub use error::LfError;
pub use exact::{ExactGamma, NuTable};
pub use gaussian::GaussianLocalField;
pub use gw::{GwEnsemble, GwReplica, UgwEnsemble, UgwReplica};
pub use kernel::{Draw, KeyMissPolicy, TrajKernel};
pub use regular::{RegularEnsemble, StepStats};
