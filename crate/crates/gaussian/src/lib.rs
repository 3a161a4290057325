//! Exact second-order analytics for the affine Gaussian system
//! `X_v(k+1) = a X_v(k) + b Σ_{u~v} X_u(k) + c + ξ_v(k+1)` on trees.
//!
//! * [`mean_sequence`]: the common mean `m_k` on the κ-regular tree.
//! * [`CovState`]: distance-indexed covariance blocks advanced one step at a
//!   time with an incrementally maintained inverse.
//! * [`distance_recurrence_oracle`]: an independent `O(k²)` table of
//!   equal-time covariances by graph distance.
//! * [`RegularishState`]: the same idea on a tree without global symmetry.
//! * [`GaussianJoint`] and [`counterexamples`]: conditional covariances on
//!   small linear systems.
//! * [`mc`]: brute-force Monte Carlo on truncated trees.

pub mod counterexamples;
mod cov;
mod error;
mod joint;
pub mod mc;
mod mean;
mod oracle;
mod regularish;
mod schur;

pub use cov::{AffineParams, CovState, StepRecord};
pub use error::GaussError;
pub use joint::{conditional_gaussian, GaussianJoint};
pub use mean::{mean_closed_form, mean_sequence};
pub use oracle::distance_recurrence_oracle;
pub use regularish::{RegularishState, Vertex};
pub use schur::{blocked_from_interleaved, interleaved_index, schur_update};

use nalgebra::DMatrix;

/// Dense text dump: one row per line, 17 significant digits, space separated.
pub fn dump_matrix(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}
