//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `PCA_ACCEPTANCE_QUICK=1` skips the large Monte Carlo criteria.

use pca_verify::acceptance::{run_all, Mode, Status};

fn main() {
    let mode = match std::env::var("PCA_ACCEPTANCE_QUICK").as_deref() {
        Ok("1") => Mode::Quick,
        _ => Mode::Full,
    };
    let results = run_all(mode, |r| println!("{}", r.line()));
    let failed = results.iter().filter(|r| r.status == Status::Fail).count();
    let passed = results.iter().filter(|r| r.status == Status::Pass).count();
    println!("acceptance: {passed} passed, {failed} failed, {} skipped", results.len() - passed - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
