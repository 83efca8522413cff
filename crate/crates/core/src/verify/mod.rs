//! Experiment harness: decay experiments, inequality checks and exponent fits.

mod checks;
mod config;
mod experiments;
mod report;
mod selftest;
mod testfn;

pub use checks::*;
pub use config::*;
pub use experiments::*;
pub use report::*;
pub use selftest::*;
pub use testfn::*;
