//! Simultaneous homogeneity testing for `k` pairs of independent multinomial
//! samples.
//!
//! The central statistic is the aggregated U-statistic
//!
//! ```text
//! T_U = (1/√k) Σ_r T_{U_r}
//! ```
//!
//! where each `T_{U_r}` is an unbiased estimator of `‖π_{1r} − π_{2r}‖²`.
//! Under the null of homogeneity in every group `T_U` has mean zero, and the
//! test rejects when `T_U / √var̂_0(T_U) ≥ z_{1−α}`. Seven estimators of the
//! null variance are provided (see [`variance::Estimator`]), together with
//! the classical chi-square / likelihood-ratio baselines, per-group
//! bootstrap tests with multiple-testing adjustment, and a seeded parallel
//! Monte Carlo harness for level and power studies.
//!
//! ```
//! use mhomog::counts::{CountVector, GroupPair, GroupedDataset};
//! use mhomog::decision::run_global_test;
//! use mhomog::variance::Estimator;
//!
//! let pair = |id: &str, a: Vec<u64>, b: Vec<u64>| {
//!     GroupPair::new(id, CountVector::new(a).unwrap(), CountVector::new(b).unwrap()).unwrap()
//! };
//! let ds = GroupedDataset::new(vec![
//!     pair("a", vec![4, 1, 0], vec![1, 2, 2]),
//!     pair("b", vec![2, 2, 1], vec![3, 1, 1]),
//! ])
//! .unwrap();
//! let report = run_global_test(&ds, Estimator::Test1, 0.05, None).unwrap();
//! assert!(report.p_value >= 0.0 && report.p_value <= 1.0);
//! ```

pub mod classical;
pub mod cli;
pub mod counts;
pub mod decision;
mod error;
pub mod rng;
pub mod sampling;
pub mod sim;
pub mod ustat;
pub mod variance;

pub use error::{Error, Result};

/// Crate version, embedded in every JSON report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `git describe` of the build, or `"unknown"` outside a checkout.
pub const BUILD_DESCRIBE: &str = env!("MHOMOG_GIT_DESCRIBE");
