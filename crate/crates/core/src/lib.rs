//! Weighted sum-rate maximization for a cognitive-radio MIMO broadcast
//! channel under a sum-power budget and interference limits at primary
//! users.
//!
//! The broadcast problem is solved through a dual multiple-access channel
//! whose noise covariance carries the auxiliary multipliers:
//!
//! * [`mac`]: the dual-MAC objective and the water-level bisection solver.
//! * [`bc`]: mapping MAC covariances back to broadcast covariances.
//! * [`sipa`]: the outer subgradient loop over the multipliers.
//! * [`scenario`]: problem instances, generation and JSON files.
//! * [`experiment`]: the reproduction harness behind the `crmimo` binary.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too, and
// the dense kernels read better with explicit index loops.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bc;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod mac;
pub mod pool;
pub mod rng;
pub mod scenario;
pub mod sipa;
pub mod units;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, EigenDecomposition, HermitianMatrix, C64};
pub use scenario::{Scenario, UserOrdering};

/// Version string recorded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
