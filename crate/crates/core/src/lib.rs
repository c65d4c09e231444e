//! Memory effects in classical two-site semi-Markov processes: waiting-time
//! transforms, the parity function `q(t)`, the Kolmogorov-distance measure
//! `N_C`, time-local generators and P-divisibility checks.

// NaN must fail range checks, so negated comparisons are deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod counterexample;
pub mod error;
pub mod measure;
pub mod montecarlo;
pub mod parallel;
pub mod poly_laplace;
pub mod quadrature;
pub mod semimarkov;
pub mod stochastic;
pub mod waiting_time;

pub use error::{Error, Result};
