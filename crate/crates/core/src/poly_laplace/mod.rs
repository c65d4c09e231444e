//! Laplace-domain toolkit: real polynomials, rational functions, roots,
//! partial-fraction inversion to exponential polynomials, and a Talbot
//! contour oracle.

mod dd;
mod exp_poly;
mod inverse;
mod polynomial;
mod rational;
mod roots;
mod talbot;

pub use exp_poly::{deriv_exp_poly, eval_exp_poly, ExpPolynomial, ExpTerm};
pub use inverse::inverse_laplace;
pub use polynomial::{poly_arith, PolyOp, Polynomial};
pub use rational::{rational_arith, RationalFunction, RationalOp, CANCEL_TOL};
pub use roots::{roots, roots_flat, Root, CLUSTER_TOL};
pub use talbot::{talbot_inverse, talbot_with, TALBOT_NODES};
