//! Probability vectors, column-stochastic matrices and time-local generators.
//!
//! Convention: probability vectors are columns and `p(t) = Λ(t,0) p(0)`, so a
//! stochastic matrix has nonnegative entries and unit *column* sums, and a
//! generator has zero column sums.

mod family;
mod generator;
mod ode;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use family::{ConstantFamily, MapFamily, TabulatedFamily};
pub use generator::{
    estimate_generator, generator_from_maps, generator_from_rates, kolmogorov_conditions, p_divisibility_check,
    w_rates, Condition, ConditionReport, DivisibilityReport, DivisibilityViolation, GeneratorEstimate, Witness,
    DIFF_STEP, MAX_CONDITION,
};
pub use ode::{propagate, propagate_raw, OdeOptions, Trajectory};

/// Uniform tolerance for stochasticity checks.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Tolerance on probability-vector normalization.
pub const PROBABILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::NotProbability("empty vector".into()));
        }
        if let Some((k, v)) = p.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NotProbability(format!("entry {k} is {v}")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::NotProbability(format!("entries sum to {s}")));
        }
        Ok(ProbabilityVector(p))
    }

    /// Accept a numerically propagated state: entries in `[-tol, 0)` are
    /// clamped to zero and the vector is renormalized when the sum drifts by
    /// at most `tol`.
    pub fn from_numerical(mut p: Vec<f64>, tol: f64) -> Result<Self> {
        for (k, v) in p.iter_mut().enumerate() {
            if *v < 0.0 {
                if *v < -tol {
                    return Err(Error::NotProbability(format!("entry {k} is {v}")));
                }
                log::debug!("clamping entry {k} = {v} to 0");
                *v = 0.0;
            }
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > tol.max(PROBABILITY_TOL) {
            return Err(Error::NotProbability(format!("entries sum to {s}")));
        }
        p.iter_mut().for_each(|v| *v /= s);
        Ok(ProbabilityVector(p))
    }

    /// Vertex `e_k` of the simplex.
    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        ProbabilityVector(v)
    }

    pub fn uniform(n: usize) -> Self {
        ProbabilityVector(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Column-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(DMatrix<f64>);

impl StochasticMatrix {
    pub fn new(mut m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                left: m.nrows(),
                right: m.ncols(),
            });
        }
        if let Some(msg) = stochastic_violation(&m, STOCHASTIC_TOL) {
            return Err(Error::NotStochastic(msg));
        }
        for v in m.iter_mut() {
            if *v < 0.0 {
                log::debug!("clamping stochastic entry {v} to 0");
                *v = 0.0;
            }
        }
        Ok(StochasticMatrix(m))
    }

    pub fn identity(n: usize) -> Self {
        StochasticMatrix(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// First violated stochasticity condition, if any.
pub fn stochastic_violation(m: &DMatrix<f64>, tol: f64) -> Option<String> {
    for k in 0..m.ncols() {
        for j in 0..m.nrows() {
            let v = m[(j, k)];
            if !v.is_finite() || v < -tol {
                return Some(format!("entry ({j},{k}) = {v}"));
            }
        }
        let s: f64 = m.column(k).sum();
        if (s - 1.0).abs() > tol {
            return Some(format!("column {k} sums to {s}"));
        }
    }
    None
}

pub fn is_stochastic(m: &DMatrix<f64>, tol: f64) -> bool {
    m.nrows() == m.ncols() && stochastic_violation(m, tol).is_none()
}

/// Time-local generator `L(t)` with zero column sums.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix(DMatrix<f64>);

/// Column-sum tolerance for generators.
pub const GENERATOR_TOL: f64 = 1e-9;

impl GeneratorMatrix {
    /// Wrap a matrix without checking conservation.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        GeneratorMatrix(m)
    }

    /// Wrap a matrix, requiring column sums within `tol` of zero.
    pub fn conservative(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        let g = GeneratorMatrix(m);
        g.check_conservative(tol)?;
        Ok(g)
    }

    pub fn zero(n: usize) -> Self {
        GeneratorMatrix(DMatrix::zeros(n, n))
    }

    /// Two-site generator `[[-a, b], [a, -b]]` for `dp₁/dt = b p₂ - a p₁`.
    pub fn two_site(a: f64, b: f64) -> Self {
        GeneratorMatrix(DMatrix::from_row_slice(2, 2, &[-a, b, a, -b]))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn check_conservative(&self, tol: f64) -> Result<()> {
        for k in 0..self.0.ncols() {
            let s: f64 = self.0.column(k).sum();
            if !(s.abs() <= tol) {
                return Err(Error::NonConservative { column: k, sum: s });
            }
        }
        Ok(())
    }
}

/// Half the L1 distance between two distributions.
pub fn kolmogorov_distance(p1: &ProbabilityVector, p2: &ProbabilityVector) -> Result<f64> {
    if p1.dim() != p2.dim() {
        return Err(Error::DimensionMismatch {
            left: p1.dim(),
            right: p2.dim(),
        });
    }
    Ok(l1_half(p1.as_slice(), p2.as_slice()))
}

pub(crate) fn l1_half(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// `Λ p`.
pub fn apply(m: &StochasticMatrix, p: &ProbabilityVector) -> Result<ProbabilityVector> {
    if m.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            left: m.dim(),
            right: p.dim(),
        });
    }
    let out = m.matrix() * DVector::from_column_slice(p.as_slice());
    ProbabilityVector::from_numerical(out.iter().copied().collect(), STOCHASTIC_TOL)
}
