use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{GeneratorMatrix, MapFamily, STOCHASTIC_TOL};
use crate::error::{Error, Result};
use crate::parallel;

/// Largest condition number accepted when inverting `Λ(t,0)`.
pub const MAX_CONDITION: f64 = 1e12;

/// Relative step used by [`generator_from_maps`] callers that have no better
/// idea: `h = DIFF_STEP · fam.time_scale()`.
pub const DIFF_STEP: f64 = 1e-5;

/// Rounding amplification allowed per unit condition number when testing
/// `Λ(t,0) Λ(s,0)⁻¹`.
const ROUNDING_GROWTH: f64 = 64.0;

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

fn inverse(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if condition_number(m) > MAX_CONDITION {
        return Err(Error::MapNotInvertible { t });
    }
    m.clone().try_inverse().ok_or(Error::MapNotInvertible { t })
}

/// `dΛ/dt` at `t` with step `h`: second-order central (or one-sided, near the
/// domain ends) differences, Richardson-extrapolated once. Also returns the
/// size of the extrapolation correction as a residual estimate.
fn derivative<F: MapFamily + ?Sized>(fam: &F, t: f64, h: f64) -> Result<(DMatrix<f64>, f64)> {
    let (lo, hi) = fam.domain();
    let at = |x: f64| fam.map_at(x).map(|m| m.matrix().clone());
    let diff = |h: f64| -> Result<DMatrix<f64>> {
        if t - h >= lo && t + h <= hi {
            Ok((at(t + h)? - at(t - h)?) / (2.0 * h))
        } else if t + 2.0 * h <= hi {
            Ok((at(t)? * -3.0 + at(t + h)? * 4.0 - at(t + 2.0 * h)?) / (2.0 * h))
        } else if t - 2.0 * h >= lo {
            Ok((at(t)? * 3.0 - at(t - h)? * 4.0 + at(t - 2.0 * h)?) / (2.0 * h))
        } else {
            Err(Error::InvalidArgument(format!(
                "step {h} too large for domain [{lo}, {hi}]"
            )))
        }
    };
    let coarse = diff(h)?;
    let fine = diff(0.5 * h)?;
    let d = (&fine * 4.0 - &coarse) / 3.0;
    let residual = (&d - &fine).amax();
    Ok((d, residual))
}

/// Generator estimate together with its differentiation residual.
#[derive(Debug, Clone)]
pub struct GeneratorEstimate {
    pub generator: GeneratorMatrix,
    /// Magnitude of the Richardson correction, a proxy for the truncation error.
    pub residual: f64,
    /// Largest absolute column sum of the estimate.
    pub column_sum_error: f64,
}

/// `L(t) = (dΛ(t,0)/dt) Λ(t,0)⁻¹` by numerical differentiation.
pub fn generator_from_maps<F: MapFamily + ?Sized>(fam: &F, t: f64, h: f64) -> Result<GeneratorMatrix> {
    estimate_generator(fam, t, h).map(|e| e.generator)
}

pub fn estimate_generator<F: MapFamily + ?Sized>(fam: &F, t: f64, h: f64) -> Result<GeneratorEstimate> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let (lo, hi) = fam.domain();
    if t < lo || t > hi {
        return Err(Error::InvalidArgument(format!("t = {t} outside [{lo}, {hi}]")));
    }
    let lam = fam.map_at(t)?;
    let inv = inverse(lam.matrix(), t)?;
    let (d, residual) = derivative(fam, t, h)?;
    let l = d * inv;
    let column_sum_error = l.column_iter().map(|c| c.sum().abs()).fold(0.0, f64::max);
    if column_sum_error > 1e-6 {
        log::warn!("generator at t = {t} has column sums up to {column_sum_error:e}");
    }
    Ok(GeneratorEstimate {
        generator: GeneratorMatrix::from_matrix(l),
        residual,
        column_sum_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    NegativeOffDiagonal,
    PositiveDiagonal,
    ColumnSum,
}

/// First entry (or column, for sum violations) breaking the conditions.
/// Indices are zero-based; `Display` prints them one-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub row: usize,
    pub col: usize,
    pub value: f64,
    pub condition: Condition,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.condition {
            Condition::NegativeOffDiagonal => {
                write!(
                    f,
                    "negative off-diagonal (L){}{} = {}",
                    self.row + 1,
                    self.col + 1,
                    self.value
                )
            }
            Condition::PositiveDiagonal => {
                write!(
                    f,
                    "positive diagonal (L){}{} = {}",
                    self.row + 1,
                    self.col + 1,
                    self.value
                )
            }
            Condition::ColumnSum => write!(f, "column {} sums to {}", self.col + 1, self.value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub satisfied: bool,
    pub witness: Option<Witness>,
}

/// Kolmogorov conditions: off-diagonals `≥ -tol`, diagonals `≤ tol`, column
/// sums within `tol` of zero. Scans column by column.
pub fn kolmogorov_conditions(l: &GeneratorMatrix, tol: f64) -> ConditionReport {
    let m = l.matrix();
    for k in 0..m.ncols() {
        for j in 0..m.nrows() {
            let v = m[(j, k)];
            let condition = if j != k && !(v >= -tol) {
                Some(Condition::NegativeOffDiagonal)
            } else if j == k && !(v <= tol) {
                Some(Condition::PositiveDiagonal)
            } else {
                None
            };
            if let Some(condition) = condition {
                return ConditionReport {
                    satisfied: false,
                    witness: Some(Witness {
                        row: j,
                        col: k,
                        value: v,
                        condition,
                    }),
                };
            }
        }
        let s = m.column(k).sum();
        if !(s.abs() <= tol) {
            return ConditionReport {
                satisfied: false,
                witness: Some(Witness {
                    row: k,
                    col: k,
                    value: s,
                    condition: Condition::ColumnSum,
                }),
            };
        }
    }
    ConditionReport {
        satisfied: true,
        witness: None,
    }
}

/// Transition rates `W_jk = L_jk` (`j ≠ k`), zero diagonal.
pub fn w_rates(l: &GeneratorMatrix) -> Result<DMatrix<f64>> {
    let scale = l.matrix().amax().max(1.0);
    l.check_conservative(1e-6 * scale)?;
    let mut w = l.matrix().clone();
    w.fill_diagonal(0.0);
    Ok(w)
}

/// Rebuild `L` from rates: `L_jk = W_jk - δ_jk Σ_l W_lk`.
pub fn generator_from_rates(w: &DMatrix<f64>) -> GeneratorMatrix {
    let mut l = w.clone();
    l.fill_diagonal(0.0);
    for k in 0..l.ncols() {
        let out: f64 = l.column(k).sum();
        l[(k, k)] = -out;
    }
    GeneratorMatrix::from_matrix(l)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivisibilityViolation {
    pub s: f64,
    pub t: f64,
    /// Most negative entry of `Λ(t,s)`, zero-based.
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivisibilityReport {
    pub pairs_checked: usize,
    /// Largest spacing between adjacent grid points.
    pub grid_resolution: f64,
    pub violations: Vec<DivisibilityViolation>,
    /// Grid points `s` where `Λ(s,0)` was too ill-conditioned to invert.
    pub indeterminate: Vec<f64>,
}

impl DivisibilityReport {
    pub fn is_divisible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Test `Λ(t,s) = Λ(t,0) Λ(s,0)⁻¹` for stochasticity on every adjacent grid
/// pair. Entries count as negative only beyond the rounding error of the
/// inversion; pairs whose error cannot be bounded below the tolerance are
/// reported as indeterminate.
pub fn p_divisibility_check<F: MapFamily + ?Sized>(fam: &F, grid: &[f64]) -> Result<DivisibilityReport> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    let maps: Vec<DMatrix<f64>> = parallel::install(|| {
        grid.par_iter()
            .map(|&t| fam.map_at(t).map(|m| m.matrix().clone()))
            .collect::<Result<_>>()
    })?;
    let outcomes: Vec<Option<std::result::Result<Option<DivisibilityViolation>, f64>>> = parallel::install(|| {
        (0..grid.len().saturating_sub(1))
            .into_par_iter()
            .map(|i| {
                let (s, t) = (grid[i], grid[i + 1]);
                let inv = match inverse(&maps[i], s) {
                    Ok(inv) => inv,
                    Err(_) => return Some(Err(s)),
                };
                let m = &maps[i + 1] * inv;
                // inverting Λ(s,0) amplifies rounding by its condition number;
                // column sums are exactly one in exact arithmetic, so their
                // drift measures that error directly
                let slack = STOCHASTIC_TOL.max(ROUNDING_GROWTH * f64::EPSILON * condition_number(&maps[i]));
                let drift = m.row_sum().iter().map(|c| (c - 1.0).abs()).fold(0.0, f64::max);
                if drift > slack {
                    return Some(Err(s));
                }
                let (idx, value) =
                    m.iter().copied().enumerate().fold(
                        (0, f64::INFINITY),
                        |acc, (i, v)| {
                            if v < acc.1 {
                                (i, v)
                            } else {
                                acc
                            }
                        },
                    );
                if value >= -slack {
                    return Some(Ok(None));
                }
                let n = m.nrows();
                Some(Ok(Some(DivisibilityViolation {
                    s,
                    t,
                    row: idx % n,
                    col: idx / n,
                    value,
                })))
            })
            .collect()
    });
    let mut report = DivisibilityReport {
        pairs_checked: outcomes.len(),
        grid_resolution: grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max),
        violations: Vec::new(),
        indeterminate: Vec::new(),
    };
    for o in outcomes.into_iter().flatten() {
        match o {
            Ok(Some(v)) => report.violations.push(v),
            Ok(None) => {}
            Err(s) => report.indeterminate.push(s),
        }
    }
    Ok(report)
}
