//! The memory measure `N_C`: total growth of the Kolmogorov distance,
//! maximized over initial pairs.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel;
use crate::quadrature::adaptive_simpson;
use crate::semimarkov::{critical_structure, q_time_domain, QFunction};
use crate::stochastic::{l1_half, MapFamily, ProbabilityVector};
use crate::waiting_time::WaitingTimeSpec;

/// Contributions at or below this are treated as noise and dropped.
pub const CONTRIBUTION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exact sum over the increase intervals of `|q|`.
    IntervalSum,
    /// Positive increments along a grid, maximized over simplex vertex pairs.
    /// A lower bound on the full maximization for more than two states.
    VertexPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonMarkovReport {
    pub n_c: f64,
    pub increase_intervals: Vec<(f64, f64)>,
    pub contributions: Vec<f64>,
    pub horizon: f64,
    /// Bound on growth beyond the horizon; `None` for grid-based estimates.
    pub tail_bound: Option<f64>,
    pub maximizing_pair: (ProbabilityVector, ProbabilityVector),
    pub method: Method,
    pub lower_bound: bool,
}

/// `N_C` of the two-site semi-Markov process with waiting time `spec`.
pub fn n_c_twosite(spec: &WaitingTimeSpec, tail_tol: f64) -> Result<NonMarkovReport> {
    n_c_from_q(&q_time_domain(spec)?, tail_tol)
}

pub fn n_c_from_q(qf: &QFunction, tail_tol: f64) -> Result<NonMarkovReport> {
    let cs = critical_structure(qf, tail_tol)?;
    let mut intervals = Vec::new();
    let mut contributions = Vec::new();
    for &(a, b) in &cs.increase_intervals {
        let c = qf.q(b).abs() - qf.q(a).abs();
        if c > CONTRIBUTION_FLOOR {
            intervals.push((a, b));
            contributions.push(c);
        }
    }
    Ok(NonMarkovReport {
        n_c: contributions.iter().fold(0.0, |a, c| a + c),
        increase_intervals: intervals,
        contributions,
        horizon: cs.horizon,
        tail_bound: Some(cs.tail_bound),
        maximizing_pair: (ProbabilityVector::basis(2, 0), ProbabilityVector::basis(2, 1)),
        method: Method::IntervalSum,
        lower_bound: false,
    })
}

/// `∫_0^T max(0, d|q|/dt) dt` by adaptive quadrature, with `T` the horizon
/// for `tail_tol`. Independent of the zero and extremum search.
pub fn n_c_quadrature(qf: &QFunction, tail_tol: f64, tol: f64) -> Result<f64> {
    let cs = critical_structure(qf, tail_tol)?;
    if cs.horizon == 0.0 {
        return Ok(0.0);
    }
    let chunk = 64.0 * cs.grid_step;
    let n = (cs.horizon / chunk).ceil() as usize;
    let f = |t: f64| qf.d_abs_q(t).max(0.0);
    let parts: Vec<Result<f64>> = parallel::install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let a = i as f64 * chunk;
                let b = ((i + 1) as f64 * chunk).min(cs.horizon);
                adaptive_simpson(f, a, b, (tol * (b - a) / cs.horizon).max(1e-17))
            })
            .collect()
    });
    parts.into_iter().sum()
}

/// Distance trajectory of a vertex pair along `grid`.
fn vertex_distances(maps: &[DMatrix<f64>], j: usize, k: usize) -> Vec<f64> {
    maps.iter()
        .map(|m| l1_half(m.column(j).as_slice(), m.column(k).as_slice()))
        .collect()
}

/// Vertex-pair evaluation on a map family: for every pair of simplex
/// vertices, sum the positive increments of the distance along `grid`, then
/// take the largest. Exact for two states; a lower bound otherwise.
pub fn n_c_general<F: MapFamily + ?Sized>(fam: &F, grid: &[f64]) -> Result<NonMarkovReport> {
    check_grid(grid)?;
    if fam.dim() < 2 {
        return Err(Error::InvalidArgument("need at least two states".into()));
    }
    let maps: Vec<DMatrix<f64>> = parallel::install(|| {
        grid.par_iter()
            .map(|&t| fam.map_at(t).map(|m| m.matrix().clone()))
            .collect::<Result<_>>()
    })?;
    n_c_vertex_pairs(&maps, grid)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "grid must be strictly increasing with at least 2 points".into(),
        ));
    }
    Ok(())
}

/// The vertex-pair evaluation behind [`n_c_general`], on maps already
/// tabulated at `grid`. The maps need not be stochastic, which allows
/// measuring linear dynamics that leave the simplex.
pub fn n_c_vertex_pairs(maps: &[DMatrix<f64>], grid: &[f64]) -> Result<NonMarkovReport> {
    check_grid(grid)?;
    if maps.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            left: maps.len(),
            right: grid.len(),
        });
    }
    let n = maps[0].ncols();
    if n < 2 || maps.iter().any(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::InvalidArgument(
            "maps must be square, of equal size and at least 2x2".into(),
        ));
    }
    // (total, j, k, intervals, contributions) for the best vertex pair so far
    type Candidate = (f64, usize, usize, Vec<(f64, f64)>, Vec<f64>);
    let mut best: Option<Candidate> = None;
    for j in 0..n {
        for k in j + 1..n {
            let d = vertex_distances(maps, j, k);
            let mut intervals: Vec<(f64, f64)> = Vec::new();
            let mut contributions: Vec<f64> = Vec::new();
            let mut run: Option<(usize, f64)> = None;
            for i in 1..=grid.len() {
                let up = i < grid.len() && d[i] - d[i - 1] > 0.0;
                match (up, run) {
                    (true, None) => run = Some((i - 1, d[i] - d[i - 1])),
                    (true, Some((s, acc))) => run = Some((s, acc + d[i] - d[i - 1])),
                    (false, Some((s, acc))) => {
                        if acc > CONTRIBUTION_FLOOR {
                            intervals.push((grid[s], grid[i - 1]));
                            contributions.push(acc);
                        }
                        run = None;
                    }
                    (false, None) => {}
                }
            }
            let total: f64 = contributions.iter().fold(0.0, |a, c| a + c);
            if best.as_ref().is_none_or(|b| total > b.0) {
                best = Some((total, j, k, intervals, contributions));
            }
        }
    }
    let (n_c, j, k, intervals, contributions) = best.expect("at least one pair");
    Ok(NonMarkovReport {
        n_c,
        increase_intervals: intervals,
        contributions,
        horizon: grid[grid.len() - 1],
        tail_bound: None,
        maximizing_pair: (ProbabilityVector::basis(n, j), ProbabilityVector::basis(n, k)),
        method: Method::VertexPairs,
        lower_bound: n > 2,
    })
}

/// Rate of change of the Kolmogorov distance between `Λ(t)p1` and `Λ(t)p2`,
/// by central differences (one-sided at the domain ends).
pub fn sigma<F: MapFamily + ?Sized>(
    fam: &F,
    pair: (&ProbabilityVector, &ProbabilityVector),
    t: f64,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let (p1, p2) = pair;
    if p1.dim() != fam.dim() || p2.dim() != fam.dim() {
        return Err(Error::DimensionMismatch {
            left: p1.dim().max(p2.dim()),
            right: fam.dim(),
        });
    }
    let dk = |s: f64| -> Result<f64> {
        let m = fam.map_at(s)?;
        let a = m.matrix() * nalgebra::DVector::from_column_slice(p1.as_slice());
        let b = m.matrix() * nalgebra::DVector::from_column_slice(p2.as_slice());
        Ok(l1_half(a.as_slice(), b.as_slice()))
    };
    let (lo, hi) = fam.domain();
    if t - h >= lo && t + h <= hi {
        Ok((dk(t + h)? - dk(t - h)?) / (2.0 * h))
    } else if t + h <= hi {
        Ok((dk(t + h)? - dk(t)?) / h)
    } else if t - h >= lo {
        Ok((dk(t)? - dk(t - h)?) / h)
    } else {
        Err(Error::InvalidArgument(format!(
            "step {h} too large for domain [{lo}, {hi}]"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub n_c: f64,
    pub tail_bound: f64,
    pub horizon: f64,
}

fn sweep(specs: Vec<(f64, WaitingTimeSpec)>, tail_tol: f64) -> Result<Vec<SweepRow>> {
    let rows: Vec<Result<SweepRow>> = parallel::install(|| {
        specs
            .par_iter()
            .map(|(param, spec)| {
                let r = n_c_twosite(spec, tail_tol)?;
                Ok(SweepRow {
                    param: *param,
                    n_c: r.n_c,
                    tail_bound: r.tail_bound.unwrap_or(0.0),
                    horizon: r.horizon,
                })
            })
            .collect()
    });
    rows.into_iter().collect()
}

/// `N_C` for special Erlang waiting times of order `1..=n_max`.
pub fn erlang_sweep(n_max: u32, rate: f64, tail_tol: f64) -> Result<Vec<SweepRow>> {
    if n_max < 1 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let specs = (1..=n_max)
        .map(|n| (n as f64, WaitingTimeSpec::erlang(n, rate)))
        .collect();
    sweep(specs, tail_tol)
}

/// `N_C` for the self-convolution of the mixture
/// `μ·exp(λ₁) + (1-μ)·exp(ratio·λ₁)`, one row per `μ`.
pub fn mixture_sweep(mus: &[f64], rate1: f64, ratio: f64, tail_tol: f64) -> Result<Vec<SweepRow>> {
    if let Some(mu) = mus.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return Err(Error::InvalidArgument(format!("mu must lie in [0, 1], got {mu}")));
    }
    if !(ratio > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rate ratio must be positive, got {ratio}"
        )));
    }
    let specs = mus
        .iter()
        .map(|&mu| (mu, WaitingTimeSpec::mixture_pair(mu, rate1, ratio * rate1)))
        .collect();
    sweep(specs, tail_tol)
}
