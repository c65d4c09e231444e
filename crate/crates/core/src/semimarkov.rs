//! Two-site semi-Markov process with a site-independent waiting time.
//!
//! With `f̂(u)` the waiting-time transform, the even-minus-odd jump
//! probability has transform `q̂(u) = (1 - f̂)/(u (1 + f̂))`, and the dynamical
//! map is `Λ(t,0) = ½ [[1+q, 1-q], [1-q, 1+q]]`.

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::poly_laplace::{deriv_exp_poly, inverse_laplace, ExpPolynomial, RationalFunction};
use crate::stochastic::{MapFamily, StochasticMatrix};
use crate::waiting_time::{laplace, WaitingTimeSpec};

/// `|q|` below this makes `γ` a pole.
pub const POLE_TOL: f64 = 1e-12;

/// Default tail tolerance for horizon selection.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// Grid samples per period of the fastest oscillation.
pub const SAMPLES_PER_PERIOD: f64 = 20.0;

/// Largest zero/extremum scan grid before giving up as too stiff.
pub const MAX_SCAN_POINTS: usize = 50_000_000;

/// Transform of `q(t)`, reduced.
pub fn q_hat(spec: &WaitingTimeSpec) -> Result<RationalFunction> {
    let f = laplace(spec)?;
    let (p, q) = (f.num(), f.den());
    let diff = q - p;
    let (num, rem) = diff.div_by_var();
    let scale = q.coeffs()[0].abs().max(p.coeffs()[0].abs()).max(f64::MIN_POSITIVE);
    if rem.abs() > 1e-9 * scale {
        return Err(Error::ReductionFailed(format!(
            "1 - f(u) does not vanish at u = 0 (remainder {rem:e})"
        )));
    }
    let r = RationalFunction::new(num, q + p)?;
    if !r.is_strictly_proper() {
        return Err(Error::ReductionFailed("transform is not strictly proper".into()));
    }
    Ok(r)
}

/// `q(t)` as an exponential polynomial, with its derivative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QFunction {
    q: ExpPolynomial,
    dq: ExpPolynomial,
    spec: WaitingTimeSpec,
    transform: RationalFunction,
}

pub fn q_time_domain(spec: &WaitingTimeSpec) -> Result<QFunction> {
    let transform = q_hat(spec)?;
    let q = inverse_laplace(&transform)?;
    let q0 = q.value(0.0);
    if (q0 - 1.0).abs() > 1e-9 {
        return Err(Error::Numerical(format!("q(0) = {q0}, expected 1")));
    }
    if !(q.max_pole_re() < 0.0) {
        return Err(Error::Numerical(format!(
            "q(t) does not decay: slowest pole has real part {}",
            q.max_pole_re()
        )));
    }
    let dq = deriv_exp_poly(&q);
    Ok(QFunction {
        q,
        dq,
        spec: spec.clone(),
        transform,
    })
}

/// Time-local rate, or a pole where `q` vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Finite(f64),
    /// `q(t) = 0`; `γ → +∞` from the left and `-∞` from the right.
    Pole,
}

impl Rate {
    pub fn value(self) -> Option<f64> {
        match self {
            Rate::Finite(v) => Some(v),
            Rate::Pole => None,
        }
    }

    /// `(left, right)` limits.
    pub fn side_limits(self) -> (f64, f64) {
        match self {
            Rate::Finite(v) => (v, v),
            Rate::Pole => (f64::INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn is_pole(self) -> bool {
        matches!(self, Rate::Pole)
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Rate::Finite(v) => s.serialize_f64(*v),
            Rate::Pole => s.serialize_str("pole"),
        }
    }
}

impl QFunction {
    pub fn q(&self, t: f64) -> f64 {
        self.q.value(t)
    }

    pub fn dq(&self, t: f64) -> f64 {
        self.dq.value(t)
    }

    /// `d|q|/dt`, zero at zeros of `q`.
    pub fn d_abs_q(&self, t: f64) -> f64 {
        let q = self.q(t);
        if q == 0.0 {
            0.0
        } else {
            q.signum() * self.dq(t)
        }
    }

    pub fn exp_poly(&self) -> &ExpPolynomial {
        &self.q
    }

    pub fn derivative(&self) -> &ExpPolynomial {
        &self.dq
    }

    pub fn spec(&self) -> &WaitingTimeSpec {
        &self.spec
    }

    pub fn transform(&self) -> &RationalFunction {
        &self.transform
    }

    pub fn map_at(&self, t: f64) -> Result<StochasticMatrix> {
        if t < 0.0 {
            return Err(Error::NegativeTime);
        }
        let q = self.q(t);
        StochasticMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[0.5 * (1.0 + q), 0.5 * (1.0 - q), 0.5 * (1.0 - q), 0.5 * (1.0 + q)],
        ))
    }

    /// `γ(t) = -q'(t) / (2 q(t))`.
    pub fn gamma(&self, t: f64) -> Rate {
        let q = self.q(t);
        if q.abs() <= POLE_TOL {
            Rate::Pole
        } else {
            Rate::Finite(-self.dq(t) / (2.0 * q))
        }
    }

    /// Upper bound on `∫_T^∞ |q'(t)| dt` from the term magnitudes of `q'`.
    pub fn tail_bound(&self, horizon: f64) -> f64 {
        self.dq
            .terms()
            .iter()
            .map(|term| term_tail(term.coeff.norm(), term.power, term.pole.re, horizon))
            .sum()
    }

    /// Grid step resolving the fastest oscillation and decay.
    pub fn grid_step(&self) -> f64 {
        let im = self.q.max_pole_im();
        let norm = self.q.max_pole_norm().max(f64::MIN_POSITIVE);
        let mut dt = 1.0 / (SAMPLES_PER_PERIOD * norm);
        if im > 0.0 {
            dt = dt.min(2.0 * std::f64::consts::PI / (SAMPLES_PER_PERIOD * im));
        }
        dt
    }
}

/// `∫_T^∞ c t^m e^{a t} dt` for `a < 0`.
fn term_tail(c: f64, m: u32, a: f64, t: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    if a >= 0.0 {
        return f64::INFINITY;
    }
    let k = -a;
    // Σ_{j=0}^m m!/j! T^j / k^{m-j+1}
    let mut sum = 0.0;
    let mut fact_ratio = 1.0; // m!/j!, starting from j = m
    for j in (0..=m).rev() {
        sum += fact_ratio * t.powi(j as i32) / k.powi((m - j + 1) as i32);
        fact_ratio *= j as f64;
    }
    c * (a * t).exp() * sum
}

/// `γ` on the map family used by generic tools.
pub fn gamma_rate(qf: &QFunction, t: f64) -> Rate {
    qf.gamma(t)
}

/// Zeros, extrema and increase intervals of `|q|` up to the tail horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalStructure {
    pub zeros: Vec<f64>,
    pub extrema: Vec<f64>,
    pub horizon: f64,
    pub increase_intervals: Vec<(f64, f64)>,
    /// Bound on the total variation of `q` beyond the horizon.
    pub tail_bound: f64,
    pub grid_step: f64,
}

impl CriticalStructure {
    fn empty(tail_bound: f64) -> Self {
        CriticalStructure {
            zeros: Vec::new(),
            extrema: Vec::new(),
            horizon: 0.0,
            increase_intervals: Vec::new(),
            tail_bound,
            grid_step: 0.0,
        }
    }
}

/// Smallest `T` with `tail_bound(T) < tol`.
fn horizon_for(qf: &QFunction, tol: f64) -> Result<f64> {
    if qf.tail_bound(0.0) < tol {
        return Ok(0.0);
    }
    let mut hi = qf.spec.slowest_time_constant().max(1e-300);
    let mut iters = 0;
    while !(qf.tail_bound(hi) < tol) {
        hi *= 2.0;
        iters += 1;
        if iters > 2000 || !hi.is_finite() {
            return Err(Error::Numerical("tail bound never drops below tolerance".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if qf.tail_bound(mid) < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Sign changes of `f` on the grid (excluding `t = 0`), refined by bisection.
fn sign_changes<F: Fn(f64) -> f64>(f: F, grid: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..grid.len() {
        let (a, b) = (values[i - 1], values[i]);
        if b == 0.0 {
            continue;
        }
        if a == 0.0 {
            // exact grid hit; report it unless it is the origin or no sign change
            if i >= 2 && grid[i - 1] > 0.0 && (values[i - 2] > 0.0) != (b > 0.0) && values[i - 2] != 0.0 {
                out.push(grid[i - 1]);
            }
            continue;
        }
        if (a > 0.0) != (b > 0.0) {
            out.push(bisect(&f, grid[i - 1], grid[i], a));
        }
    }
    out
}

pub fn critical_structure(qf: &QFunction, tail_tol: f64) -> Result<CriticalStructure> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tail tolerance must be positive, got {tail_tol}"
        )));
    }
    if tail_tol >= 1.0 {
        return Ok(CriticalStructure::empty(qf.tail_bound(0.0)));
    }
    let raw = horizon_for(qf, tail_tol)?;
    let dt = qf.grid_step();
    if raw == 0.0 {
        return Ok(CriticalStructure::empty(qf.tail_bound(0.0)));
    }
    let n = (raw / dt).ceil().max(1.0);
    if n > MAX_SCAN_POINTS as f64 {
        return Err(Error::Numerical(format!(
            "scanning [0, {raw:.3e}] at step {dt:.3e} needs {n:.3e} points (limit {MAX_SCAN_POINTS}); time scales too far apart"
        )));
    }
    let n = n as usize;
    let horizon = n as f64 * dt;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    let qv: Vec<f64> = grid.iter().map(|&t| qf.q(t)).collect();
    let dv: Vec<f64> = grid.iter().map(|&t| qf.dq(t)).collect();
    let zeros = sign_changes(|t| qf.q(t), &grid, &qv);
    let extrema = sign_changes(|t| qf.dq(t), &grid, &dv);

    let mut cuts: Vec<f64> = Vec::with_capacity(zeros.len() + extrema.len() + 2);
    cuts.push(0.0);
    cuts.extend(&zeros);
    cuts.extend(&extrema);
    cuts.push(horizon);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let m = 0.5 * (a + b);
        if qf.q(m) * qf.dq(m) > 0.0 {
            match intervals.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                _ => intervals.push((a, b)),
            }
        }
    }
    Ok(CriticalStructure {
        zeros,
        extrema,
        horizon,
        increase_intervals: intervals,
        tail_bound: qf.tail_bound(horizon),
        grid_step: dt,
    })
}

/// `t ↦ Λ(t,0)` on `[0, t_end]`.
#[derive(Debug, Clone)]
pub struct TwoSiteFamily {
    qf: QFunction,
    t_end: f64,
}

impl TwoSiteFamily {
    pub fn new(qf: QFunction, t_end: f64) -> Self {
        TwoSiteFamily { qf, t_end }
    }

    pub fn from_spec(spec: &WaitingTimeSpec, t_end: f64) -> Result<Self> {
        Ok(TwoSiteFamily::new(q_time_domain(spec)?, t_end))
    }

    pub fn q_function(&self) -> &QFunction {
        &self.qf
    }
}

impl MapFamily for TwoSiteFamily {
    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, self.t_end)
    }

    fn map_at(&self, t: f64) -> Result<StochasticMatrix> {
        self.qf.map_at(t)
    }

    fn time_scale(&self) -> f64 {
        self.qf.spec.slowest_time_constant()
    }
}
