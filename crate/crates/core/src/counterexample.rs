//! Two-site rate equations `dp₁/dt = γ₂(t)p₂ − γ₁(t)p₁` whose Kolmogorov
//! distance decays monotonically even though a transition rate turns
//! negative, so the process is not P-divisible.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::n_c_vertex_pairs;
use crate::quadrature::adaptive_simpson;
use crate::stochastic::{
    kolmogorov_conditions, kolmogorov_distance, l1_half, propagate_raw, w_rates, GeneratorMatrix, OdeOptions,
    ProbabilityVector, Witness,
};

/// Absolute tolerance for the cumulative-integral quadrature.
pub const QUAD_TOL: f64 = 1e-10;

/// Required agreement between quadrature and analytic integrals.
pub const ANALYTIC_AGREEMENT: f64 = 1e-9;

/// Sampling density for pointwise checks.
pub const SAMPLES_PER_PERIOD: usize = 10_000;

/// Slack for pointwise sign checks (absorbs rounding in e.g. `1 + cos π`).
pub const POINTWISE_SLACK: f64 = 1e-12;

/// Differences of a monotone trajectory may exceed zero by at most this much.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Most negative probability entry still counted as nonnegative.
pub const POSITIVITY_SLACK: f64 = 1e-9;

/// Required agreement between the closed-form and propagated distances.
pub const ODE_AGREEMENT: f64 = 1e-7;

const MAX_SAMPLES: usize = 10_000_000;

/// A time-dependent rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateFunction {
    Constant {
        value: f64,
    },
    /// `offset + amplitude·cos(ω t)`.
    Sinusoid {
        offset: f64,
        amplitude: f64,
        omega: f64,
    },
    /// Piecewise-linear through `(times[i], values[i])`, held constant
    /// outside the table.
    Tabulated {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl RateFunction {
    pub fn constant(value: f64) -> Self {
        RateFunction::Constant { value }
    }

    pub fn sinusoid(offset: f64, amplitude: f64, omega: f64) -> Self {
        RateFunction::Sinusoid {
            offset,
            amplitude,
            omega,
        }
    }

    pub fn tabulated(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "table needs matching non-empty columns, got {} times and {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("table times must be strictly increasing".into()));
        }
        if times.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("table entries must be finite".into()));
        }
        Ok(RateFunction::Tabulated { times, values })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RateFunction::Constant { value } => *value,
            RateFunction::Sinusoid {
                offset,
                amplitude,
                omega,
            } => offset + amplitude * (omega * t).cos(),
            RateFunction::Tabulated { times, values } => {
                let i = times.partition_point(|&x| x <= t);
                if i == 0 {
                    values[0]
                } else if i == times.len() {
                    values[i - 1]
                } else {
                    let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
                    values[i - 1] + w * (values[i] - values[i - 1])
                }
            }
        }
    }

    /// `∫₀ᵗ γ` in closed form, when the form has one.
    pub fn integral(&self, t: f64) -> Option<f64> {
        match self {
            RateFunction::Constant { value } => Some(value * t),
            RateFunction::Sinusoid {
                offset,
                amplitude,
                omega,
            } => Some(if *omega == 0.0 {
                (offset + amplitude) * t
            } else {
                offset * t + amplitude * (omega * t).sin() / omega
            }),
            RateFunction::Tabulated { .. } => None,
        }
    }

    fn period(&self) -> Option<f64> {
        match self {
            RateFunction::Sinusoid { omega, amplitude, .. } if *omega != 0.0 && *amplitude != 0.0 => {
                Some(2.0 * PI / omega.abs())
            }
            _ => None,
        }
    }

    fn nodes(&self) -> &[f64] {
        match self {
            RateFunction::Tabulated { times, .. } => times,
            _ => &[],
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match self {
            RateFunction::Constant { value } => value.is_finite(),
            RateFunction::Sinusoid {
                offset,
                amplitude,
                omega,
            } => offset.is_finite() && amplitude.is_finite() && omega.is_finite(),
            RateFunction::Tabulated { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("non-finite rate parameters in {self}")))
        }
    }
}

impl fmt::Display for RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateFunction::Constant { value } => write!(f, "const:{value}"),
            RateFunction::Sinusoid {
                offset,
                amplitude,
                omega,
            } => {
                if *omega == 1.0 {
                    write!(f, "sin:{amplitude},{offset}")
                } else {
                    write!(f, "sin:{amplitude},{offset},{omega}")
                }
            }
            RateFunction::Tabulated { times, values } => {
                write!(f, "table:")?;
                for (i, (t, v)) in times.iter().zip(values).enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}={v}")?;
                }
                Ok(())
            }
        }
    }
}

/// Rate syntax:
///
/// - `const:A` for a constant rate `A`,
/// - `sin:AMP,OFFSET[,OMEGA]` (alias `cos:`) for `OFFSET + AMP·cos(OMEGA t)`,
///   with `OMEGA` defaulting to 1,
/// - `table:T0=V0,T1=V1,...` for linear interpolation through the points.
impl FromStr for RateFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidArgument(format!("rate '{s}': {msg}"));
        let (kind, body) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| bad("expected KIND:PARAMS".into()))?;
        let num = |x: &str| -> Result<f64> {
            let v: f64 = x
                .trim()
                .parse()
                .map_err(|_| bad(format!("'{}' is not a number", x.trim())))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("'{}' is not finite", x.trim())))
            }
        };
        match kind.trim() {
            "const" => Ok(RateFunction::constant(num(body)?)),
            "sin" | "cos" => {
                let parts: Vec<&str> = body.split(',').collect();
                match parts.as_slice() {
                    [a, o] => Ok(RateFunction::sinusoid(num(o)?, num(a)?, 1.0)),
                    [a, o, w] => Ok(RateFunction::sinusoid(num(o)?, num(a)?, num(w)?)),
                    _ => Err(bad("expected AMP,OFFSET[,OMEGA]".into())),
                }
            }
            "table" => {
                let mut times = Vec::new();
                let mut values = Vec::new();
                for item in body.split(',') {
                    let (t, v) = item
                        .split_once('=')
                        .ok_or_else(|| bad(format!("expected T=V, got '{item}'")))?;
                    times.push(num(t)?);
                    values.push(num(v)?);
                }
                RateFunction::tabulated(times, values).map_err(|e| bad(e.to_string()))
            }
            other => Err(bad(format!(
                "unknown kind '{other}' (expected const, sin, cos or table)"
            ))),
        }
    }
}

/// The pair of rates `(γ₁, γ₂)` driving the two-site equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoRateModel {
    pub gamma1: RateFunction,
    pub gamma2: RateFunction,
}

impl Default for TwoRateModel {
    /// `γ₁ = 1`, `γ₂ = cos t + ½`.
    fn default() -> Self {
        TwoRateModel {
            gamma1: RateFunction::constant(1.0),
            gamma2: RateFunction::sinusoid(0.5, 1.0, 1.0),
        }
    }
}

impl TwoRateModel {
    pub fn new(gamma1: RateFunction, gamma2: RateFunction) -> Self {
        TwoRateModel { gamma1, gamma2 }
    }

    pub fn generator(&self, t: f64) -> GeneratorMatrix {
        GeneratorMatrix::two_site(self.gamma1.eval(t), self.gamma2.eval(t))
    }

    /// `∫₀ᵗ (γ₁ + γ₂)` in closed form, when both rates have one.
    pub fn total_integral(&self, t: f64) -> Option<f64> {
        Some(self.gamma1.integral(t)? + self.gamma2.integral(t)?)
    }

    /// Pointwise check grid on `[0, t_end]`: `SAMPLES_PER_PERIOD` points per
    /// shortest sinusoid period (per unit time if neither rate oscillates),
    /// plus every table node.
    pub fn sampling_grid(&self, t_end: f64) -> Result<Vec<f64>> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidArgument(format!("t_end must be positive, got {t_end}")));
        }
        let period = [self.gamma1.period(), self.gamma2.period()]
            .into_iter()
            .flatten()
            .reduce(f64::min)
            .unwrap_or(1.0);
        let n = ((t_end / period) * SAMPLES_PER_PERIOD as f64)
            .ceil()
            .max(SAMPLES_PER_PERIOD as f64);
        if n > MAX_SAMPLES as f64 {
            return Err(Error::InvalidArgument(format!(
                "t_end = {t_end} needs {n:.0} samples (limit {MAX_SAMPLES})"
            )));
        }
        let n = n as usize;
        let mut grid: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
        grid.extend(
            self.gamma1
                .nodes()
                .iter()
                .chain(self.gamma2.nodes())
                .filter(|&&x| x > 0.0 && x < t_end),
        );
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelCondition {
    /// `γ₁(t) ≥ 0`.
    Gamma1Nonnegative,
    /// `γ₁(t) + γ₂(t) ≥ 0`.
    SumNonnegative,
    /// `∫₀ᵗ γ₂ ≥ 0`.
    Gamma2IntegralNonnegative,
}

/// Worst sampled violation of one condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelViolation {
    pub condition: ModelCondition,
    pub t: f64,
    pub value: f64,
}

impl fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.condition {
            ModelCondition::Gamma1Nonnegative => "γ₁",
            ModelCondition::SumNonnegative => "γ₁ + γ₂",
            ModelCondition::Gamma2IntegralNonnegative => "∫γ₂",
        };
        write!(f, "{what} < 0 at t ≈ {:.1} (value {:.3e})", self.t, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelValidation {
    /// All three well-posedness conditions hold on the grid.
    pub valid: bool,
    pub violations: Vec<ModelViolation>,
    /// `γ₂` is negative somewhere, so P-divisibility fails.
    pub genuine: bool,
    /// Set when the model is valid but not a counterexample.
    pub flag: Option<String>,
    /// Largest `|quadrature − closed form|` of `∫γ₂`, when a closed form exists.
    pub quadrature_discrepancy: Option<f64>,
    pub samples: usize,
}

impl ModelValidation {
    pub fn is_counterexample(&self) -> bool {
        self.valid && self.genuine
    }
}

/// Cumulative `∫₀ᵗ f` at every grid point by adaptive Simpson on each cell.
fn cumulative_integral<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> Result<Vec<f64>> {
    let cells = grid.len().saturating_sub(1).max(1) as f64;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    let mut prev = 0.0;
    for &t in grid {
        acc += adaptive_simpson(&f, prev, t, QUAD_TOL / cells)?;
        out.push(acc);
        prev = t;
    }
    Ok(out)
}

/// Check the well-posedness conditions on `grid` (which should start at 0
/// and be dense relative to any oscillation, see
/// [`TwoRateModel::sampling_grid`]). The integral condition is evaluated by
/// quadrature and cross-checked against the closed form when available.
pub fn validate_model(m: &TwoRateModel, grid: &[f64]) -> Result<ModelValidation> {
    m.gamma1.check()?;
    m.gamma2.check()?;
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return Err(Error::InvalidArgument(
            "grid must be nonnegative, strictly increasing and non-empty".into(),
        ));
    }
    let integrals = cumulative_integral(|t| m.gamma2.eval(t), grid)?;
    let quadrature_discrepancy = grid
        .iter()
        .zip(&integrals)
        .map(|(&t, &q)| m.gamma2.integral(t).map(|a| (a - q).abs()))
        .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)));

    let mut worst: [Option<ModelViolation>; 3] = [None; 3];
    let mut note = |slot: usize, condition, t: f64, value: f64, slack: f64| {
        if value < -slack && worst[slot].is_none_or(|w| value < w.value - slack) {
            worst[slot] = Some(ModelViolation { condition, t, value });
        }
    };
    let mut genuine = false;
    for (&t, &i2) in grid.iter().zip(&integrals) {
        let (g1, g2) = (m.gamma1.eval(t), m.gamma2.eval(t));
        note(0, ModelCondition::Gamma1Nonnegative, t, g1, POINTWISE_SLACK);
        note(1, ModelCondition::SumNonnegative, t, g1 + g2, POINTWISE_SLACK);
        note(2, ModelCondition::Gamma2IntegralNonnegative, t, i2, ANALYTIC_AGREEMENT);
        genuine |= g2 < 0.0;
    }
    let violations: Vec<ModelViolation> = worst.into_iter().flatten().collect();
    let valid = violations.is_empty();
    let flag = (valid && !genuine).then(|| "not a counterexample: γ₂ never negative".to_string());
    Ok(ModelValidation {
        valid,
        violations,
        genuine,
        flag,
        quadrature_discrepancy,
        samples: grid.len(),
    })
}

fn two_site_pair(p0: (&ProbabilityVector, &ProbabilityVector)) -> Result<()> {
    for p in [p0.0, p0.1] {
        if p.dim() != 2 {
            return Err(Error::DimensionMismatch {
                left: p.dim(),
                right: 2,
            });
        }
    }
    Ok(())
}

/// `D_K(t) = exp(−∫₀ᵗ(γ₁+γ₂)) · D_K(0)`, with the integral by quadrature.
pub fn dk_closed_form(m: &TwoRateModel, p0: (&ProbabilityVector, &ProbabilityVector), t: f64) -> Result<f64> {
    two_site_pair(p0)?;
    if !(t >= 0.0) {
        return Err(Error::NegativeTime);
    }
    let d0 = kolmogorov_distance(p0.0, p0.1)?;
    let integral = adaptive_simpson(|s| m.gamma1.eval(s) + m.gamma2.eval(s), 0.0, t, QUAD_TOL)?;
    Ok((-integral).exp() * d0)
}

/// Time-dependent negative rate found while scanning the generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateWitness {
    pub t: f64,
    /// The offending generator entry; for the two-site model this is the
    /// rate `W₁₂ = γ₂`.
    pub entry: Witness,
}

impl fmt::Display for RateWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at t = {}", self.entry, self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DkSample {
    pub t: f64,
    pub closed_form: f64,
    pub propagated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemonstrationReport {
    pub model: TwoRateModel,
    pub t_end: f64,
    pub validation: ModelValidation,
    /// Most negative transition rate on the sampling grid.
    pub witness: RateWitness,
    pub trajectory: Vec<DkSample>,
    /// `max |closed form − propagated|` over the trajectory.
    pub max_deviation: f64,
    pub dk_monotone: bool,
    pub p_divisible: bool,
    /// Smallest probability entry met while propagating the vertices.
    pub min_probability: f64,
    /// `min_probability ≥ −POSITIVITY_SLACK`. The well-posedness conditions
    /// do not guarantee this: positivity needs `∫₀ᵗ γ₂(s) e^{Γ(s)} ds ≥ 0`
    /// with `Γ = ∫(γ₁+γ₂)`, which is stronger than `∫₀ᵗ γ₂ ≥ 0`.
    pub positivity_preserved: bool,
    /// Vertex-pair measure on the propagated maps.
    pub n_c_general: f64,
    pub verdict: String,
}

/// Number of trajectory samples recorded by [`demonstrate`].
pub const TRAJECTORY_POINTS: usize = 2000;

/// Exhibit, on `[0, t_end]`, a negative rate (so no P-divisibility) next to a
/// monotonically decreasing Kolmogorov distance, computed both in closed form
/// and by integrating the rate equation.
pub fn demonstrate(m: &TwoRateModel, t_end: f64) -> Result<DemonstrationReport> {
    let grid = m.sampling_grid(t_end)?;
    let validation = validate_model(m, &grid)?;
    if !validation.valid {
        let why: Vec<String> = validation.violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidArgument(format!("invalid model: {}", why.join("; "))));
    }
    if !validation.genuine {
        return Err(Error::NotCounterexample("γ₂ never negative".into()));
    }

    let mut witness: Option<RateWitness> = None;
    for &t in &grid {
        let w = w_rates(&m.generator(t))?;
        let (j, k) = if w[(0, 1)] <= w[(1, 0)] { (0, 1) } else { (1, 0) };
        let v = w[(j, k)];
        if v < 0.0 && witness.is_none_or(|x| v < x.entry.value) {
            let report = kolmogorov_conditions(&m.generator(t), 0.0);
            if let Some(entry) = report.witness {
                witness = Some(RateWitness { t, entry });
            }
        }
    }
    let witness = witness.ok_or_else(|| Error::Numerical("no negative rate found on the sampling grid".into()))?;

    let times: Vec<f64> = (0..=TRAJECTORY_POINTS)
        .map(|i| t_end * i as f64 / TRAJECTORY_POINTS as f64)
        .collect();
    let gen = |t: f64| m.generator(t);
    let opts = OdeOptions::default();
    // Columns of Λ(t,0). The equation is linear, so nothing forces them to
    // stay in the simplex; they are integrated and measured as they are.
    let columns = [
        propagate_raw(&gen, &[1.0, 0.0], &times, &opts)?,
        propagate_raw(&gen, &[0.0, 1.0], &times, &opts)?,
    ];
    let maps: Vec<DMatrix<f64>> = (0..times.len())
        .map(|i| DMatrix::from_fn(2, 2, |r, c| columns[c].states[i][r]))
        .collect();

    // Closed form integrated cell by cell so the total cost stays linear.
    let mut trajectory = Vec::with_capacity(times.len());
    let mut integral = 0.0;
    let mut prev = 0.0;
    let cells = TRAJECTORY_POINTS as f64;
    for (&t, lambda) in times.iter().zip(&maps) {
        integral += adaptive_simpson(|s| m.gamma1.eval(s) + m.gamma2.eval(s), prev, t, QUAD_TOL / cells)?;
        prev = t;
        trajectory.push(DkSample {
            t,
            closed_form: (-integral).exp(),
            propagated: l1_half(lambda.column(0).as_slice(), lambda.column(1).as_slice()),
        });
    }
    let min_probability = maps.iter().map(|l| l.min()).fold(f64::INFINITY, f64::min);
    let max_deviation = trajectory
        .iter()
        .map(|s| (s.closed_form - s.propagated).abs())
        .fold(0.0, f64::max);
    let monotone = |f: fn(&DkSample) -> f64| trajectory.windows(2).all(|w| f(&w[1]) - f(&w[0]) <= MONOTONE_SLACK);
    let dk_monotone = monotone(|s| s.closed_form) && monotone(|s| s.propagated);
    let n_c = n_c_vertex_pairs(&maps, &times)?.n_c;

    let p_divisible = false;
    let verdict = format!(
        "D_K monotone: {}; P-divisible: {}",
        if dk_monotone { "yes" } else { "no" },
        if p_divisible { "yes" } else { "no" }
    );
    Ok(DemonstrationReport {
        model: m.clone(),
        t_end,
        validation,
        witness,
        trajectory,
        max_deviation,
        dk_monotone,
        p_divisible,
        min_probability,
        positivity_preserved: min_probability >= -POSITIVITY_SLACK,
        n_c_general: n_c,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_syntax_round_trips() {
        for s in ["const:1", "sin:1,0.5", "sin:2,0.25,3", "table:0=1,1=0.5,2=2"] {
            let r: RateFunction = s.parse().unwrap();
            assert_eq!(r.to_string(), s);
        }
        let c: RateFunction = "cos:1,0.5".parse().unwrap();
        assert_eq!(c, RateFunction::sinusoid(0.5, 1.0, 1.0));
        for bad in [
            "",
            "const",
            "const:x",
            "sin:1",
            "sin:1,2,3,4",
            "wave:1",
            "table:1=2,0=1",
            "const:inf",
        ] {
            assert!(bad.parse::<RateFunction>().is_err(), "{bad}");
        }
    }

    #[test]
    fn tabulated_interpolates_and_clamps() {
        let r = RateFunction::tabulated(vec![0.0, 2.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(r.eval(-1.0), 1.0);
        assert_eq!(r.eval(1.0), 2.0);
        assert_eq!(r.eval(5.0), 3.0);
        assert!(r.integral(1.0).is_none());
    }

    #[test]
    fn sinusoid_integral() {
        let r = RateFunction::sinusoid(0.5, 1.0, 2.0);
        let t = 1.3;
        assert!((r.integral(t).unwrap() - (0.5 * t + (2.0 * t).sin() / 2.0)).abs() < 1e-15);
        assert_eq!(RateFunction::sinusoid(0.5, 1.0, 0.0).integral(2.0), Some(3.0));
    }

    #[test]
    fn sampling_grid_density() {
        let m = TwoRateModel::default();
        let g = m.sampling_grid(2.0 * PI).unwrap();
        assert_eq!(g.len(), SAMPLES_PER_PERIOD + 1);
        assert!(m.sampling_grid(0.0).is_err());
        let tab = TwoRateModel::new(
            RateFunction::constant(1.0),
            RateFunction::tabulated(vec![0.0, 0.123456789], vec![1.0, 1.0]).unwrap(),
        );
        assert!(tab.sampling_grid(1.0).unwrap().contains(&0.123456789));
    }

    #[test]
    fn zero_rates_keep_distance() {
        let m = TwoRateModel::new(RateFunction::constant(0.0), RateFunction::constant(0.0));
        let p = ProbabilityVector::new(vec![0.3, 0.7]).unwrap();
        let q = ProbabilityVector::new(vec![0.9, 0.1]).unwrap();
        assert!((dk_closed_form(&m, (&p, &q), 5.0).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn closed_form_rejects_bad_input() {
        let m = TwoRateModel::default();
        let p = ProbabilityVector::uniform(3);
        let e = ProbabilityVector::basis(2, 0);
        assert!(dk_closed_form(&m, (&p, &e), 1.0).is_err());
        assert!(dk_closed_form(&m, (&e, &e), -1.0).is_err());
    }
}
