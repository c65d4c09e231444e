//! Waiting-time distributions built from exponentials by convolution and
//! mixture.

pub mod dsl;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly_laplace::{Polynomial, RationalFunction};

pub use dsl::parse_wtd;

/// Tolerance on mixture weights summing to one.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Tolerance on the transform normalization `f̂(0) = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Expression tree for a waiting-time density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaitingTimeSpec {
    Exponential { rate: f64 },
    Erlang { stages: u32, rate: f64 },
    Convolution { children: Vec<WaitingTimeSpec> },
    Mixture { branches: Vec<Branch> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub weight: f64,
    pub child: WaitingTimeSpec,
}

impl WaitingTimeSpec {
    pub fn exp(rate: f64) -> Self {
        WaitingTimeSpec::Exponential { rate }
    }

    pub fn erlang(stages: u32, rate: f64) -> Self {
        WaitingTimeSpec::Erlang { stages, rate }
    }

    pub fn conv(children: Vec<WaitingTimeSpec>) -> Self {
        WaitingTimeSpec::Convolution { children }
    }

    pub fn mix(branches: Vec<(f64, WaitingTimeSpec)>) -> Self {
        WaitingTimeSpec::Mixture {
            branches: branches
                .into_iter()
                .map(|(weight, child)| Branch { weight, child })
                .collect(),
        }
    }

    /// Two-component exponential mixture convolved with itself:
    /// `h * h`, `h = μ λ₁ e^{-λ₁ t} + (1-μ) λ₂ e^{-λ₂ t}`.
    pub fn mixture_pair(mu: f64, rate1: f64, rate2: f64) -> Self {
        let h = WaitingTimeSpec::mix(vec![
            (mu, WaitingTimeSpec::exp(rate1)),
            (1.0 - mu, WaitingTimeSpec::exp(rate2)),
        ]);
        WaitingTimeSpec::conv(vec![h.clone(), h])
    }

    /// Same tree with every rate multiplied by `c` (time rescaled by `1/c`).
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            WaitingTimeSpec::Exponential { rate } => WaitingTimeSpec::Exponential { rate: rate * c },
            WaitingTimeSpec::Erlang { stages, rate } => WaitingTimeSpec::Erlang {
                stages: *stages,
                rate: rate * c,
            },
            WaitingTimeSpec::Convolution { children } => WaitingTimeSpec::Convolution {
                children: children.iter().map(|ch| ch.scaled(c)).collect(),
            },
            WaitingTimeSpec::Mixture { branches } => WaitingTimeSpec::Mixture {
                branches: branches
                    .iter()
                    .map(|b| Branch {
                        weight: b.weight,
                        child: b.child.scaled(c),
                    })
                    .collect(),
            },
        }
    }

    /// All rates appearing in the tree.
    pub fn rates(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_rates(&mut out);
        out
    }

    fn collect_rates(&self, out: &mut Vec<f64>) {
        match self {
            WaitingTimeSpec::Exponential { rate } | WaitingTimeSpec::Erlang { rate, .. } => out.push(*rate),
            WaitingTimeSpec::Convolution { children } => children.iter().for_each(|c| c.collect_rates(out)),
            WaitingTimeSpec::Mixture { branches } => branches.iter().for_each(|b| b.child.collect_rates(out)),
        }
    }

    /// Largest `1/λ` among the rates in the tree.
    pub fn slowest_time_constant(&self) -> f64 {
        self.rates().into_iter().map(|r| 1.0 / r).fold(0.0, f64::max)
    }
}

/// Check every structural invariant. Never fails; returns the violations.
pub fn validate(spec: &WaitingTimeSpec) -> Vec<String> {
    let mut out = Vec::new();
    validate_node(spec, "root", &mut out);
    if out.is_empty() {
        match laplace_unchecked(spec) {
            Ok(f) => {
                let f0 = f.eval(0.0);
                if (f0 - 1.0).abs() > NORMALIZATION_TOL {
                    out.push(format!("transform at u=0 is {f0}, expected 1"));
                }
            }
            Err(e) => out.push(format!("transform failed: {e}")),
        }
    }
    out
}

fn validate_node(spec: &WaitingTimeSpec, path: &str, out: &mut Vec<String>) {
    match spec {
        WaitingTimeSpec::Exponential { rate } => check_rate(*rate, path, out),
        WaitingTimeSpec::Erlang { stages, rate } => {
            if *stages < 1 {
                out.push(format!("{path}: erlang order must be >= 1"));
            }
            check_rate(*rate, path, out);
        }
        WaitingTimeSpec::Convolution { children } => {
            if children.len() < 2 {
                out.push(format!("{path}: convolution needs at least 2 children"));
            }
            for (i, c) in children.iter().enumerate() {
                validate_node(c, &format!("{path}.conv[{i}]"), out);
            }
        }
        WaitingTimeSpec::Mixture { branches } => {
            if branches.is_empty() {
                out.push(format!("{path}: mixture needs at least one branch"));
            }
            let mut sum = 0.0;
            for (i, b) in branches.iter().enumerate() {
                if !(b.weight >= 0.0) || !b.weight.is_finite() {
                    out.push(format!("{path}.mix[{i}]: weight must be nonnegative"));
                }
                sum += b.weight;
                validate_node(&b.child, &format!("{path}.mix[{i}]"), out);
            }
            if (sum - 1.0).abs() > WEIGHT_TOL {
                out.push(format!("{path}: weights sum to {sum}"));
            }
        }
    }
}

fn check_rate(rate: f64, path: &str, out: &mut Vec<String>) {
    if !(rate > 0.0) || !rate.is_finite() {
        out.push(format!("{path}: rate must be positive (got {rate})"));
    }
}

/// Validate, converting violations into an error.
pub fn ensure_valid(spec: &WaitingTimeSpec) -> Result<()> {
    let v = validate(spec);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(v))
    }
}

/// Laplace transform `f̂(u)` of the density.
pub fn laplace(spec: &WaitingTimeSpec) -> Result<RationalFunction> {
    ensure_valid(spec)?;
    laplace_unchecked(spec)
}

fn laplace_unchecked(spec: &WaitingTimeSpec) -> Result<RationalFunction> {
    Ok(match spec {
        WaitingTimeSpec::Exponential { rate } => exp_transform(*rate),
        WaitingTimeSpec::Erlang { stages, rate } => exp_transform(*rate).powi(*stages),
        WaitingTimeSpec::Convolution { children } => {
            let mut acc = RationalFunction::constant(1.0);
            for c in children {
                acc = acc.mul(&laplace_unchecked(c)?);
            }
            acc
        }
        WaitingTimeSpec::Mixture { branches } => {
            // zero-weight branches contribute nothing; dropping them keeps
            // spurious common factors out of the sum
            let mut acc = RationalFunction::constant(0.0);
            for b in branches.iter().filter(|b| b.weight != 0.0) {
                acc = acc.add(&laplace_unchecked(&b.child)?.scale(b.weight));
            }
            acc
        }
    })
}

fn exp_transform(rate: f64) -> RationalFunction {
    RationalFunction::new_unreduced(Polynomial::constant(rate), Polynomial::new(vec![rate, 1.0]))
        .expect("nonzero denominator")
}

/// Mean waiting time from the transform, `-f̂'(0)`.
pub fn mean(spec: &WaitingTimeSpec) -> Result<f64> {
    let f = laplace(spec)?;
    Ok(-f.derivative().eval(0.0))
}

/// Second moment from the transform, `f̂''(0)`.
pub fn second_moment(spec: &WaitingTimeSpec) -> Result<f64> {
    let f = laplace(spec)?;
    Ok(f.derivative().derivative().eval(0.0))
}

/// Mean computed structurally from the tree (no transform).
pub fn tree_mean(spec: &WaitingTimeSpec) -> f64 {
    match spec {
        WaitingTimeSpec::Exponential { rate } => 1.0 / rate,
        WaitingTimeSpec::Erlang { stages, rate } => *stages as f64 / rate,
        WaitingTimeSpec::Convolution { children } => children.iter().map(tree_mean).sum(),
        WaitingTimeSpec::Mixture { branches } => branches.iter().map(|b| b.weight * tree_mean(&b.child)).sum(),
    }
}

/// Draw one waiting time. The spec must be valid.
pub fn sample<R: Rng + ?Sized>(spec: &WaitingTimeSpec, rng: &mut R) -> f64 {
    match spec {
        WaitingTimeSpec::Exponential { rate } => sample_exp(*rate, rng),
        WaitingTimeSpec::Erlang { stages, rate } => (0..*stages).map(|_| sample_exp(*rate, rng)).sum(),
        WaitingTimeSpec::Convolution { children } => children.iter().map(|c| sample(c, rng)).sum(),
        WaitingTimeSpec::Mixture { branches } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for b in branches {
                acc += b.weight;
                if u < acc {
                    return sample(&b.child, rng);
                }
            }
            // rounding in the cumulative sum: fall back to the last weighted branch
            let last = branches
                .iter()
                .rev()
                .find(|b| b.weight > 0.0)
                .unwrap_or(&branches[branches.len() - 1]);
            sample(&last.child, rng)
        }
    }
}

fn sample_exp<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    // inverse CDF with U in (0, 1]
    let u: f64 = 1.0 - rng.random::<f64>();
    -u.ln() / rate
}
