use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One term `coeff * t^power * exp(pole * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub coeff: Complex64,
    pub power: u32,
    pub pole: Complex64,
}

/// Finite sum of exponential-polynomial terms, real-valued on the real axis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExpPolynomial {
    terms: Vec<ExpTerm>,
}

impl ExpPolynomial {
    pub fn new(terms: Vec<ExpTerm>) -> Self {
        let mut out = ExpPolynomial { terms: Vec::new() };
        for t in terms {
            out.push(t);
        }
        out
    }

    /// Add a term, merging with an existing term of identical pole and power.
    pub fn push(&mut self, term: ExpTerm) {
        if term.coeff == Complex64::new(0.0, 0.0) {
            return;
        }
        if let Some(existing) = self
            .terms
            .iter_mut()
            .find(|e| e.power == term.power && e.pole == term.pole)
        {
            existing.coeff += term.coeff;
            if existing.coeff == Complex64::new(0.0, 0.0) {
                self.terms.retain(|e| e.coeff != Complex64::new(0.0, 0.0));
            }
            return;
        }
        self.terms.push(term);
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Complex sum at `t`, without the domain check.
    pub fn value_complex(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|term| term.coeff * t.powi(term.power as i32) * (term.pole * t).exp())
            .sum()
    }

    /// Real value at `t`; no domain check.
    pub fn value(&self, t: f64) -> f64 {
        self.value_complex(t).re
    }

    /// Sum of absolute term magnitudes at `t` (an upper bound on |f(t)|).
    pub fn envelope(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.coeff.norm() * t.powi(term.power as i32) * (term.pole.re * t).exp())
            .sum()
    }

    /// Largest real part among the poles (`-inf` when empty).
    pub fn max_pole_re(&self) -> f64 {
        self.terms.iter().map(|t| t.pole.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_pole_im(&self) -> f64 {
        self.terms.iter().map(|t| t.pole.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_pole_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.pole.norm()).fold(0.0, f64::max)
    }

    /// Every complex pole has its conjugate with the conjugate coefficient.
    pub fn is_conjugate_closed(&self, tol: f64) -> bool {
        self.terms.iter().all(|a| {
            if a.pole.im == 0.0 && a.coeff.im.abs() <= tol * (1.0 + a.coeff.norm()) {
                return true;
            }
            self.terms.iter().any(|b| {
                b.power == a.power
                    && (b.pole - a.pole.conj()).norm() <= tol * (1.0 + a.pole.norm())
                    && (b.coeff - a.coeff.conj()).norm() <= tol * (1.0 + a.coeff.norm())
            })
        })
    }
}

/// Evaluate at `t >= 0`, returning the real part.
pub fn eval_exp_poly(f: &ExpPolynomial, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeTime);
    }
    let z = f.value_complex(t);
    debug_assert!(
        z.im.abs() <= 1e-10 * z.re.abs().max(f.envelope(t)).max(1e-300),
        "imaginary residue {} at t = {t}",
        z.im
    );
    Ok(z.re)
}

/// Term-wise time derivative.
pub fn deriv_exp_poly(f: &ExpPolynomial) -> ExpPolynomial {
    let mut out = ExpPolynomial::default();
    for term in f.terms() {
        out.push(ExpTerm {
            coeff: term.coeff * term.pole,
            power: term.power,
            pole: term.pole,
        });
        if term.power > 0 {
            out.push(ExpTerm {
                coeff: term.coeff * term.power as f64,
                power: term.power - 1,
                pole: term.pole,
            });
        }
    }
    out
}
