use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::roots::{roots, Root};
use super::Polynomial;
use crate::error::{Error, Result};

/// Shared numerator/denominator roots closer than this are cancelled.
pub const CANCEL_TOL: f64 = 1e-9;

/// Ratio of two real polynomials, kept with a monic denominator and with
/// common roots cancelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RationalOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl RationalFunction {
    /// Build and reduce `num / den`.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        Ok(RationalFunction { num, den }.reduced())
    }

    /// Build without cancelling common roots (only normalizes the denominator).
    pub fn new_unreduced(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        Ok(RationalFunction { num, den }.normalized())
    }

    pub fn from_polynomial(p: Polynomial) -> Self {
        RationalFunction {
            num: p,
            den: Polynomial::one(),
        }
    }

    pub fn constant(c: f64) -> Self {
        RationalFunction::from_polynomial(Polynomial::constant(c))
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() < self.den.degree()
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.num.eval(u) / self.den.eval(u)
    }

    pub fn eval_complex(&self, u: Complex64) -> Complex64 {
        self.num.eval_complex(u) / self.den.eval_complex(u)
    }

    /// Derivative `(N'D - ND') / D^2`, unreduced.
    pub fn derivative(&self) -> RationalFunction {
        let n1 = &self.num.derivative() * &self.den;
        let n2 = &self.num * &self.den.derivative();
        RationalFunction {
            num: &n1 - &n2,
            den: &self.den * &self.den,
        }
    }

    pub fn poles(&self) -> Result<Vec<Root>> {
        if self.den.degree() == 0 {
            return Ok(Vec::new());
        }
        roots(&self.den)
    }

    fn normalized(self) -> Self {
        let lead = self.den.leading();
        if lead == 1.0 {
            return self;
        }
        RationalFunction {
            num: self.num.scale(1.0 / lead),
            den: self.den.scale(1.0 / lead),
        }
    }

    /// Cancel numerator roots lying within `CANCEL_TOL` (relative to
    /// `max(1, |z|)`) of a denominator root, up to the smaller multiplicity.
    fn reduced(self) -> Self {
        let mut r = self.normalized();
        if r.num.is_zero() {
            return RationalFunction {
                num: Polynomial::zero(),
                den: Polynomial::one(),
            };
        }
        if r.num.degree() == 0 || r.den.degree() == 0 {
            return r;
        }
        let (Ok(num_roots), Ok(den_roots)) = (roots(&r.num), roots(&r.den)) else {
            return r;
        };
        for cand in num_roots {
            if cand.value.im < 0.0 {
                continue;
            }
            let z = cand.value;
            let Some(partner) = den_roots
                .iter()
                .filter(|d| (d.value - z).norm() <= CANCEL_TOL * z.norm().max(1.0))
                .min_by(|a, b| (a.value - z).norm().total_cmp(&(b.value - z).norm()))
            else {
                continue;
            };
            // divide by the midpoint so neither side is favored
            let w = 0.5 * (z + partner.value);
            for _ in 0..cand.multiplicity.min(partner.multiplicity) {
                if w.im == 0.0 || cand.value.im == 0.0 {
                    if r.den.degree() < 1 || r.num.degree() < 1 {
                        break;
                    }
                    r.num = r.num.div_linear(w.re).0;
                    r.den = r.den.div_linear(w.re).0;
                } else {
                    if r.den.degree() < 2 || r.num.degree() < 2 {
                        break;
                    }
                    let b = -2.0 * w.re;
                    let c = w.norm_sqr();
                    r.num = r.num.div_quadratic(b, c).0;
                    r.den = r.den.div_quadratic(b, c).0;
                }
            }
        }
        r.normalized()
    }

    pub fn add(&self, other: &RationalFunction) -> RationalFunction {
        if self.den == other.den {
            return RationalFunction {
                num: &self.num + &other.num,
                den: self.den.clone(),
            }
            .reduced();
        }
        let n = &(&self.num * &other.den) + &(&other.num * &self.den);
        RationalFunction {
            num: n,
            den: &self.den * &other.den,
        }
        .reduced()
    }

    pub fn sub(&self, other: &RationalFunction) -> RationalFunction {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &RationalFunction) -> RationalFunction {
        RationalFunction {
            num: &self.num * &other.num,
            den: &self.den * &other.den,
        }
        .reduced()
    }

    pub fn div(&self, other: &RationalFunction) -> Result<RationalFunction> {
        if other.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        Ok(RationalFunction {
            num: &self.num * &other.den,
            den: &self.den * &other.num,
        }
        .reduced())
    }

    pub fn scale(&self, s: f64) -> RationalFunction {
        RationalFunction {
            num: self.num.scale(s),
            den: self.den.clone(),
        }
    }

    /// Integer power without intermediate reductions.
    pub fn powi(&self, n: u32) -> RationalFunction {
        RationalFunction {
            num: self.num.pow(n),
            den: self.den.pow(n),
        }
        .normalized()
    }
}

pub fn rational_arith(a: &RationalFunction, b: &RationalFunction, op: RationalOp) -> Result<RationalFunction> {
    Ok(match op {
        RationalOp::Add => a.add(b),
        RationalOp::Sub => a.sub(b),
        RationalOp::Mul => a.mul(b),
        RationalOp::Div => a.div(b)?,
    })
}
