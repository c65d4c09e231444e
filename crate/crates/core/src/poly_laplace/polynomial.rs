use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Real polynomial in the Laplace variable, lowest degree first.
///
/// Trailing zero coefficients are trimmed on construction, so the leading
/// coefficient is nonzero unless the polynomial is identically zero (stored
/// as the single coefficient `0.0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![0.0] }
    }

    pub fn one() -> Self {
        Polynomial::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    /// `u - root`
    pub fn linear_root(root: f64) -> Self {
        Polynomial::new(vec![-root, 1.0])
    }

    /// The monomial `u`.
    pub fn var() -> Self {
        Polynomial::new(vec![0.0, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    /// Largest coefficient magnitude.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    pub fn eval_complex(&self, u: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * u + c)
    }

    /// Sum of `|a_i| |u|^i`, the natural scale for rounding error in `eval`.
    pub fn abs_eval(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Polynomial::zero();
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Polynomial::one();
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Polynomial with the given coefficients divided by `u`, dropping the
    /// constant term. Returns the dropped remainder alongside.
    pub fn div_by_var(&self) -> (Polynomial, f64) {
        if self.coeffs.len() == 1 {
            return (Polynomial::zero(), self.coeffs[0]);
        }
        (Polynomial::new(self.coeffs[1..].to_vec()), self.coeffs[0])
    }

    /// Divide by `u - r` (synthetic division). Returns quotient and remainder.
    pub fn div_linear(&self, r: f64) -> (Polynomial, f64) {
        let n = self.coeffs.len();
        if n == 1 {
            return (Polynomial::zero(), self.coeffs[0]);
        }
        let mut q = vec![0.0; n - 1];
        let mut carry = self.coeffs[n - 1];
        for i in (0..n - 1).rev() {
            q[i] = carry;
            carry = self.coeffs[i] + carry * r;
        }
        (Polynomial::new(q), carry)
    }

    /// Divide by `u^2 + b u + c`. Returns quotient and the linear remainder.
    pub fn div_quadratic(&self, b: f64, c: f64) -> (Polynomial, Polynomial) {
        let mut rem = self.coeffs.clone();
        let n = rem.len();
        if n < 3 {
            return (Polynomial::zero(), self.clone());
        }
        let mut q = vec![0.0; n - 2];
        for i in (2..n).rev() {
            let lead = rem[i];
            q[i - 2] = lead;
            rem[i] = 0.0;
            rem[i - 1] -= lead * b;
            rem[i - 2] -= lead * c;
        }
        rem.truncate(2);
        (Polynomial::new(q), Polynomial::new(rem))
    }

    /// Taylor coefficients `p^{(j)}(c) / j!` around a complex point.
    pub fn taylor_at(&self, c: Complex64) -> Vec<Complex64> {
        let mut b: Vec<Complex64> = self.coeffs.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        let n = b.len();
        // repeated synthetic division (Horner shift)
        for k in 0..n {
            for i in (k..n - 1).rev() {
                let next = b[i + 1];
                b[i] += c * next;
            }
        }
        b
    }

    /// Rounding-error scale for each Taylor coefficient at `c`:
    /// `sum_i |a_i| C(i, j) |c|^(i-j)`.
    pub fn taylor_scale(&self, c: Complex64) -> Vec<f64> {
        let abs = Polynomial {
            coeffs: self.coeffs.iter().map(|a| a.abs()).collect(),
        };
        abs.taylor_at(Complex64::new(c.norm(), 0.0))
            .into_iter()
            .map(|z| z.re)
            .collect()
    }

    /// Polynomial with the given (complex, conjugate-closed) roots times `lead`.
    pub fn from_roots(lead: f64, roots: &[Complex64]) -> Polynomial {
        let mut c = vec![Complex64::new(lead, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (i, ci) in c.iter().enumerate() {
                next[i + 1] += ci;
                next[i] -= ci * r;
            }
            c = next;
        }
        Polynomial::new(c.into_iter().map(|z| z.re).collect())
    }
}

impl Default for Polynomial {
    fn default() -> Self {
        Polynomial::zero()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 && self.coeffs.len() > 1 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}u")?,
                _ => write!(f, "{c}u^{i}")?,
            }
        }
        Ok(())
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &'a Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&0.0) + rhs.coeffs.get(i).unwrap_or(&0.0))
                .collect(),
        )
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &'a Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&0.0) - rhs.coeffs.get(i).unwrap_or(&0.0))
                .collect(),
        )
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &'a Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

/// Arithmetic selector for [`poly_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyOp {
    Add,
    Sub,
    Mul,
}

pub fn poly_arith(a: &Polynomial, b: &Polynomial, op: PolyOp) -> Polynomial {
    match op {
        PolyOp::Add => a + b,
        PolyOp::Sub => a - b,
        PolyOp::Mul => a * b,
    }
}
