//! Double-double (compensated) polynomial evaluation.
//!
//! Polynomials whose roots sit far from the origin, e.g. `(u+1)^20 + 1`, lose
//! most of their digits in plain Horner evaluation near those roots. Carrying
//! each accumulator as an unevaluated sum `hi + lo` restores roughly twice the
//! working precision, which is what root polishing and residue extraction need.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = two_sum(s, e);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn mul_f(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct CDd {
    re: Dd,
    im: Dd,
}

impl CDd {
    fn from_real(x: f64) -> Self {
        CDd {
            re: Dd::from(x),
            im: Dd::default(),
        }
    }

    fn mul_c(self, z: Complex64) -> CDd {
        CDd {
            re: self.re.mul_f(z.re).add(self.im.mul_f(z.im).neg()),
            im: self.re.mul_f(z.im).add(self.im.mul_f(z.re)),
        }
    }

    fn add(self, o: CDd) -> CDd {
        CDd {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    fn value(self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// `p(z)` for real coefficients (lowest degree first).
pub(crate) fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = CDd::default();
    for &a in coeffs.iter().rev() {
        acc = acc.mul_c(z).add(CDd::from_real(a));
    }
    acc.value()
}

/// Taylor coefficients `p^{(j)}(c)/j!`.
pub(crate) fn taylor(coeffs: &[f64], c: Complex64) -> Vec<Complex64> {
    let mut b: Vec<CDd> = coeffs.iter().map(|&a| CDd::from_real(a)).collect();
    let n = b.len();
    for k in 0..n {
        for i in (k..n - 1).rev() {
            b[i] = b[i].add(b[i + 1].mul_c(c));
        }
    }
    b.into_iter().map(CDd::value).collect()
}
