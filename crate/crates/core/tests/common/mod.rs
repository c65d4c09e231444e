//! Shared oracles and generators for the integration tests.

#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};
use proptest::prelude::*;

use nmk::poly_laplace::RationalFunction;
use nmk::waiting_time::WaitingTimeSpec;

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Clone)]
struct C {
    re: BigFloat,
    im: BigFloat,
}

impl C {
    fn real(x: f64, p: usize) -> C {
        C {
            re: BigFloat::from_f64(x, p),
            im: BigFloat::from_f64(0.0, p),
        }
    }

    fn add(&self, o: &C, p: usize) -> C {
        C {
            re: self.re.add(&o.re, p, RM),
            im: self.im.add(&o.im, p, RM),
        }
    }

    fn mul(&self, o: &C, p: usize) -> C {
        let re = self.re.mul(&o.re, p, RM).sub(&self.im.mul(&o.im, p, RM), p, RM);
        let im = self.re.mul(&o.im, p, RM).add(&self.im.mul(&o.re, p, RM), p, RM);
        C { re, im }
    }

    fn div(&self, o: &C, p: usize) -> C {
        let d = o.re.mul(&o.re, p, RM).add(&o.im.mul(&o.im, p, RM), p, RM);
        let re = self.re.mul(&o.re, p, RM).add(&self.im.mul(&o.im, p, RM), p, RM);
        let im = self.im.mul(&o.re, p, RM).sub(&self.re.mul(&o.im, p, RM), p, RM);
        C {
            re: re.div(&d, p, RM),
            im: im.div(&d, p, RM),
        }
    }

    fn exp(&self, p: usize, cc: &mut Consts) -> C {
        let m = self.re.exp(p, RM, cc);
        C {
            re: m.mul(&self.im.cos(p, RM, cc), p, RM),
            im: m.mul(&self.im.sin(p, RM, cc), p, RM),
        }
    }
}

fn horner(coeffs: &[f64], z: &C, p: usize) -> C {
    let mut acc = C::real(0.0, p);
    for &c in coeffs.iter().rev() {
        acc = acc.mul(z, p).add(&C::real(c, p), p);
    }
    acc
}

/// `|p(z)|` evaluated in 256-bit arithmetic, so the result is the value at
/// the given point rather than Horner rounding noise.
pub fn abs_eval_mp(coeffs: &[f64], re: f64, im: f64) -> f64 {
    let p = 256;
    let z = C {
        re: BigFloat::from_f64(re, p),
        im: BigFloat::from_f64(im, p),
    };
    let v = horner(coeffs, &z, p);
    let m2 = v.re.mul(&v.re, p, RM).add(&v.im.mul(&v.im, p, RM), p, RM);
    m2.to_string().parse::<f64>().expect("decimal float").sqrt()
}

/// Upper bound on the moduli of all roots: the positive root of
/// `|a_n| x^n - sum_{k<n} |a_k| x^k`.
pub fn cauchy_radius(coeffs: &[f64]) -> f64 {
    let n = coeffs.len() - 1;
    let lead = coeffs[n].abs();
    let g = |x: f64| lead * x.powi(n as i32) - (0..n).map(|k| coeffs[k].abs() * x.powi(k as i32)).sum::<f64>();
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Root radius bound tightened by Graeffe squaring: the Cauchy bound of the
/// polynomial whose roots are the `2^k`-th powers, taken to the `2^-k`, with
/// a margin for rounding. Overestimates by at most a few percent.
pub fn root_radius(coeffs: &[f64]) -> f64 {
    const SQUARINGS: u32 = 6;
    let mut c = coeffs.to_vec();
    let mut log_scale = 0.0;
    for _ in 0..SQUARINGS {
        // substitute x -> s x so the coefficients stay representable
        let s = cauchy_radius(&c);
        for (k, a) in c.iter_mut().enumerate() {
            *a *= s.powi(k as i32);
        }
        log_scale = 2.0 * (log_scale + s.ln());
        let n = c.len() - 1;
        let mut q = vec![0.0; n + 1];
        for i in 0..=n {
            for j in 0..=n {
                if (i + j) % 2 == 0 {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    q[(i + j) / 2] += sign * c[i] * c[j];
                }
            }
        }
        let m = q.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        c = q.into_iter().map(|a| a / m).collect();
    }
    1.05 * ((log_scale + cauchy_radius(&c).ln()) / 2f64.powi(SQUARINGS as i32)).exp()
}

/// Inverse Laplace transform of a strictly proper rational function with
/// poles in the closed left half-plane, by the cotangent Talbot contour in
/// multiprecision.
///
/// The node count grows with `t` times the root radius of the denominator so
/// every pole is enclosed however oscillatory the inverse is, and the working
/// precision grows with the node count to absorb the `e^{0.171 M}`
/// cancellation. No pole is ever located.
pub fn talbot_mp(r: &RationalFunction, t: f64) -> f64 {
    assert!(t > 0.0 && r.is_strictly_proper());
    let rho = root_radius(r.den().coeffs());
    let m = ((4.0 * rho * t).ceil() as usize).max(64).next_multiple_of(2);
    let p = (0.25 * m as f64) as usize + 192;
    let mut cc = Consts::new().expect("constant cache");
    let bf = |x: f64| BigFloat::from_f64(x, p);
    let pi = cc.pi(p, RM);
    let h = pi.mul(&bf(2.0), p, RM).div(&bf(m as f64), p, RM);
    let scale = bf(m as f64).div(&bf(t), p, RM);
    let (sigma, mu, alpha, nu) = (bf(-0.6122), bf(0.5017), bf(0.6407), bf(0.2645));
    let tt = bf(t);
    let mut acc = C::real(0.0, p);
    for k in 0..m / 2 {
        let theta = bf(k as f64 + 0.5).mul(&h, p, RM);
        let at = alpha.mul(&theta, p, RM);
        let (s, c) = (at.sin(p, RM, &mut cc), at.cos(p, RM, &mut cc));
        let cot = c.div(&s, p, RM);
        let z = C {
            re: scale.mul(&sigma.add(&mu.mul(&theta, p, RM).mul(&cot, p, RM), p, RM), p, RM),
            im: scale.mul(&nu.mul(&theta, p, RM), p, RM),
        };
        let dre = mu
            .mul(&cot, p, RM)
            .sub(&mu.mul(&at, p, RM).div(&s.mul(&s, p, RM), p, RM), p, RM);
        let dz = C {
            re: scale.mul(&dre, p, RM),
            im: scale.mul(&nu, p, RM),
        };
        let f = horner(r.num().coeffs(), &z, p).div(&horner(r.den().coeffs(), &z, p), p);
        let ezt = C {
            re: z.re.mul(&tt, p, RM),
            im: z.im.mul(&tt, p, RM),
        }
        .exp(p, &mut cc);
        acc = acc.add(&ezt.mul(&f, p).mul(&dz, p), p);
    }
    // (1/(2πi)) ∫ over the upper half, doubled: Re(acc / i) = Im(acc)
    let v = acc.im.mul(&h, p, RM).div(&pi, p, RM);
    v.to_string().parse().expect("decimal float")
}

/// Random waiting-time specs with rates in `[0.3, 4]`, at most two levels of
/// nesting and transforms of modest degree.
pub fn arb_spec() -> impl Strategy<Value = WaitingTimeSpec> {
    let rate = 0.3f64..4.0;
    let leaf = prop_oneof![
        rate.clone().prop_map(WaitingTimeSpec::exp),
        (1u32..=4, rate.clone()).prop_map(|(n, r)| WaitingTimeSpec::erlang(n, r)),
    ];
    leaf.prop_recursive(2, 6, 2, move |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2).prop_map(WaitingTimeSpec::conv),
            (0.05f64..0.95, inner.clone(), inner)
                .prop_map(|(w, a, b)| WaitingTimeSpec::mix(vec![(w, a), (1.0 - w, b)])),
        ]
    })
}
