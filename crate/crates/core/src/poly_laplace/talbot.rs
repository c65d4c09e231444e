//! Numerical inverse Laplace transform on a Talbot-type contour.
//!
//! Serves as the independent oracle for [`super::inverse_laplace`]: it only
//! evaluates the transform along a deformed Bromwich contour and never needs
//! pole locations.
//!
//! The contour is the optimized cotangent form
//! `z(θ) = (M/t) (-0.6122 + 0.5017 θ cot(0.6407 θ) + 0.2645 i θ)`, sampled
//! with the midpoint rule on `(-π, π)`. With `M = 64` nodes the
//! discretization error is far below double-precision rounding, and the
//! largest amplification factor is `e^{0.171 M} ≈ 6e4`, giving roughly
//! 1e-10 absolute accuracy for rational transforms whose poles are enclosed
//! (`|Im p| t` up to about 40 for `Re p <= 0`).

use num_complex::Complex64;

use super::RationalFunction;
use crate::error::{Error, Result};

pub const TALBOT_NODES: usize = 64;

const SIGMA: f64 = -0.6122;
const MU: f64 = 0.5017;
const ALPHA: f64 = 0.6407;
const NU: f64 = 0.2645;

/// Inverse transform of `r` at time `t > 0`.
pub fn talbot_inverse(r: &RationalFunction, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::TalbotDomain);
    }
    if !r.is_strictly_proper() {
        return Err(Error::ImproperRational);
    }
    Ok(talbot_with(|z| r.eval_complex(z), t, TALBOT_NODES))
}

/// Talbot inversion of an arbitrary transform `f` that is real on the real
/// axis, using `m` nodes (must be even).
pub fn talbot_with<F: Fn(Complex64) -> Complex64>(f: F, t: f64, m: usize) -> f64 {
    let scale = m as f64 / t;
    let h = 2.0 * std::f64::consts::PI / m as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    // conjugate symmetry: nodes with θ > 0 only, real part doubled
    for k in 0..m / 2 {
        let theta = (k as f64 + 0.5) * h;
        let (s, c) = (ALPHA * theta).sin_cos();
        let cot = c / s;
        let z = scale * Complex64::new(SIGMA + MU * theta * cot, NU * theta);
        let dz = scale * Complex64::new(MU * cot - MU * ALPHA * theta / (s * s), NU);
        acc += (z * t).exp() * f(z) * dz;
    }
    // f(t) = (1/(2πi)) ∫ e^{zt} F(z) z'(θ) dθ
    (acc / Complex64::new(0.0, 1.0)).re * h / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_laplace::Polynomial;

    fn rf(n: &[f64], d: &[f64]) -> RationalFunction {
        RationalFunction::new(Polynomial::new(n.to_vec()), Polynomial::new(d.to_vec())).unwrap()
    }

    #[test]
    fn known_pairs() {
        let v = talbot_inverse(&rf(&[1.0], &[2.0, 1.0]), 1.0).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-10);
        assert!((v - 0.135335).abs() < 1e-6);
        // exponential-case q with λ = 1 at t = 0.5
        let v = talbot_inverse(&rf(&[1.0], &[2.0, 1.0]), 0.5).unwrap();
        assert!((v - 0.367879).abs() < 1e-6);
        let v = talbot_inverse(&rf(&[1.0], &[0.0, 0.0, 1.0]), 3.0).unwrap();
        assert!((v - 3.0).abs() < 1e-9);
    }

    #[test]
    fn accuracy_target() {
        let r = rf(&[2.0, 1.0], &[2.0, 2.0, 1.0]);
        for i in 1..=100 {
            let t = i as f64 * 0.2;
            let exact = (-t).exp() * (t.cos() + t.sin());
            assert!((talbot_inverse(&r, t).unwrap() - exact).abs() < 1e-10, "t = {t}");
        }
        // fast poles up to modulus 100
        let r = rf(&[1.0], &[100.0, 1.0]);
        for t in [0.01, 0.05, 0.2] {
            assert!((talbot_inverse(&r, t).unwrap() - (-100.0 * t).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn domain_errors() {
        let r = rf(&[1.0], &[2.0, 1.0]);
        assert_eq!(talbot_inverse(&r, 0.0), Err(Error::TalbotDomain));
        assert_eq!(talbot_inverse(&r, -1.0), Err(Error::TalbotDomain));
    }
}
