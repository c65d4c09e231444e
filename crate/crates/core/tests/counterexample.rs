use std::f64::consts::PI;

use nmk::counterexample::{
    demonstrate, dk_closed_form, validate_model, ModelCondition, RateFunction, TwoRateModel, ODE_AGREEMENT,
    TRAJECTORY_POINTS,
};
use nmk::stochastic::{Condition, ProbabilityVector};
use nmk::Error;
use proptest::prelude::*;

fn model(g1: &str, g2: &str) -> TwoRateModel {
    TwoRateModel::new(g1.parse().unwrap(), g2.parse().unwrap())
}

#[test]
fn default_model_is_a_valid_counterexample() {
    let m = TwoRateModel::default();
    let grid = m.sampling_grid(4.0 * PI).unwrap();
    let v = validate_model(&m, &grid).unwrap();
    assert!(v.valid && v.genuine && v.flag.is_none(), "{v:?}");
    assert!(v.quadrature_discrepancy.unwrap() <= 1e-9);
    // γ₂ < 0 exactly on (2π/3, 4π/3) mod 2π
    for &t in &grid {
        let inside = (t % (2.0 * PI) - PI).abs() < PI / 3.0;
        if ((t % (2.0 * PI) - PI).abs() - PI / 3.0).abs() > 1e-9 {
            assert_eq!(m.gamma2.eval(t) < 0.0, inside, "t = {t}");
        }
    }
}

#[test]
fn cosine_rate_breaks_the_integral_condition() {
    let m = model("const:1", "cos:1,0");
    let v = validate_model(&m, &m.sampling_grid(2.0 * PI).unwrap()).unwrap();
    assert!(!v.valid);
    assert_eq!(v.violations.len(), 1);
    let w = v.violations[0];
    assert_eq!(w.condition, ModelCondition::Gamma2IntegralNonnegative);
    assert!(w.to_string().starts_with("∫γ₂ < 0 at t ≈ 4.7"), "{w}");
    assert!((w.value + 1.0).abs() < 1e-8);
}

#[test]
fn constant_rates_are_flagged() {
    let m = model("const:1", "const:1");
    let v = validate_model(&m, &m.sampling_grid(5.0).unwrap()).unwrap();
    assert!(v.valid && !v.genuine);
    assert_eq!(v.flag.as_deref(), Some("not a counterexample: γ₂ never negative"));
    let err = demonstrate(&m, 5.0).unwrap_err();
    assert!(matches!(err, Error::NotCounterexample(_)));
    assert!(err.to_string().starts_with("not a counterexample"));
}

#[test]
fn pointwise_violations_are_reported() {
    let m = model("const:-0.1", "const:1");
    let v = validate_model(&m, &m.sampling_grid(1.0).unwrap()).unwrap();
    assert!(v
        .violations
        .iter()
        .any(|x| x.condition == ModelCondition::Gamma1Nonnegative));
    let m = model("const:0.2", "sin:1,0.5");
    let v = validate_model(&m, &m.sampling_grid(7.0).unwrap()).unwrap();
    let s = v
        .violations
        .iter()
        .find(|x| x.condition == ModelCondition::SumNonnegative)
        .unwrap();
    assert!((s.t - PI).abs() < 1e-3 && (s.value + 0.3).abs() < 1e-6);
    assert!(demonstrate(&m, 7.0).is_err());
}

#[test]
fn closed_form_matches_analytic_integral() {
    let m = TwoRateModel::default();
    let (e1, e2) = (ProbabilityVector::basis(2, 0), ProbabilityVector::basis(2, 1));
    for i in 0..=50 {
        let t = 4.0 * PI * i as f64 / 50.0;
        let exact = (-(1.5 * t + t.sin())).exp();
        assert!((dk_closed_form(&m, (&e1, &e2), t).unwrap() - exact).abs() < 1e-10);
    }
    assert_eq!(dk_closed_form(&m, (&e1, &e2), 0.0).unwrap(), 1.0);
}

#[test]
fn default_demonstration() {
    let m = TwoRateModel::default();
    let r = demonstrate(&m, 4.0 * PI).unwrap();
    assert_eq!(r.verdict, "D_K monotone: yes; P-divisible: no");
    assert!((r.witness.t - PI).abs() < 1e-3, "{}", r.witness);
    assert!((r.witness.entry.value + 0.5).abs() < 1e-6);
    assert_eq!(r.witness.entry.condition, Condition::NegativeOffDiagonal);
    assert_eq!((r.witness.entry.row, r.witness.entry.col), (0, 1));
    assert!(r.max_deviation <= ODE_AGREEMENT, "{}", r.max_deviation);
    for s in &r.trajectory {
        assert!((s.closed_form - (-(1.5 * s.t + s.t.sin())).exp()).abs() <= 1e-7);
    }
    assert_eq!(r.n_c_general, 0.0);
    // p₁ from (0,1) is e^{−Γ}∫γ₂e^{Γ}; an mpmath evaluation puts its minimum
    // at -0.31476729 for t = 3.88020
    assert!((r.min_probability + 0.31476729).abs() < 1e-5, "{}", r.min_probability);
    assert!(!r.positivity_preserved);
}

/// Positivity under the stated conditions, checked on the shipped default.
/// The integral condition on γ₂ alone does not imply it (see
/// `default_demonstration`), so this fails.
#[test]
fn valid_models_preserve_positivity() {
    let m = TwoRateModel::default();
    assert!(validate_model(&m, &m.sampling_grid(4.0 * PI).unwrap()).unwrap().valid);
    let r = demonstrate(&m, 4.0 * PI).unwrap();
    assert!(r.min_probability >= -1e-9, "min probability {}", r.min_probability);
}

/// Smallest `p₁(t)` started from `(0,1)`, by a trapezoid recursion on
/// `∫₀ᵗ γ₂(s) e^{Γ(s)−Γ(t)} ds` with `Γ` in closed form, sampled every
/// `stride` steps.
fn min_p1_from_second_site(m: &TwoRateModel, t_end: f64, n: usize, stride: usize) -> f64 {
    let big_gamma = |t: f64| m.total_integral(t).unwrap();
    let h = t_end / n as f64;
    let (mut j, mut best) = (0.0f64, 0.0f64);
    for k in 0..n {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        let decay = (big_gamma(a) - big_gamma(b)).exp();
        j = decay * j + 0.5 * h * (m.gamma2.eval(a) * decay + m.gamma2.eval(b));
        if (k + 1) % stride == 0 {
            best = best.min(j);
        }
    }
    best
}

#[test]
fn tabulated_rate_demonstration() {
    // a triangular dip of γ₂ below zero with nonnegative running integral
    let g2 = RateFunction::tabulated(vec![0.0, 1.0, 1.5, 2.0, 3.0], vec![1.0, 1.0, -0.4, 1.0, 1.0]).unwrap();
    let m = TwoRateModel::new(RateFunction::constant(1.0), g2);
    let r = demonstrate(&m, 3.0).unwrap();
    assert!(r.dk_monotone && !r.p_divisible);
    assert!((r.witness.t - 1.5).abs() < 1e-12 && (r.witness.entry.value + 0.4).abs() < 1e-12);
    assert!(r.max_deviation <= ODE_AGREEMENT);
    assert!(r.min_probability >= -1e-9);
    assert!(r.positivity_preserved);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn valid_models_decay_monotonically(
        g1 in 0.0f64..2.0,
        amp in 0.0f64..1.5,
        omega in 0.3f64..3.0,
        off_frac in 0.0f64..1.0,
    ) {
        // offset in [0, amp] makes γ₂ dip below zero for most draws; only
        // draws passing validation are kept
        let m = TwoRateModel::new(RateFunction::constant(g1), RateFunction::sinusoid(off_frac * amp, amp, omega));
        let t_end = 2.0 * 2.0 * PI / omega;
        let v = validate_model(&m, &m.sampling_grid(t_end).unwrap()).unwrap();
        prop_assume!(v.valid);
        let (e1, e2) = (ProbabilityVector::basis(2, 0), ProbabilityVector::basis(2, 1));
        let mut prev = f64::INFINITY;
        for i in 0..=200 {
            let d = dk_closed_form(&m, (&e1, &e2), t_end * i as f64 / 200.0).unwrap();
            prop_assert!(d - prev <= 1e-12);
            prev = d;
        }
        if v.genuine {
            let r = demonstrate(&m, t_end).unwrap();
            prop_assert!(r.max_deviation <= ODE_AGREEMENT, "{}", r.max_deviation);
            prop_assert!(r.dk_monotone);
            prop_assert_eq!(r.n_c_general, 0.0);
            let oracle = min_p1_from_second_site(&m, t_end, 20 * TRAJECTORY_POINTS, 20);
            prop_assert!((r.min_probability - oracle).abs() < 1e-6, "{} vs {}", r.min_probability, oracle);
        }
    }
}
