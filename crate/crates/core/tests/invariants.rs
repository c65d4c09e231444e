mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use nmk::measure::{n_c_from_q, n_c_quadrature};
use nmk::montecarlo::simulate_q;
use nmk::poly_laplace::{deriv_exp_poly, eval_exp_poly, inverse_laplace, roots, Polynomial, RationalFunction};
use nmk::semimarkov::{critical_structure, q_hat, q_time_domain, TwoSiteFamily};
use nmk::stochastic::{
    apply, generator_from_maps, kolmogorov_distance, p_divisibility_check, MapFamily, ProbabilityVector,
};
use nmk::waiting_time::{laplace, sample, tree_mean, WaitingTimeSpec};

use common::{abs_eval_mp, arb_spec, talbot_mp};

fn worst_round_trip(r: &RationalFunction, span: f64) -> f64 {
    let f = inverse_laplace(r).unwrap();
    (1..=200)
        .into_par_iter()
        .map(|k| {
            let t = span * k as f64 / 200.0;
            (eval_exp_poly(&f, t).unwrap() - talbot_mp(r, t)).abs()
        })
        .reduce(|| 0.0, f64::max)
}

fn monic_residual(p: &Polynomial) -> f64 {
    let lead = p.leading();
    roots(p)
        .unwrap()
        .iter()
        .map(|r| abs_eval_mp(p.coeffs(), r.value.re, r.value.im) / lead.abs())
        .fold(0.0, f64::max)
}

/// Raw moments `E[τ^k]`, `k = 1..=4`, from derivatives of the transform at 0.
fn moments(spec: &WaitingTimeSpec) -> [f64; 4] {
    let mut r = laplace(spec).unwrap();
    let mut m = [0.0; 4];
    for (k, slot) in m.iter_mut().enumerate() {
        r = r.derivative();
        *slot = if k % 2 == 0 { -1.0 } else { 1.0 } * r.eval(0.0);
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn inversion_round_trip(spec in arb_spec()) {
        let span = 20.0 * spec.slowest_time_constant();
        let d = worst_round_trip(&q_hat(&spec).unwrap(), span);
        prop_assert!(d <= 1e-8, "q: {d:e} for {spec}");
        let d = worst_round_trip(&laplace(&spec).unwrap(), span);
        prop_assert!(d <= 1e-8, "density: {d:e} for {spec}");
    }

    #[test]
    fn sampling_matches_transform_moments(spec in arb_spec(), seed in any::<u64>()) {
        const N: usize = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws: Vec<f64> = (0..N).map(|_| sample(&spec, &mut rng)).collect();
        let [m1, m2, m3, m4] = moments(&spec);
        let n = N as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sigma2 = m2 - m1 * m1;
        let mu4 = m4 - 4.0 * m3 * m1 + 6.0 * m2 * m1 * m1 - 3.0 * m1.powi(4);
        prop_assert!((mean - m1).abs() <= 4.0 * (sigma2 / n).sqrt(), "mean {mean} vs {m1}");
        prop_assert!((var - sigma2).abs() <= 4.0 * ((mu4 - sigma2 * sigma2) / n).sqrt(), "variance {var} vs {sigma2}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_is_normalized_with_tree_mean(spec in arb_spec()) {
        let r = laplace(&spec).unwrap();
        prop_assert!((r.eval(0.0) - 1.0).abs() <= 1e-10);
        prop_assert!((-r.derivative().eval(0.0) - tree_mean(&spec)).abs() <= 1e-10);
    }

    #[test]
    fn erlang_equals_repeated_convolution(n in 2u32..=12, rate in 0.1f64..10.0, u in prop::collection::vec(0.0f64..20.0, 5)) {
        let a = laplace(&WaitingTimeSpec::erlang(n, rate)).unwrap();
        let b = laplace(&WaitingTimeSpec::conv(vec![WaitingTimeSpec::exp(rate); n as usize])).unwrap();
        for u in u {
            prop_assert!((a.eval(u) - b.eval(u)).abs() <= 1e-12);
        }
    }

    #[test]
    fn random_polynomial_roots_have_small_residual(
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..=10),
        lead in prop_oneof![0.5f64..1.0, -1.0f64..-0.5],
    ) {
        let mut c = coeffs;
        c.push(lead);
        prop_assert!(monic_residual(&Polynomial::new(c)) <= 1e-9);
    }

    #[test]
    fn q_denominator_roots_have_small_residual(spec in arb_spec()) {
        let r = q_hat(&spec).unwrap();
        prop_assert!(monic_residual(r.den()) <= 1e-9);
    }

    #[test]
    fn inverse_terms_are_conjugate_closed(spec in arb_spec()) {
        prop_assert!(q_time_domain(&spec).unwrap().exp_poly().is_conjugate_closed(1e-9));
        prop_assert!(inverse_laplace(&laplace(&spec).unwrap()).unwrap().is_conjugate_closed(1e-9));
    }

    #[test]
    fn derivative_matches_central_difference(spec in arb_spec(), ts in prop::collection::vec(1e-3f64..=10.0, 50)) {
        let f = q_time_domain(&spec).unwrap();
        let d = deriv_exp_poly(f.exp_poly());
        let h = 1e-6;
        for t in ts {
            let exact = eval_exp_poly(&d, t).unwrap();
            let fd = (f.q(t + h) - f.q(t - h)) / (2.0 * h);
            prop_assert!((exact - fd).abs() <= 1e-5 * exact.abs().max(1e-3), "t = {t}: {exact} vs {fd}");
        }
    }

    #[test]
    fn gamma_sign_opposes_growth_of_abs_q(spec in arb_spec(), seed in any::<u64>()) {
        let f = q_time_domain(&spec).unwrap();
        let cs = critical_structure(&f, 1e-10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checked = 0;
        while checked < 100 {
            let t = rng.random_range(0.0..cs.horizon.max(1.0));
            let (q, d) = (f.q(t), f.d_abs_q(t));
            if q.abs() < 1e-12 || d.abs() < 1e-14 {
                continue;
            }
            let g = f.gamma(t).value().unwrap();
            prop_assert_eq!(g.signum(), -d.signum(), "t = {}", t);
            checked += 1;
        }
    }

    #[test]
    fn two_site_maps_are_stochastic(spec in arb_spec(), ts in prop::collection::vec(0.0f64..30.0, 20)) {
        let fam = TwoSiteFamily::from_spec(&spec, 30.0).unwrap();
        for t in ts {
            prop_assert!(fam.map_at(t).is_ok(), "t = {}", t);
        }
    }

    #[test]
    fn rate_scaling_rescales_time(spec in arb_spec(), c in 0.1f64..10.0, ts in prop::collection::vec(0.0f64..20.0, 20)) {
        let f = q_time_domain(&spec).unwrap();
        let g = q_time_domain(&spec.scaled(c)).unwrap();
        for t in ts {
            prop_assert!((g.q(t) - f.q(t * c)).abs() <= 1e-9);
        }
    }

    #[test]
    fn n_c_is_invariant_under_rate_scaling(spec in arb_spec()) {
        let base = n_c_from_q(&q_time_domain(&spec).unwrap(), 1e-10).unwrap().n_c;
        for c in [0.1, 1.0, 10.0] {
            let scaled = n_c_from_q(&q_time_domain(&spec.scaled(c)).unwrap(), 1e-10).unwrap().n_c;
            prop_assert!((scaled - base).abs() <= 1e-8, "c = {c}: {scaled} vs {base}");
        }
    }

    #[test]
    fn interval_sum_equals_quadrature(spec in arb_spec()) {
        let f = q_time_domain(&spec).unwrap();
        let a = n_c_from_q(&f, 1e-10).unwrap().n_c;
        let b = n_c_quadrature(&f, 1e-10, 1e-12).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn every_pair_contracts_by_abs_q(spec in arb_spec(), t in 0.0f64..20.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let fam = TwoSiteFamily::from_spec(&spec, 20.0).unwrap();
        let q = fam.q_function().q(t).abs();
        let m = fam.map_at(t).unwrap();
        let e = |k| ProbabilityVector::basis(2, k);
        let dk = kolmogorov_distance(&apply(&m, &e(0)).unwrap(), &apply(&m, &e(1)).unwrap()).unwrap();
        prop_assert!((dk - q).abs() <= 1e-12);
        let (p1, p2) = (ProbabilityVector::new(vec![a, 1.0 - a]).unwrap(), ProbabilityVector::new(vec![b, 1.0 - b]).unwrap());
        let before = kolmogorov_distance(&p1, &p2).unwrap();
        let after = kolmogorov_distance(&apply(&m, &p1).unwrap(), &apply(&m, &p2).unwrap()).unwrap();
        prop_assert!((after - q * before).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generator_has_two_site_form(spec in arb_spec(), t in 0.05f64..10.0) {
        let fam = TwoSiteFamily::from_spec(&spec, 20.0).unwrap();
        let f = fam.q_function();
        prop_assume!(f.q(t).abs() > 1e-3);
        let g = f.gamma(t).value().unwrap();
        let l = generator_from_maps(&fam, t, 1e-5 * spec.slowest_time_constant()).unwrap();
        let want = [[-g, g], [g, -g]];
        for (r, row) in want.iter().enumerate() {
            for (c, w) in row.iter().enumerate() {
                prop_assert!((l.matrix()[(r, c)] - w).abs() <= 1e-6, "({r},{c}): {} vs {w}", l.matrix()[(r, c)]);
            }
        }
    }

    #[test]
    fn divisibility_breaks_exactly_where_abs_q_grows(spec in arb_spec()) {
        let f = q_time_domain(&spec).unwrap();
        let cs = critical_structure(&f, 1e-10).unwrap();
        let t_end = cs.horizon.max(1.0);
        let n = ((t_end / cs.grid_step).ceil() as usize).clamp(200, 4000);
        let grid: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
        let fam = TwoSiteFamily::new(f.clone(), t_end);
        let rep = p_divisibility_check(&fam, &grid).unwrap();
        let critical: Vec<f64> = cs.zeros.iter().chain(&cs.extrema).copied().collect();
        for w in grid.windows(2) {
            let (s, t) = (w[0], w[1]);
            if critical.iter().any(|&z| z >= s - 1e-12 && z <= t + 1e-12)
                || rep.indeterminate.contains(&s)
                || f.q(s).abs().min(f.q(t).abs()) < 1e-8
            {
                continue;
            }
            let flagged = rep.violations.iter().any(|v| v.s == s && v.t == t);
            let mid = 0.5 * (s + t);
            let grows = f.d_abs_q(mid) > 0.0;
            let negative = f.gamma(mid).value().unwrap() < 0.0;
            prop_assert_eq!(flagged, grows, "cell [{}, {}]", s, t);
            prop_assert_eq!(flagged, negative, "cell [{}, {}]", s, t);
        }
    }
}

#[test]
fn monte_carlo_within_three_over_root_m() {
    const M: u64 = 1_000_000;
    let mut battery = vec![WaitingTimeSpec::exp(1.0)];
    battery.extend([2, 5, 10].map(|n| WaitingTimeSpec::erlang(n, 1.0)));
    battery.extend([0.0, 0.1, 0.2, 0.5, 1.0].map(|mu| WaitingTimeSpec::mixture_pair(mu, 1.0, 5.0)));
    let bound = 3.0 / (M as f64).sqrt();
    for (i, spec) in battery.iter().enumerate() {
        let f = q_time_domain(spec).unwrap();
        let t_max = 3.0 * tree_mean(spec);
        let grid: Vec<f64> = (0..50).map(|k| t_max * k as f64 / 49.0).collect();
        let emp = simulate_q(spec, &grid, M, 77 + i as u64).unwrap();
        for (&t, &qh) in grid.iter().zip(&emp.q_hat) {
            assert!((f.q(t) - qh).abs() <= bound, "{spec} at t = {t}: {} vs {qh}", f.q(t));
        }
    }
}
