use std::f64::consts::PI;

use nmk::montecarlo::{compare, n_c_on_intervals, simulate_q, COMPARE_THRESHOLD};
use nmk::semimarkov::{critical_structure, q_time_domain};
use nmk::waiting_time::{mean, parse_wtd as parse, WaitingTimeSpec};

const M: u64 = 1_000_000;

fn battery() -> Vec<WaitingTimeSpec> {
    let mut v = vec![WaitingTimeSpec::exp(1.0)];
    for n in [2, 5, 10] {
        v.push(WaitingTimeSpec::erlang(n, 1.0));
    }
    for mu in [0.0, 0.1, 0.2, 0.5, 1.0] {
        let h = WaitingTimeSpec::mixture_pair(mu, 1.0, 5.0);
        v.push(WaitingTimeSpec::conv(vec![h.clone(), h]));
    }
    v
}

#[test]
fn starts_at_one() {
    let spec = parse("erlang(3, 2)").unwrap();
    let emp = simulate_q(&spec, &[0.0, 0.0, 1.0], 1, 42).unwrap();
    assert_eq!(&emp.q_hat[..2], &[1.0, 1.0]);
    assert_eq!(emp.stderr[0], 0.0);
    let c = compare(&emp, &q_time_domain(&spec).unwrap());
    assert!(c.t > 0.0 || c.max_deviation == 0.0);
    let one = simulate_q(&spec, &[0.0], 1, 42).unwrap();
    assert_eq!(compare(&one, &q_time_domain(&spec).unwrap()).max_deviation, 0.0);
}

#[test]
fn seed_determinism() {
    let spec = parse("conv(mix(0.1:exp(1),0.9:exp(5)),mix(0.1:exp(1),0.9:exp(5)))").unwrap();
    let grid: Vec<f64> = (0..20).map(|i| 0.2 * i as f64).collect();
    let a = simulate_q(&spec, &grid, 50_000, 9).unwrap();
    let b = simulate_q(&spec, &grid, 50_000, 9).unwrap();
    assert_eq!(a, b);
    let c = simulate_q(&spec, &grid, 50_000, 10).unwrap();
    assert_ne!(a.q_hat, c.q_hat);
}

#[test]
fn thread_layout_does_not_matter() {
    let spec = WaitingTimeSpec::erlang(2, 1.0);
    let grid = [0.5, 1.0, 2.0, PI];
    let pooled = simulate_q(&spec, &grid, 20_000, 3).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| simulate_q(&spec, &grid, 20_000, 3).unwrap());
    assert_eq!(pooled, single);
}

#[test]
fn empirical_invariants() {
    let spec = WaitingTimeSpec::erlang(2, 1.0);
    let emp = simulate_q(&spec, &[0.1, 1.0, 3.0], 1000, 5).unwrap();
    for (q, s) in emp.q_hat.iter().zip(&emp.stderr) {
        assert!(q.abs() <= 1.0);
        assert!((s - ((1.0 - q * q) / 1000.0).sqrt()).abs() < 1e-15);
    }
}

#[test]
fn exponential_and_erlang_point_values() {
    let emp = simulate_q(&WaitingTimeSpec::exp(1.0), &[0.5], M, 1).unwrap();
    assert!((emp.q_hat[0] - (-1.0f64).exp()).abs() < 3e-3);
    let emp = simulate_q(&WaitingTimeSpec::erlang(2, 1.0), &[PI], M, 2).unwrap();
    assert!((emp.q_hat[0] + (-PI).exp()).abs() < 3e-3);
}

#[test]
fn battery_agrees_with_analytic_q() {
    for (i, spec) in battery().iter().enumerate() {
        let qf = q_time_domain(spec).unwrap();
        let t_max = 3.0 * mean(spec).unwrap();
        let grid: Vec<f64> = (0..50).map(|k| t_max * k as f64 / 49.0).collect();
        let emp = simulate_q(spec, &grid, M, 1000 + i as u64).unwrap();
        let c = compare(&emp, &qf);
        assert!(c.passed(), "{spec}: {c:?}");
    }
}

#[test]
fn mismatch_is_detected() {
    let grid: Vec<f64> = (1..=20).map(|k| 0.1 * k as f64).collect();
    let emp = simulate_q(&WaitingTimeSpec::exp(1.0), &grid, 100_000, 4).unwrap();
    let c = compare(&emp, &q_time_domain(&WaitingTimeSpec::exp(5.0)).unwrap());
    assert!(c.max_deviation > 10.0 * COMPARE_THRESHOLD, "{c:?}");
}

#[test]
fn sign_changes_follow_analytic_zeros() {
    // near-deterministic waiting time of mean 1: parity flips close to t = 1, 2, 3
    let spec = WaitingTimeSpec::erlang(20, 20.0);
    let qf = q_time_domain(&spec).unwrap();
    let zeros = critical_structure(&qf, 1e-10).unwrap().zeros;
    let grid: Vec<f64> = (1..=700).map(|k| 0.005 * k as f64).collect();
    let emp = simulate_q(&spec, &grid, 100_000, 8).unwrap();
    let signs: Vec<(f64, f64)> = grid
        .iter()
        .zip(emp.q_hat.iter().zip(&emp.stderr))
        .filter(|(_, (q, s))| q.abs() > 5.0 * **s)
        .map(|(&t, (&q, _))| (t, q.signum()))
        .collect();
    let mut crossings = 0;
    for w in signs.windows(2) {
        if w[0].1 != w[1].1 {
            let mid = 0.5 * (w[0].0 + w[1].0);
            let nearest = zeros.iter().map(|z| (z - mid).abs()).fold(f64::INFINITY, f64::min);
            assert!(nearest < 0.1, "crossing at {mid}, zeros {zeros:?}");
            crossings += 1;
        }
    }
    assert!(crossings >= 3, "{crossings}");
}

#[test]
fn empirical_measure_matches_interval_sum() {
    for spec in [
        WaitingTimeSpec::exp(1.0),
        WaitingTimeSpec::erlang(2, 1.0),
        WaitingTimeSpec::erlang(5, 1.0),
    ] {
        let qf = q_time_domain(&spec).unwrap();
        let cs = critical_structure(&qf, 1e-10).unwrap();
        let exact = nmk::measure::n_c_from_q(&qf, 1e-10).unwrap();
        let emp = n_c_on_intervals(&spec, &exact.increase_intervals, M, 77).unwrap();
        let k = cs.increase_intervals.len() as f64;
        let bound = 5.0 * (3.0 / (M as f64).sqrt()) * k;
        assert!(
            (emp - exact.n_c).abs() <= bound,
            "{spec}: {emp} vs {} (bound {bound})",
            exact.n_c
        );
    }
}
