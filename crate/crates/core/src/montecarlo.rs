//! Trajectory-level estimate of `q(t) = P(even jumps by t) − P(odd jumps by t)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel;
use crate::semimarkov::QFunction;
use crate::waiting_time::{ensure_valid, sample, WaitingTimeSpec};

/// Deviations above this many standard errors count as disagreement.
pub const COMPARE_THRESHOLD: f64 = 4.0;

const CHUNK: u64 = 4096;

/// Renewal epochs of one trajectory, up to the first one past the horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpTrajectory {
    pub jump_times: Vec<f64>,
}

impl JumpTrajectory {
    /// Draw epochs until one exceeds `horizon` (that one is kept).
    pub fn simulate(spec: &WaitingTimeSpec, horizon: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut jump_times = Vec::new();
        let mut t = 0.0;
        loop {
            t += sample(spec, rng);
            jump_times.push(t);
            if t > horizon {
                return JumpTrajectory { jump_times };
            }
        }
    }

    /// Jumps at or before `t`.
    pub fn count(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&x| x <= t)
    }
}

/// Stream `index` of the generator seeded by `seed`; trajectory `i` always
/// uses stream `i`, whatever the thread layout.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalQ {
    pub grid: Vec<f64>,
    pub q_hat: Vec<f64>,
    /// `sqrt((1 − q̂²)/n_traj)`.
    pub stderr: Vec<f64>,
    pub n_traj: u64,
    pub seed: u64,
}

/// Estimate `q` on `grid` from `n_traj` simulated trajectories.
pub fn simulate_q(spec: &WaitingTimeSpec, grid: &[f64], n_traj: u64, seed: u64) -> Result<EmpiricalQ> {
    ensure_valid(spec)?;
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] >= w[0])) || !(grid[0] >= 0.0) || !grid[grid.len() - 1].is_finite() {
        return Err(Error::InvalidArgument(
            "grid must be sorted, finite and nonnegative".into(),
        ));
    }
    if n_traj == 0 {
        return Err(Error::InvalidArgument("n_traj must be at least 1".into()));
    }
    let horizon = grid[grid.len() - 1];
    let n_chunks = n_traj.div_ceil(CHUNK);

    // Integer tallies make the reduction order irrelevant.
    let even: Vec<u64> = parallel::install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut tally = vec![0u64; grid.len()];
                for i in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
                    let traj = JumpTrajectory::simulate(spec, horizon, &mut trajectory_rng(seed, i));
                    let mut k = 0;
                    for (slot, &t) in tally.iter_mut().zip(grid) {
                        while traj.jump_times[k] <= t {
                            k += 1;
                        }
                        if k % 2 == 0 {
                            *slot += 1;
                        }
                    }
                }
                tally
            })
            .reduce(
                || vec![0u64; grid.len()],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    });

    let m = n_traj as f64;
    let q_hat: Vec<f64> = even.iter().map(|&e| (2.0 * e as f64 - m) / m).collect();
    let stderr = q_hat.iter().map(|q| ((1.0 - q * q).max(0.0) / m).sqrt()).collect();
    Ok(EmpiricalQ {
        grid: grid.to_vec(),
        q_hat,
        stderr,
        n_traj,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    /// Largest normalized deviation over the grid.
    pub max_deviation: f64,
    /// Grid time where it occurs.
    pub t: f64,
    pub threshold: f64,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.threshold
    }
}

/// `max |q̂ − q| / s` over the grid. The scale `s` is the larger of the
/// empirical standard error, the model's own `sqrt((1 − q²)/M)` and `1/M`,
/// so points where `q̂ = ±1` by chance are not divided by zero.
pub fn compare(emp: &EmpiricalQ, qf: &QFunction) -> Comparison {
    let m = emp.n_traj as f64;
    let mut worst = Comparison {
        max_deviation: 0.0,
        t: emp.grid[0],
        threshold: COMPARE_THRESHOLD,
    };
    for ((&t, &qh), &se) in emp.grid.iter().zip(&emp.q_hat).zip(&emp.stderr) {
        let q = qf.q(t);
        let scale = se.max(((1.0 - q * q).max(0.0) / m).sqrt()).max(1.0 / m);
        let d = (qh - q).abs() / scale;
        if d > worst.max_deviation {
            worst.max_deviation = d;
            worst.t = t;
        }
    }
    worst
}

/// Total growth of `|q̂|` over the given intervals, with `q̂` simulated at the
/// interval endpoints. With the increase intervals of the exact `q` this is
/// an empirical `N_C` whose error is a handful of standard errors per interval.
pub fn n_c_on_intervals(spec: &WaitingTimeSpec, intervals: &[(f64, f64)], n_traj: u64, seed: u64) -> Result<f64> {
    if intervals.is_empty() {
        return Ok(0.0);
    }
    let mut grid: Vec<f64> = intervals.iter().flat_map(|&(a, b)| [a, b]).collect();
    grid.sort_by(f64::total_cmp);
    let emp = simulate_q(spec, &grid, n_traj, seed)?;
    let at = |t: f64| {
        let i = emp.grid.partition_point(|&x| x < t);
        emp.q_hat[i].abs()
    };
    Ok(intervals.iter().fold(0.0, |acc, &(a, b)| acc + at(b) - at(a)))
}
