//! Adaptive Dormand-Prince 5(4) integration of `dp/dt = L(t) p`.

use nalgebra::DVector;

use super::{GeneratorMatrix, ProbabilityVector, STOCHASTIC_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `None` picks one from the output spacing.
    pub h0: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h0: None,
            max_steps: 10_000_000,
        }
    }
}

/// States at the requested output times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

// Dormand-Prince tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate from `t = times[0]` with state `y0`, reporting the state at
/// every entry of `times` (sorted ascending). No positivity or normalization
/// is imposed, so this also serves linear-superposition checks.
pub fn propagate_raw<G>(generator: &G, y0: &[f64], times: &[f64], opts: &OdeOptions) -> Result<Trajectory>
where
    G: Fn(f64) -> GeneratorMatrix + ?Sized,
{
    if times.is_empty() {
        return Err(Error::InvalidArgument("no output times".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("output times must be sorted".into()));
    }
    let n = y0.len();
    let rhs = |t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let l = generator(t);
        if l.dim() != n {
            return Err(Error::DimensionMismatch {
                left: l.dim(),
                right: n,
            });
        }
        let d = l.matrix() * y;
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::StiffOrSingular { t });
        }
        Ok(d)
    };

    let mut t = times[0];
    let mut y = DVector::from_column_slice(y0);
    let mut out_states = vec![y0.to_vec()];
    let span = times[times.len() - 1] - t;
    let mut h = opts
        .h0
        .unwrap_or_else(|| if span > 0.0 { (span / 100.0).min(1e-2) } else { 1e-3 });
    let mut k1 = rhs(t, &y)?;
    let mut steps = 0usize;

    for &target in &times[1..] {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::StiffOrSingular { t });
            }
            steps += 1;
            let last = t + h >= target;
            let step = if last { target - t } else { h };
            if step <= 1e-14 * t.abs().max(1.0) && !last {
                return Err(Error::StiffOrSingular { t });
            }
            let mut ks: Vec<DVector<f64>> = Vec::with_capacity(7);
            ks.push(k1.clone());
            for s in 1..7 {
                let mut ys = y.clone();
                for (j, kj) in ks.iter().enumerate() {
                    if A[s][j] != 0.0 {
                        ys.axpy(step * A[s][j], kj, 1.0);
                    }
                }
                ks.push(rhs(t + C[s] * step, &ys)?);
            }
            let mut y5 = y.clone();
            let mut y4 = y.clone();
            for s in 0..7 {
                if B5[s] != 0.0 {
                    y5.axpy(step * B5[s], &ks[s], 1.0);
                }
                if B4[s] != 0.0 {
                    y4.axpy(step * B4[s], &ks[s], 1.0);
                }
            }
            let err = (0..n)
                .map(|i| {
                    let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                    ((y5[i] - y4[i]) / sc).abs()
                })
                .fold(0.0, f64::max);
            if !err.is_finite() {
                return Err(Error::StiffOrSingular { t });
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                y = y5;
                // FSAL: last stage is the derivative at the new point
                k1 = ks.pop().unwrap();
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            let proposal = step * factor;
            if err <= 1.0 && last {
                // keep the free-running step size rather than the truncated one
                h = h.max(proposal);
            } else {
                h = proposal;
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StiffOrSingular { t });
            }
        }
        out_states.push(y.iter().copied().collect());
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states: out_states,
    })
}

/// Integrate the time-local equation from `p0` at `t = 0` up to `t_end`,
/// returning `n_out + 1` equally spaced snapshots as probability vectors.
pub fn propagate<G>(
    generator: &G,
    p0: &ProbabilityVector,
    t_end: f64,
    n_out: usize,
) -> Result<Vec<(f64, ProbabilityVector)>>
where
    G: Fn(f64) -> GeneratorMatrix + ?Sized,
{
    if !(t_end >= 0.0) {
        return Err(Error::NegativeTime);
    }
    let n_out = n_out.max(1);
    let times: Vec<f64> = (0..=n_out).map(|i| t_end * i as f64 / n_out as f64).collect();
    let traj = propagate_raw(generator, p0.as_slice(), &times, &OdeOptions::default())?;
    traj.times
        .into_iter()
        .zip(traj.states)
        .map(|(t, s)| {
            let drift = (s.iter().sum::<f64>() - 1.0).abs();
            if drift > 1e-8 {
                return Err(Error::Numerical(format!("normalization drift {drift} at t = {t}")));
            }
            Ok((t, ProbabilityVector::from_numerical(s, STOCHASTIC_TOL)?))
        })
        .collect()
}
