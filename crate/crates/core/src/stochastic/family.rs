use nalgebra::{DMatrix, DVector};

use super::ode::{propagate_raw, OdeOptions};
use super::{GeneratorMatrix, StochasticMatrix};
use crate::error::{Error, Result};

/// A one-parameter family of dynamical maps `t ↦ Λ(t,0)`.
///
/// Implementations must be reentrant: `map_at` may be called concurrently
/// for different `t`.
pub trait MapFamily: Sync {
    fn dim(&self) -> usize;

    /// Domain `[0, T]` on which the family is defined.
    fn domain(&self) -> (f64, f64);

    fn map_at(&self, t: f64) -> Result<StochasticMatrix>;

    /// Typical time scale used to size finite-difference steps.
    fn time_scale(&self) -> f64 {
        1.0
    }
}

/// `Λ(t,0) = M` for all `t`.
#[derive(Debug, Clone)]
pub struct ConstantFamily {
    map: StochasticMatrix,
    t_end: f64,
}

impl ConstantFamily {
    pub fn new(map: StochasticMatrix, t_end: f64) -> Self {
        ConstantFamily { map, t_end }
    }

    pub fn identity(n: usize, t_end: f64) -> Self {
        ConstantFamily::new(StochasticMatrix::identity(n), t_end)
    }
}

impl MapFamily for ConstantFamily {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, self.t_end)
    }

    fn map_at(&self, _t: f64) -> Result<StochasticMatrix> {
        Ok(self.map.clone())
    }
}

/// Maps obtained by integrating a time-local equation, stored on a grid and
/// linearly interpolated in between.
#[derive(Debug, Clone)]
pub struct TabulatedFamily {
    times: Vec<f64>,
    maps: Vec<DMatrix<f64>>,
    time_scale: f64,
}

impl TabulatedFamily {
    /// Propagate each simplex vertex through `generator` and record the
    /// columns of `Λ(t,0)` at every grid time. The grid must start at 0.
    pub fn from_generator<G>(generator: G, dim: usize, grid: &[f64], opts: &OdeOptions) -> Result<Self>
    where
        G: Fn(f64) -> GeneratorMatrix + Sync,
    {
        if grid.is_empty() || grid[0] != 0.0 {
            return Err(Error::InvalidArgument("grid must start at t = 0".into()));
        }
        let mut maps = vec![DMatrix::zeros(dim, dim); grid.len()];
        for k in 0..dim {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            let traj = propagate_raw(&generator, &e, grid, opts)?;
            for (i, state) in traj.states.iter().enumerate() {
                maps[i].set_column(k, &DVector::from_column_slice(state));
            }
        }
        let span = grid[grid.len() - 1];
        Ok(TabulatedFamily {
            times: grid.to_vec(),
            maps,
            time_scale: if span > 0.0 { span / 100.0 } else { 1.0 },
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

impl MapFamily for TabulatedFamily {
    fn dim(&self) -> usize {
        self.maps[0].nrows()
    }

    fn domain(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    fn map_at(&self, t: f64) -> Result<StochasticMatrix> {
        let (lo, hi) = self.domain();
        if t < lo || t > hi {
            return Err(Error::InvalidArgument(format!("t = {t} outside [{lo}, {hi}]")));
        }
        let i = self.times.partition_point(|&x| x <= t);
        let m = if i == 0 {
            self.maps[0].clone()
        } else if i >= self.times.len() || self.times[i - 1] == t {
            self.maps[i - 1].clone()
        } else {
            let (t0, t1) = (self.times[i - 1], self.times[i]);
            let w = (t - t0) / (t1 - t0);
            &self.maps[i - 1] * (1.0 - w) + &self.maps[i] * w
        };
        StochasticMatrix::new(m)
    }

    fn time_scale(&self) -> f64 {
        self.time_scale
    }
}
