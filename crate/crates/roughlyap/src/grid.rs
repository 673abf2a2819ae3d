//! Regular time grids and vector-valued sample paths living on them.
//!
//! Every discrete object in this crate (noise realizations, rough-path lifts,
//! trajectories) is indexed by a [`Grid`]: `n_steps + 1` equally spaced nodes
//! `t_k = t0 + k*dt`. Grids may start at negative times so that pullback
//! experiments can integrate along a window `[-T_back, T_fwd]` with the time
//! origin sitting at an interior node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when matching times to grid nodes.
const NODE_TOL: f64 = 1e-9;

/// A regular one-dimensional time grid `t_k = t0 + k*dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t0: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl Grid {
    pub fn new(t0: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param(format!("grid dt must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::param("grid t0 must be finite"));
        }
        if n_steps == 0 {
            return Err(Error::param("grid needs at least one step"));
        }
        Ok(Grid { t0, dt, n_steps })
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    /// Time of node `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Time of the final node.
    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps)
    }

    /// Node index whose time equals `t`, if `t` lies on the grid.
    pub fn index_of_time(&self, t: f64) -> Option<usize> {
        let raw = (t - self.t0) / self.dt;
        let k = raw.round();
        if (raw - k).abs() > NODE_TOL * (1.0 + raw.abs()) {
            return None;
        }
        if k < 0.0 || k > self.n_steps as f64 {
            return None;
        }
        Some(k as usize)
    }

    /// Node index of the time origin `t = 0`, when it is a grid node.
    pub fn origin_index(&self) -> Option<usize> {
        self.index_of_time(0.0)
    }

    /// All node times as a vector.
    pub fn times(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|k| self.time(k)).collect()
    }
}

/// A discrete sample path: one `dims`-dimensional value per grid node.
///
/// Values are stored row-major, node-by-node.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub grid: Grid,
    pub dims: usize,
    values: Vec<f64>,
}

impl PathSample {
    pub fn new(grid: Grid, dims: usize, values: Vec<f64>) -> Result<Self> {
        if dims == 0 {
            return Err(Error::param("path dimension must be at least 1"));
        }
        if values.len() != grid.n_nodes() * dims {
            return Err(Error::input(format!(
                "path needs {} values ({} nodes x {} dims), got {}",
                grid.n_nodes() * dims,
                grid.n_nodes(),
                dims,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("path values must be finite"));
        }
        Ok(PathSample { grid, dims, values })
    }

    /// Constant-zero path.
    pub fn zeros(grid: Grid, dims: usize) -> Self {
        PathSample {
            grid,
            dims,
            values: vec![0.0; grid.n_nodes() * dims],
        }
    }

    /// Value at node `k`.
    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dims..(k + 1) * self.dims]
    }

    /// Increment `x_{t_i, t_j} = x_{t_j} - x_{t_i}`.
    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        let a = self.value(i);
        let b = self.value(j);
        b.iter().zip(a).map(|(bi, ai)| bi - ai).collect()
    }

    /// Euclidean norm of the increment over `[t_i, t_j]`.
    pub fn increment_norm(&self, i: usize, j: usize) -> f64 {
        let a = self.value(i);
        let b = self.value(j);
        b.iter()
            .zip(a)
            .map(|(bi, ai)| {
                let d = bi - ai;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn raw_values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(0.0, 0.0, 10).is_err());
        assert!(Grid::new(0.0, -0.1, 10).is_err());
        assert!(Grid::new(0.0, 0.1, 0).is_err());
        let g = Grid::new(-1.0, 0.25, 8).unwrap();
        assert_eq!(g.n_nodes(), 9);
        assert_eq!(g.time(4), 0.0);
        assert_eq!(g.t_end(), 1.0);
    }

    #[test]
    fn origin_lookup() {
        let g = Grid::new(-2.0, 0.5, 8).unwrap();
        assert_eq!(g.origin_index(), Some(4));
        assert_eq!(g.index_of_time(-2.0), Some(0));
        assert_eq!(g.index_of_time(2.0), Some(8));
        assert_eq!(g.index_of_time(0.3), None);
        assert_eq!(g.index_of_time(2.5), None);

        let g = Grid::new(0.25, 0.5, 4).unwrap();
        assert_eq!(g.origin_index(), None);
    }

    #[test]
    fn path_shape_checks() {
        let g = Grid::new(0.0, 1.0, 2).unwrap();
        assert!(PathSample::new(g, 2, vec![0.0; 5]).is_err());
        assert!(PathSample::new(g, 2, vec![f64::NAN; 6]).is_err());
        let p = PathSample::new(g, 2, vec![0.0, 0.0, 1.0, 2.0, 3.0, 5.0]).unwrap();
        assert_eq!(p.value(1), &[1.0, 2.0]);
        assert_eq!(p.increment(0, 2), vec![3.0, 5.0]);
        assert!((p.increment_norm(1, 2) - (4.0f64 + 9.0).sqrt()).abs() < 1e-15);
    }
}
