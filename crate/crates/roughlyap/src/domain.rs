//! Axis-aligned box domains used by grid sweeps and samplers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An axis-aligned box `[lo_1, hi_1] x ... x [lo_d, hi_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::param("domain bounds must be non-empty and match"));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::param(format!("degenerate domain side [{l}, {h}]")));
            }
        }
        Ok(Domain { lo, hi })
    }

    /// Centered cube `[-r, r]^d`.
    pub fn centered_cube(dim: usize, r: f64) -> Result<Self> {
        Domain::new(vec![-r; dim], vec![r; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn side(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(zi, (l, h))| *zi >= *l && *zi <= *h)
    }

    /// Uniform grid with `res` points per axis (including both endpoints),
    /// visiting points in row-major order.
    pub fn grid_points(&self, res: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let res = res.max(2);
        let mut points = Vec::with_capacity(res.pow(d as u32));
        let mut idx = vec![0usize; d];
        loop {
            let p: Vec<f64> = (0..d)
                .map(|i| self.lo[i] + self.side(i) * idx[i] as f64 / (res - 1) as f64)
                .collect();
            points.push(p);
            let mut axis = d;
            loop {
                if axis == 0 {
                    return points;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < res {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }

    /// Uniform sample inside the box.
    pub fn sample_uniform<R: rand::Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim())
            .map(|i| rng.gen_range(self.lo[i]..=self.hi[i]))
            .collect()
    }
}
