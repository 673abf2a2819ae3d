//! Discrete rough paths: canonical lifts, Chen recombination, Wiener shift
//! and dyadic approximation.
//!
//! A rough path here is a sample path together with one second-level tensor
//! `XX_{t_k,t_{k+1}}` per grid step. Window values over `[t_i, t_j]` are
//! assembled from the per-step data through Chen's relation
//!
//! ```text
//! XX_{s,t} = XX_{s,u} + XX_{u,t} + x_{s,u} (x) x_{u,t},
//! ```
//!
//! which makes the per-step representation complete: any window tensor is a
//! finite Chen recursion over the steps it spans. For the canonical lift of
//! the piecewise-linear interpolant the step tensors are exactly
//! `XX_{t_k,t_{k+1}} = 1/2 dx_k (x) dx_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, PathSample};

/// How a rough path was produced; carried through exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PathMeta {
    Fbm {
        hurst: f64,
        seed: u64,
        /// true when the circulant embedding failed and exact Cholesky was used
        cholesky_fallback: bool,
    },
    Dyadic {
        level: u32,
    },
    Custom,
}

/// A sample path with per-step second-level data `(x, XX)`.
#[derive(Debug, Clone)]
pub struct RoughPathGrid {
    pub path: PathSample,
    /// per-step tensors, `n_steps` blocks of `m*m` row-major entries
    level2: Vec<f64>,
    pub hurst: Option<f64>,
    pub meta: PathMeta,
}

impl RoughPathGrid {
    pub fn new(
        path: PathSample,
        level2: Vec<f64>,
        hurst: Option<f64>,
        meta: PathMeta,
    ) -> Result<Self> {
        let m = path.dims;
        if level2.len() != path.grid.n_steps * m * m {
            return Err(Error::input(format!(
                "level2 needs {} entries ({} steps x {m}x{m}), got {}",
                path.grid.n_steps * m * m,
                path.grid.n_steps,
                level2.len()
            )));
        }
        if level2.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("level2 entries must be finite"));
        }
        Ok(RoughPathGrid { path, level2, hurst, meta })
    }

    pub fn dims(&self) -> usize {
        self.path.dims
    }

    pub fn n_steps(&self) -> usize {
        self.path.grid.n_steps
    }

    pub fn grid(&self) -> &Grid {
        &self.path.grid
    }

    /// Step tensor `XX_{t_k, t_{k+1}}` as an `m*m` row-major slice.
    pub fn level2_step(&self, k: usize) -> &[f64] {
        let m = self.dims();
        &self.level2[k * m * m..(k + 1) * m * m]
    }

    pub fn raw_level2(&self) -> &[f64] {
        &self.level2
    }
}

/// Canonical lift of the piecewise-linear interpolant:
/// `XX_{t_k,t_{k+1}} = 1/2 dx_k (x) dx_k` per step.
pub fn lift_piecewise_linear(path: PathSample) -> RoughPathGrid {
    let m = path.dims;
    let n = path.grid.n_steps;
    let mut level2 = vec![0.0; n * m * m];
    for k in 0..n {
        let dx = path.increment(k, k + 1);
        let block = &mut level2[k * m * m..(k + 1) * m * m];
        for r in 0..m {
            for c in 0..m {
                block[r * m + c] = 0.5 * dx[r] * dx[c];
            }
        }
    }
    RoughPathGrid {
        path,
        level2,
        hurst: None,
        meta: PathMeta::Custom,
    }
}

/// Window increment and second-level tensor over `[t_i, t_j]`, assembled by
/// the Chen recursion across the spanned steps.
pub fn chen_combine(rp: &RoughPathGrid, i: usize, j: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = rp.dims();
    if i > j || j > rp.n_steps() {
        return Err(Error::index(format!(
            "chen_combine needs 0 <= i <= j <= {}, got ({i},{j})",
            rp.n_steps()
        )));
    }
    let mut inc = vec![0.0; m];
    let mut lvl2 = vec![0.0; m * m];
    for k in i..j {
        let dx = rp.path.increment(k, k + 1);
        let step2 = rp.level2_step(k);
        for r in 0..m {
            for c in 0..m {
                lvl2[r * m + c] += step2[r * m + c] + inc[r] * dx[c];
            }
        }
        for r in 0..m {
            inc[r] += dx[r];
        }
    }
    Ok((inc, lvl2))
}

/// Wiener-type shift by `h` (an exact multiple of the grid step).
///
/// The shifted path satisfies `x(theta_h w)(t) = x(w)(t + h) - x(w)(h)`, so its
/// grid starts at `t0 - h`, its value at time zero is zero, and every window
/// norm equals the corresponding norm of the original over the window moved by
/// `h`. Per-step second-level tensors are intrinsic to the steps and carry
/// over unchanged.
pub fn shift(rp: &RoughPathGrid, h: f64) -> Result<RoughPathGrid> {
    let grid = rp.grid();
    let steps = h / grid.dt;
    if (steps - steps.round()).abs() > 1e-9 * (1.0 + steps.abs()) {
        return Err(Error::param(format!(
            "shift {h} is not a multiple of the grid step {}",
            grid.dt
        )));
    }
    let node_h = grid
        .index_of_time(h)
        .ok_or_else(|| Error::param(format!("shift {h} leaves the stored window")))?;
    let m = rp.dims();
    let base = rp.path.value(node_h).to_vec();
    let mut values = Vec::with_capacity(grid.n_nodes() * m);
    for k in 0..grid.n_nodes() {
        let v = rp.path.value(k);
        for r in 0..m {
            values.push(v[r] - base[r]);
        }
    }
    let new_grid = Grid::new(grid.t0 - h, grid.dt, grid.n_steps)?;
    let path = PathSample::new(new_grid, m, values)?;
    RoughPathGrid::new(path, rp.level2.clone(), rp.hurst, rp.meta.clone())
}

/// Piecewise-linear dyadic approximation at level `n`: the path agreeing with
/// the source at the dyadic nodes `k / 2^n` and linearly interpolated between
/// them, with its canonical lift, represented on the source grid.
pub fn dyadic_approx(path: &PathSample, level: u32) -> Result<RoughPathGrid> {
    let grid = path.grid;
    let spacing = 0.5f64.powi(level as i32);
    let stride_f = spacing / grid.dt;
    if stride_f < 1.0 - 1e-9 {
        return Err(Error::param(format!(
            "dyadic level {level} is finer than the source grid (dt = {})",
            grid.dt
        )));
    }
    let stride = stride_f.round();
    if (stride_f - stride).abs() > 1e-9 * stride_f {
        return Err(Error::param(format!(
            "dyadic spacing 2^-{level} is not a multiple of the source step {}",
            grid.dt
        )));
    }
    let stride = stride as usize;
    // the grid origin must itself sit on the dyadic lattice
    let offset = grid.t0 / spacing;
    if (offset - offset.round()).abs() > 1e-9 * (1.0 + offset.abs()) {
        return Err(Error::param(format!(
            "grid start {} is not aligned with the level-{level} dyadic lattice",
            grid.t0
        )));
    }
    let m = path.dims;
    let mut values = vec![0.0; grid.n_nodes() * m];
    let mut anchor = 0usize;
    while anchor < grid.n_steps {
        let next = (anchor + stride).min(grid.n_steps);
        // the final cell may be truncated by the window edge; interpolate over
        // the dyadic cell the source actually covers
        let a = path.value(anchor).to_vec();
        let b = path.value((anchor + stride).min(grid.n_steps)).to_vec();
        let cell_len = (next - anchor) as f64;
        for k in anchor..=next {
            let theta = (k - anchor) as f64 / cell_len;
            for r in 0..m {
                values[k * m + r] = a[r] + theta * (b[r] - a[r]);
            }
        }
        anchor = next;
    }
    // source values at dyadic nodes are reproduced exactly
    let sample = PathSample::new(grid, m, values)?;
    let mut rp = lift_piecewise_linear(sample);
    rp.hurst = None;
    rp.meta = PathMeta::Dyadic { level };
    Ok(rp)
}
