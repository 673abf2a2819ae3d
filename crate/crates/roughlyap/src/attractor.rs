//! Pullback attractor estimation and the convergence experiments.
//!
//! The pullback attractor is approximated per noise realization by the image
//! at time zero of a filled absorbing ball released at time `-n`, with
//! stabilization across increasing horizons measured by the Hausdorff
//! semi-distance between successive clouds. The deterministic baseline is the
//! long-run RK4 attractor of the unperturbed drift. Experiments sweep the
//! noise intensity, the integrator step and the dyadic approximation level,
//! and fit local exponential decay rates near an equilibrium.
//!
//! The absorbing-ball radius produced by the decay theory is safe but very
//! conservative; an explicit scheme cannot start that far out without leaving
//! its stability region. Seed clouds therefore fill the absorbing ball
//! intersected with a configured cap (`seed_radius_cap`), which is recorded in
//! the estimate's provenance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::io::{ExperimentTable, TableRow};
use crate::lyapunov::{EnvelopeParams, LyapunovFn};
use crate::models::{attach_diffusion, DiffusionKind, DriftField, SystemSpec};
use crate::norms::{NormParams, PrefixRoughVar};
use crate::rough::{chen_combine, dyadic_approx, RoughPathGrid};
use crate::solver::{ode_solve, rough_euler, NoiseConfig};
use crate::{Grid, PathSample};

/// A finite point set in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub dim: usize,
    points: Vec<f64>,
    pub label: String,
}

impl PointCloud {
    pub fn new(dim: usize, points: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(Error::input("point data does not match the dimension"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("point cloud entries must be finite"));
        }
        Ok(PointCloud { dim, points, label: label.into() })
    }

    pub fn n_points(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn raw_points(&self) -> &[f64] {
        &self.points
    }
}

/// Hausdorff semi-distance `max_{a in A} min_{b in B} |a - b|`.
pub fn hausdorff_semi(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::input("Hausdorff semi-distance needs non-empty clouds"));
    }
    if a.dim != b.dim {
        return Err(Error::input("cloud dimensions differ"));
    }
    let d = a.dim;
    let out = (0..a.n_points())
        .into_par_iter()
        .map(|i| {
            let p = a.point(i);
            let mut best = f64::INFINITY;
            for j in 0..b.n_points() {
                let q = b.point(j);
                let mut acc = 0.0;
                for k in 0..d {
                    let diff = p[k] - q[k];
                    acc += diff * diff;
                }
                if acc < best {
                    best = acc;
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(out.sqrt())
}

/// Long-run RK4 baseline for the unperturbed attractor: trajectories from a
/// grid of starts, transient-clipped, merged into one cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub domain: Domain,
    pub starts_per_axis: usize,
    pub t_end: f64,
    pub dt: f64,
    /// fraction of each run discarded as transient
    pub clip_fraction: f64,
    /// record every k-th node after the clip
    pub subsample: usize,
}

impl OracleConfig {
    pub fn fhn_default() -> Self {
        OracleConfig {
            domain: Domain::centered_cube(2, 3.0).unwrap(),
            starts_per_axis: 5,
            t_end: 400.0,
            dt: 0.01,
            clip_fraction: 0.5,
            subsample: 5,
        }
    }
}

pub fn deterministic_attractor(drift: &DriftField, cfg: &OracleConfig) -> Result<PointCloud> {
    let starts = cfg.domain.grid_points(cfg.starts_per_axis);
    let d = drift.dim;
    let clouds: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|y0| {
            let traj = ode_solve(drift, y0, (0.0, cfg.t_end), cfg.dt)?;
            let from = ((traj.grid.n_steps as f64) * cfg.clip_fraction) as usize;
            let mut pts = Vec::new();
            if traj.blow_up.is_none() {
                let mut k = from;
                while k <= traj.grid.n_steps {
                    pts.extend_from_slice(traj.state(k));
                    k += cfg.subsample.max(1);
                }
            }
            Ok(pts)
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<f64> = clouds.into_iter().flatten().collect();
    PointCloud::new(d, points, "deterministic-attractor")
}

/// Settings for the pullback estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackConfig {
    /// increasing pullback horizons (time units)
    pub horizons: Vec<f64>,
    /// seed-cloud resolution per axis
    pub init_resolution: usize,
    /// cap on the seed-ball radius (explicit-scheme stability)
    pub seed_radius_cap: f64,
    /// slack added inside the absorbing-ball radius
    pub ball_eps: f64,
    /// truncation of the absorbing-radius series (limited by the window)
    pub k_trunc: usize,
    pub params: NormParams,
}

impl PullbackConfig {
    pub fn standard(horizons: Vec<f64>, params: NormParams) -> Self {
        PullbackConfig {
            horizons,
            init_resolution: 32,
            seed_radius_cap: 6.0,
            ball_eps: 0.1,
            k_trunc: 4,
            params,
        }
    }
}

/// A pullback attractor estimate: the cloud at time zero for the largest
/// horizon, plus the stabilization history across horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorEstimate {
    pub cloud: PointCloud,
    pub pullback_horizon: f64,
    /// `d_H(cloud_k | cloud_{k+1})` for consecutive horizons
    pub convergence_history: Vec<f64>,
    pub seed_radius: f64,
    pub dropped: usize,
    pub config_hash: String,
}

/// Estimate the pullback attractor along one noise realization: for each
/// horizon `n`, fill the (capped) absorbing ball at time `-n`, evolve the
/// cloud to time zero along the same realization, and record the cloud.
pub fn pullback_attractor(
    system: &SystemSpec,
    lyap: &LyapunovFn,
    env: &EnvelopeParams,
    noise: &RoughPathGrid,
    cfg: &PullbackConfig,
) -> Result<AttractorEstimate> {
    if cfg.horizons.is_empty() {
        return Err(Error::param("need at least one pullback horizon"));
    }
    if cfg.horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("horizons must be strictly increasing"));
    }
    let grid = noise.grid();
    let end = grid
        .index_of_time(0.0)
        .ok_or_else(|| Error::param("noise window must contain time zero"))?;
    let d = system.dim();
    let mut clouds = Vec::with_capacity(cfg.horizons.len());
    let mut dropped_total = 0usize;
    let mut seed_radius_used = 0.0f64;
    for &horizon in &cfg.horizons {
        let start = grid.index_of_time(-horizon).ok_or_else(|| {
            Error::param(format!("noise window does not reach time {}", -horizon))
        })?;
        let radius = seed_ball_radius(lyap, env, noise, -horizon, cfg)?;
        seed_radius_used = radius;
        let seeds = fill_ball(d, radius, cfg.init_resolution);
        let evolved: Vec<Option<Vec<f64>>> = seeds
            .par_iter()
            .map(|y0| {
                let traj = rough_euler(system, noise, y0, (start, end)).ok()?;
                if traj.blow_up.is_some() {
                    None
                } else {
                    Some(traj.last_state().to_vec())
                }
            })
            .collect();
        let mut points = Vec::with_capacity(evolved.len() * d);
        let mut dropped = 0usize;
        for e in evolved {
            match e {
                Some(p) => points.extend_from_slice(&p),
                None => dropped += 1,
            }
        }
        dropped_total += dropped;
        if points.is_empty() {
            return Err(Error::Numerical(format!(
                "every seed point diverged at horizon {horizon}"
            )));
        }
        clouds.push(PointCloud::new(d, points, format!("pullback-h{horizon}"))?);
    }
    let mut history = Vec::new();
    for w in clouds.windows(2) {
        history.push(hausdorff_semi(&w[0], &w[1])?);
    }
    let config = serde_json::json!({
        "system": system.name,
        "params": system.params,
        "horizons": cfg.horizons,
        "init_resolution": cfg.init_resolution,
        "seed_radius_cap": cfg.seed_radius_cap,
        "noise_t0": grid.t0,
        "noise_dt": grid.dt,
    });
    Ok(AttractorEstimate {
        cloud: clouds.pop().unwrap(),
        pullback_horizon: *cfg.horizons.last().unwrap(),
        convergence_history: history,
        seed_radius: seed_radius_used,
        dropped: dropped_total,
        config_hash: crate::io::content_hash(&config),
    })
}

/// Absorbing-ball radius at the shifted time, truncated to the available
/// window and capped for scheme stability.
fn seed_ball_radius(
    lyap: &LyapunovFn,
    env: &EnvelopeParams,
    noise: &RoughPathGrid,
    at_time: f64,
    cfg: &PullbackConfig,
) -> Result<f64> {
    let grid = noise.grid();
    let alpha = match &lyap.alpha {
        Some(a) => a,
        None => return Ok(cfg.seed_radius_cap),
    };
    // sum e^{-k delta} H(|||x|||_{[at-1-k, at-k]}) over the windows the path covers
    let mut r_bar = 0.0;
    let mut k = 0usize;
    while k <= cfg.k_trunc {
        let t_hi = at_time - k as f64;
        let t_lo = t_hi - 1.0;
        let (Some(a), Some(b)) = (grid.index_of_time(t_lo), grid.index_of_time(t_hi)) else {
            break;
        };
        let mut eng = PrefixRoughVar::new(noise, a, &cfg.params)?;
        eng.extend_to(b)?;
        r_bar += (-(k as f64) * env.cert.delta).exp() * env.h_term(eng.norm(b, &cfg.params));
        k += 1;
    }
    let level = env.cert.c_lambda / env.cert.delta + r_bar + cfg.ball_eps;
    let radius = alpha.inverse(level).unwrap_or(cfg.seed_radius_cap);
    Ok(radius.min(cfg.seed_radius_cap))
}

/// Uniform grid filling of the centered ball of the given radius.
fn fill_ball(dim: usize, radius: f64, res: usize) -> Vec<Vec<f64>> {
    let bbox = Domain::centered_cube(dim, radius).expect("radius > 0");
    bbox.grid_points(res)
        .into_iter()
        .filter(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt() <= radius)
        .collect()
}

/// Restrict a rough path to every `stride`-th node; window tensors come from
/// Chen recombination, so the coarse path is the same rough path observed on
/// the coarser grid.
pub fn coarsen_rough(rp: &RoughPathGrid, stride: usize) -> Result<RoughPathGrid> {
    if stride == 0 || rp.n_steps() % stride != 0 {
        return Err(Error::param(format!(
            "stride {stride} does not divide {} steps",
            rp.n_steps()
        )));
    }
    let m = rp.dims();
    let n_coarse = rp.n_steps() / stride;
    let grid = Grid::new(rp.grid().t0, rp.grid().dt * stride as f64, n_coarse)?;
    let mut values = Vec::with_capacity((n_coarse + 1) * m);
    for k in 0..=n_coarse {
        values.extend_from_slice(rp.path.value(k * stride));
    }
    let mut level2 = Vec::with_capacity(n_coarse * m * m);
    for k in 0..n_coarse {
        let (_, xx) = chen_combine(rp, k * stride, (k + 1) * stride)?;
        level2.extend_from_slice(&xx);
    }
    let path = PathSample::new(grid, m, values)?;
    RoughPathGrid::new(path, level2, rp.hurst, rp.meta.clone())
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sweep the noise intensity: per `C_g`, per seed, estimate the pullback
/// attractor and measure `d_H(estimate | deterministic oracle)`.
#[allow(clippy::too_many_arguments)]
pub fn semicontinuity_experiment(
    base: &SystemSpec,
    diffusion_kind: DiffusionKind,
    lyap: &LyapunovFn,
    env_template: &EnvelopeParams,
    noise_cfg: &NoiseConfig,
    c_g_list: &[f64],
    horizon: f64,
    n_seeds: usize,
    master_seed: u64,
    oracle: &PointCloud,
    pull_cfg: &PullbackConfig,
) -> Result<ExperimentTable> {
    if c_g_list.windows(2).any(|w| w[1] >= w[0]) || c_g_list.iter().any(|c| *c <= 0.0) {
        return Err(Error::param("C_g list must be strictly decreasing and positive"));
    }
    let sampler = noise_cfg.sampler()?;
    let mut rows = Vec::new();
    let mut cfg = pull_cfg.clone();
    cfg.horizons = vec![horizon];
    for &c_g in c_g_list {
        let system = attach_diffusion(base.clone(), diffusion_kind, c_g, noise_cfg.dims)?;
        let mut env = *env_template;
        env.c_g = c_g;
        let per_seed: Vec<Result<(f64, usize)>> = (0..n_seeds)
            .map(|i| {
                let seed = crate::seed::derive_seed(master_seed, i as u64);
                let noise = noise_cfg.realization(&sampler, seed)?;
                let est = pullback_attractor(&system, lyap, &env, &noise, &cfg)?;
                Ok((hausdorff_semi(&est.cloud, oracle)?, est.dropped))
            })
            .collect();
        let mut dists = Vec::new();
        let mut flagged = 0usize;
        for r in per_seed {
            let (d, dropped) = r?;
            dists.push(d);
            flagged += dropped.min(1);
        }
        let (mean, stderr) = mean_stderr(&dists);
        rows.push(TableRow { parameter: c_g, mean_dh: mean, stderr, n_flagged: flagged });
    }
    Ok(ExperimentTable { parameter_name: "c_g".into(), rows })
}

/// Step-size self-convergence: discrete pullback attractors on coarsened
/// grids of the same noise, compared against the finest step.
#[allow(clippy::too_many_arguments)]
pub fn stepsize_experiment(
    system: &SystemSpec,
    lyap: &LyapunovFn,
    env: &EnvelopeParams,
    noise_cfg: &NoiseConfig,
    delta_list: &[f64],
    horizon: f64,
    n_seeds: usize,
    master_seed: u64,
    pull_cfg: &PullbackConfig,
) -> Result<ExperimentTable> {
    if delta_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("step list must be strictly decreasing"));
    }
    let delta_min = *delta_list.last().unwrap();
    if (delta_min / noise_cfg.dt - (delta_min / noise_cfg.dt).round()).abs() > 1e-9 {
        return Err(Error::param("finest step must be a multiple of the noise step"));
    }
    let mut cfg = pull_cfg.clone();
    cfg.horizons = vec![horizon];
    let sampler = noise_cfg.sampler()?;
    let mut sums: Vec<Vec<f64>> = vec![Vec::new(); delta_list.len()];
    let mut flagged = vec![0usize; delta_list.len()];
    for i in 0..n_seeds {
        let seed = crate::seed::derive_seed(master_seed, i as u64);
        let noise = noise_cfg.realization(&sampler, seed)?;
        // finest-step estimate is the reference for this seed
        let mut per_delta = Vec::new();
        for &delta in delta_list {
            let stride_f = delta / noise_cfg.dt;
            if (stride_f - stride_f.round()).abs() > 1e-9 * stride_f {
                return Err(Error::param(format!(
                    "step {delta} is not commensurate with the noise grid"
                )));
            }
            let coarse = coarsen_rough(&noise, stride_f.round() as usize)?;
            per_delta.push(pullback_attractor(system, lyap, env, &coarse, &cfg)?);
        }
        let reference = &per_delta.last().unwrap().cloud;
        for (j, est) in per_delta.iter().enumerate() {
            sums[j].push(hausdorff_semi(&est.cloud, reference)?);
            flagged[j] += est.dropped.min(1);
        }
    }
    let rows = delta_list
        .iter()
        .zip(sums.iter().zip(&flagged))
        .map(|(&delta, (dists, &nf))| {
            let (mean, stderr) = mean_stderr(dists);
            TableRow { parameter: delta, mean_dh: mean, stderr, n_flagged: nf }
        })
        .collect();
    Ok(ExperimentTable { parameter_name: "delta".into(), rows })
}

/// Dyadic-approximation convergence: attractor estimates driven by the
/// piecewise-linear dyadic recoding of the same noise draw, compared to the
/// full-resolution estimate.
#[allow(clippy::too_many_arguments)]
pub fn dyadic_experiment(
    system: &SystemSpec,
    lyap: &LyapunovFn,
    env: &EnvelopeParams,
    noise_cfg: &NoiseConfig,
    levels: &[u32],
    horizon: f64,
    n_seeds: usize,
    master_seed: u64,
    pull_cfg: &PullbackConfig,
) -> Result<ExperimentTable> {
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("levels must be strictly increasing"));
    }
    let mut cfg = pull_cfg.clone();
    cfg.horizons = vec![horizon];
    let sampler = noise_cfg.sampler()?;
    let mut sums: Vec<Vec<f64>> = vec![Vec::new(); levels.len()];
    let mut flagged = vec![0usize; levels.len()];
    for i in 0..n_seeds {
        let seed = crate::seed::derive_seed(master_seed, i as u64);
        let noise = noise_cfg.realization(&sampler, seed)?;
        let reference = pullback_attractor(system, lyap, env, &noise, &cfg)?;
        for (j, &level) in levels.iter().enumerate() {
            let approx = dyadic_approx(&noise.path, level)?;
            let est = pullback_attractor(system, lyap, env, &approx, &cfg)?;
            sums[j].push(hausdorff_semi(&est.cloud, &reference.cloud)?);
            flagged[j] += est.dropped.min(1);
        }
    }
    let rows = levels
        .iter()
        .zip(sums.iter().zip(&flagged))
        .map(|(&level, (dists, &nf))| {
            let (mean, stderr) = mean_stderr(dists);
            TableRow { parameter: level as f64, mean_dh: mean, stderr, n_flagged: nf }
        })
        .collect();
    Ok(ExperimentTable { parameter_name: "dyadic_level".into(), rows })
}

/// Result rows of the local-stability experiment: fitted decay slope of
/// `log |y_t|` per noise intensity.
pub fn local_stability_experiment(
    base: &SystemSpec,
    c_g_list: &[f64],
    y0_radii: &[f64],
    t_end: f64,
    dt: f64,
    hurst: f64,
    n_seeds: usize,
    master_seed: u64,
    escape_domain: &Domain,
) -> Result<ExperimentTable> {
    if y0_radii.is_empty() {
        return Err(Error::param("need at least one start radius"));
    }
    let d = base.dim();
    let noise_cfg = NoiseConfig { hurst, window: (0.0, t_end), dt, dims: 1 };
    let sampler = noise_cfg.sampler()?;
    let n_steps = noise_cfg.grid()?.n_steps;
    let mut rows = Vec::new();
    for &c_g in c_g_list {
        let system = if c_g > 0.0 {
            attach_diffusion(base.clone(), DiffusionKind::VanishingAtZero, c_g, 1)?
        } else {
            base.clone()
        };
        if let Some(g) = &system.diffusion {
            if !g.zero_at_origin {
                return Err(Error::param("local stability needs a diffusion vanishing at zero"));
            }
        }
        let mut slopes = Vec::new();
        let mut flagged = 0usize;
        for i in 0..n_seeds {
            let seed = crate::seed::derive_seed(master_seed, i as u64);
            let noise = noise_cfg.realization(&sampler, seed)?;
            for (ri, &radius) in y0_radii.iter().enumerate() {
                if radius == 0.0 {
                    // identically zero trajectory: slope undefined
                    flagged += 1;
                    continue;
                }
                // deterministic start direction per radius index
                let angle = 2.399963229728653 * (ri as f64 + 1.0);
                let mut y0 = vec![0.0; d];
                y0[0] = radius * angle.cos();
                if d > 1 {
                    y0[1] = radius * angle.sin();
                }
                let traj = rough_euler(&system, &noise, &y0, (0, n_steps))?;
                if traj.blow_up.is_some() {
                    flagged += 1;
                    continue;
                }
                let escaped = (0..=traj.grid.n_steps)
                    .any(|k| !escape_domain.contains(traj.state(k)));
                if escaped {
                    flagged += 1;
                    continue;
                }
                if let Some(slope) = log_norm_slope(&traj) {
                    slopes.push(slope);
                } else {
                    flagged += 1;
                }
            }
        }
        let (mean, stderr) = mean_stderr(&slopes);
        rows.push(TableRow { parameter: c_g, mean_dh: mean, stderr, n_flagged: flagged });
    }
    Ok(ExperimentTable { parameter_name: "c_g".into(), rows })
}

/// Least-squares slope of `log |y_t|` against `t`; `None` when the state
/// norm hits zero.
pub fn log_norm_slope(traj: &crate::solver::Trajectory) -> Option<f64> {
    let n = traj.grid.n_steps;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    let count = (n + 1) as f64;
    for k in 0..=n {
        let s = traj.state(k);
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return None;
        }
        let x = k as f64 * traj.grid.dt;
        let y = norm.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    Some((count * sxy - sx * sy) / (count * sxx - sx * sx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::{sqrt_norm_lyapunov, CertProvenance, StrongCert};
    use crate::models::{make_fhn, make_linear_dissipative};

    fn params() -> NormParams {
        NormParams::for_hurst(0.4).unwrap()
    }

    fn quiet_env(c_g: f64) -> EnvelopeParams {
        let cert = StrongCert::new(0.01, 1.0, 0.5, CertProvenance::CheckedNumerically).unwrap();
        EnvelopeParams { cert, l_v: 1.0, c_p: 4.0, c_g, p: params().p }
    }

    #[test]
    fn hausdorff_basic() {
        let a = PointCloud::new(2, vec![0.0, 0.0], "a").unwrap();
        let b = PointCloud::new(2, vec![3.0, 4.0], "b").unwrap();
        assert_eq!(hausdorff_semi(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff_semi(&a, &b).unwrap(), 5.0);

        // subset gives zero one way, not the other
        let big = PointCloud::new(2, vec![0.0, 0.0, 3.0, 4.0], "big").unwrap();
        assert_eq!(hausdorff_semi(&a, &big).unwrap(), 0.0);
        assert_eq!(hausdorff_semi(&big, &a).unwrap(), 5.0);

        let empty = PointCloud::new(2, vec![], "e").unwrap();
        assert!(hausdorff_semi(&a, &empty).is_err());
    }

    #[test]
    fn linear_cloud_collapses_to_origin() {
        // C_g = 0 linear dissipative system: the pullback image contracts to
        // the origin at rate e^{-n} (Euler: (1 - dt)^{n/dt})
        let sys = make_linear_dissipative(1.0, vec![0.0, 0.0]).unwrap();
        let lyap = sqrt_norm_lyapunov(2, sys.drift.dissipativity);
        let env = quiet_env(1e-9);
        let grid = Grid::new(-8.0, 1.0 / 64.0, 8 * 64).unwrap();
        let noise = crate::rough::lift_piecewise_linear(PathSample::zeros(grid, 1));
        let cfg = PullbackConfig {
            horizons: vec![2.0, 4.0, 8.0],
            init_resolution: 9,
            seed_radius_cap: 2.0,
            ball_eps: 0.1,
            k_trunc: 0,
            params: params(),
        };
        let est = pullback_attractor(&sys, &lyap, &env, &noise, &cfg).unwrap();
        let origin = PointCloud::new(2, vec![0.0, 0.0], "origin").unwrap();
        let dist = hausdorff_semi(&est.cloud, &origin).unwrap();
        let radius = est.seed_radius;
        assert!(dist <= (-8.0f64).exp() * radius * 1.5, "dist {dist}");
        // successive-horizon distances shrink
        let h = &est.convergence_history;
        assert!(h.last().unwrap() <= h.first().unwrap());
    }

    #[test]
    fn fhn_deterministic_limit_matches_oracle() {
        let sys = make_fhn(0.08, 0.8, 0.5, 0.7).unwrap();
        let (lyap, _tpl) = crate::lyapunov::fhn_lyapunov(0.08, 0.8).unwrap();
        let env = quiet_env(1e-9);
        let grid = Grid::new(-20.0, 1.0 / 128.0, 20 * 128).unwrap();
        let noise = crate::rough::lift_piecewise_linear(PathSample::zeros(grid, 1));
        let cfg = PullbackConfig {
            horizons: vec![10.0, 20.0],
            init_resolution: 16,
            seed_radius_cap: 4.0,
            ball_eps: 0.1,
            k_trunc: 0,
            params: params(),
        };
        let est = pullback_attractor(&sys, &lyap, &env, &noise, &cfg).unwrap();
        let mut oracle_cfg = OracleConfig::fhn_default();
        oracle_cfg.t_end = 200.0;
        let oracle = deterministic_attractor(&sys.drift, &oracle_cfg).unwrap();
        let dist = hausdorff_semi(&est.cloud, &oracle).unwrap();
        assert!(dist <= 0.05, "d_H = {dist}");
    }

    #[test]
    fn pullback_invariance_along_same_noise() {
        // evolving the estimate for theta_{-1} omega forward one unit along
        // the same noise lands near the estimate for omega; the contracting
        // linear system keeps the truncation error at e^{-horizon}
        let sys = crate::models::attach_diffusion(
            make_linear_dissipative(1.0, vec![0.0, 0.0]).unwrap(),
            DiffusionKind::LinearBump,
            0.2,
            1,
        )
        .unwrap();
        let lyap = sqrt_norm_lyapunov(2, Some((0.0, 0.5)));
        let env = quiet_env(0.2);
        let noise_cfg = NoiseConfig { hurst: 0.4, window: (-8.0, 0.0), dt: 1.0 / 64.0, dims: 1 };
        let sampler = noise_cfg.sampler().unwrap();
        let noise = noise_cfg.realization(&sampler, 5).unwrap();
        let mut cfg = PullbackConfig::standard(vec![6.0], params());
        cfg.init_resolution = 12;
        cfg.seed_radius_cap = 3.0;
        let est_now = pullback_attractor(&sys, &lyap, &env, &noise, &cfg).unwrap();
        // estimate for the shifted noise: horizon 6 ending at time -1
        let shifted = crate::rough::shift(&noise, -1.0).unwrap();
        let est_past = pullback_attractor(&sys, &lyap, &env, &shifted, &cfg).unwrap();
        // evolve that cloud forward over [-1, 0] along the original noise
        let a = noise.grid().index_of_time(-1.0).unwrap();
        let b = noise.grid().index_of_time(0.0).unwrap();
        let mut forward_pts = Vec::new();
        for i in 0..est_past.cloud.n_points() {
            let traj = rough_euler(&sys, &noise, est_past.cloud.point(i), (a, b)).unwrap();
            forward_pts.extend_from_slice(traj.last_state());
        }
        let forward = PointCloud::new(2, forward_pts, "forward").unwrap();
        let d1 = hausdorff_semi(&forward, &est_now.cloud).unwrap();
        let d2 = hausdorff_semi(&est_now.cloud, &forward).unwrap();
        assert!(d1.max(d2) < 0.05, "invariance defect {} / {}", d1, d2);
    }

    #[test]
    fn coarsen_preserves_chen_and_values() {
        let grid = Grid::new(0.0, 1.0 / 64.0, 64).unwrap();
        let noise = crate::fbm::generate_fbm_rough(0.4, 2, grid, 9).unwrap();
        let coarse = coarsen_rough(&noise, 4).unwrap();
        assert_eq!(coarse.n_steps(), 16);
        for k in 0..=16 {
            assert_eq!(coarse.path.value(k), noise.path.value(4 * k));
        }
        // window tensors agree with the fine-path recombination
        let (_, fine_xx) = chen_combine(&noise, 8, 24).unwrap();
        let (_, coarse_xx) = chen_combine(&coarse, 2, 6).unwrap();
        for (a, b) in fine_xx.iter().zip(&coarse_xx) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(coarsen_rough(&noise, 7).is_err());
    }

    #[test]
    fn local_stability_linear_rate() {
        // C_g = 0, f = -a z: slope approaches -a
        let a = 0.8;
        let sys = make_linear_dissipative(a, vec![0.0, 0.0]).unwrap();
        let table = local_stability_experiment(
            &sys,
            &[0.0],
            &[0.5],
            20.0,
            1e-3,
            0.4,
            1,
            3,
            &Domain::centered_cube(2, 10.0).unwrap(),
        )
        .unwrap();
        let slope = table.rows[0].mean_dh;
        assert!((slope + a).abs() < 0.02 * a, "slope {slope}");
    }

    #[test]
    fn local_stability_flags_degenerate_start() {
        let sys = make_linear_dissipative(1.0, vec![0.0, 0.0]).unwrap();
        let table = local_stability_experiment(
            &sys,
            &[0.0],
            &[0.0],
            5.0,
            1e-2,
            0.4,
            1,
            1,
            &Domain::centered_cube(2, 10.0).unwrap(),
        )
        .unwrap();
        assert_eq!(table.rows[0].n_flagged, 1);
    }
}
