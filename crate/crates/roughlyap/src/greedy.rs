//! Greedy stopping-time partitions controlling rough-path oscillation.
//!
//! The partition chops a window into maximal pieces whose rough-path
//! p-variation stays at or below the threshold `lambda / (16 C_p C_g)`. On a
//! grid the infimum in the stopping-time definition falls between nodes; the
//! discrete rule takes the last node that still satisfies the threshold, so
//! the at-most-threshold invariant consumed downstream holds on every piece.
//! A single grid step can already exceed the threshold; such forced steps are
//! flagged as degenerate rather than rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{NormParams, PowSpec, PrefixRoughVar};
use crate::rough::RoughPathGrid;

/// Configuration for the greedy partition: `lambda` in (0,1), the sewing-lemma
/// constant `C_p` (not pinned numerically by the underlying theory; default
/// 4.0, overridable) and the diffusion bound `C_g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub lambda: f64,
    pub c_p: f64,
    pub c_g: f64,
    pub params: NormParams,
}

pub const DEFAULT_C_P: f64 = 4.0;

impl GreedyConfig {
    pub fn new(lambda: f64, c_p: f64, c_g: f64, params: NormParams) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::param(format!("lambda must lie in (0,1), got {lambda}")));
        }
        if !(c_p > 0.0 && c_g > 0.0) {
            return Err(Error::param("C_p and C_g must be positive"));
        }
        Ok(GreedyConfig { lambda, c_p, c_g, params })
    }

    /// The oscillation threshold `lambda / (16 C_p C_g)`.
    pub fn threshold(&self) -> f64 {
        self.lambda / (16.0 * self.c_p * self.c_g)
    }
}

/// A greedy partition of `[t_a, t_b]`: node indices, per-piece norms, and
/// degenerate-step flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyPartition {
    pub threshold: f64,
    pub node_indices: Vec<usize>,
    pub norms: Vec<f64>,
    pub degenerate: Vec<bool>,
}

impl GreedyPartition {
    /// Number of pieces.
    pub fn count(&self) -> usize {
        self.norms.len()
    }

    pub fn n_degenerate(&self) -> usize {
        self.degenerate.iter().filter(|d| **d).count()
    }
}

/// Construct the greedy partition of `[t_a, t_b]`.
pub fn greedy_times(
    rp: &RoughPathGrid,
    interval: (usize, usize),
    cfg: &GreedyConfig,
) -> Result<GreedyPartition> {
    let (a, b) = interval;
    if a >= b || b > rp.n_steps() {
        return Err(Error::index(format!(
            "interval ({a},{b}) invalid for {} steps",
            rp.n_steps()
        )));
    }
    let thr = cfg.threshold();
    let pow_p = PowSpec::new(cfg.params.p);
    let thr_pow = pow_p.apply(thr);
    let mut nodes = vec![a];
    let mut norms = Vec::new();
    let mut degenerate = Vec::new();
    let mut start = a;
    while start < b {
        let mut eng = PrefixRoughVar::new(rp, start, &cfg.params)?;
        eng.extend_to(start + 1)?;
        if eng.norm_pow_sum(start + 1) > thr_pow {
            // one forced step
            nodes.push(start + 1);
            norms.push(eng.norm(start + 1, &cfg.params));
            degenerate.push(true);
            start += 1;
            continue;
        }
        let mut stop = start + 1;
        while stop < b {
            eng.extend_to(stop + 1)?;
            if eng.norm_pow_sum(stop + 1) > thr_pow {
                break;
            }
            stop += 1;
        }
        nodes.push(stop);
        norms.push(eng.norm(stop, &cfg.params));
        degenerate.push(false);
        start = stop;
    }
    Ok(GreedyPartition {
        threshold: thr,
        node_indices: nodes,
        norms,
        degenerate,
    })
}

/// Count-bound report: `N <= 1 + threshold^{-p} |||x|||^p_{p-var}` over the
/// partitioned window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountBoundReport {
    pub count: usize,
    pub bound: f64,
    pub ok: bool,
}

pub fn count_bound_report(
    partition: &GreedyPartition,
    rp: &RoughPathGrid,
    interval: (usize, usize),
    cfg: &GreedyConfig,
) -> Result<CountBoundReport> {
    let (a, b) = interval;
    if partition.node_indices.first() != Some(&a) || partition.node_indices.last() != Some(&b) {
        return Err(Error::input("partition does not span the given interval"));
    }
    let mut eng = PrefixRoughVar::new(rp, a, &cfg.params)?;
    eng.extend_to(b)?;
    let total_pow = eng.norm_pow_sum(b);
    let pow_p = PowSpec::new(cfg.params.p);
    let thr_pow = pow_p.apply(cfg.threshold());
    let bound = 1.0 + total_pow / thr_pow;
    let count = partition.count();
    Ok(CountBoundReport {
        count,
        bound,
        ok: (count as f64) <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::generate_fbm_rough;
    use crate::grid::{Grid, PathSample};
    use crate::norms::p_var_norm;
    use crate::rough::lift_piecewise_linear;

    fn params() -> NormParams {
        NormParams::for_hurst(0.4).unwrap()
    }

    #[test]
    fn whole_interval_below_threshold() {
        let grid = Grid::new(0.0, 0.1, 8).unwrap();
        let values: Vec<f64> = (0..=8).map(|k| 1e-4 * k as f64).collect();
        let rp = lift_piecewise_linear(PathSample::new(grid, 1, values).unwrap());
        let cfg = GreedyConfig::new(0.5, 4.0, 0.05, params()).unwrap();
        let part = greedy_times(&rp, (0, 8), &cfg).unwrap();
        assert_eq!(part.node_indices, vec![0, 8]);
        assert_eq!(part.count(), 1);
        assert!(!part.degenerate[0]);
        let report = count_bound_report(&part, &rp, (0, 8), &cfg).unwrap();
        assert!(report.ok);
        assert_eq!(report.count, 1);
    }

    #[test]
    fn linear_path_spacing() {
        // x_t = c t over a window of span u: path term (cu)^p with the single
        // interval optimal, level-2 term (c^2 u^2 / 2)^q = 2^{-q} (cu)^p, so a
        // piece saturates at cu = thr / (1 + 2^{-q})^{1/p}
        let c = 2.0;
        let dt = 1e-3;
        let grid = Grid::new(0.0, dt, 4000).unwrap();
        let values: Vec<f64> = (0..=4000).map(|k| c * grid.time(k)).collect();
        let rp = lift_piecewise_linear(PathSample::new(grid, 1, values).unwrap());
        let cfg = GreedyConfig::new(0.5, 4.0, 0.05, params()).unwrap();
        let part = greedy_times(&rp, (0, 4000), &cfg).unwrap();
        let p = cfg.params.p;
        let q = cfg.params.q;
        let u_max = cfg.threshold() / (1.0 + 0.5f64.powf(q)).powf(1.0 / p);
        let expected_span = (u_max / (c * dt)).floor() as usize;
        for w in part.node_indices.windows(2).take(part.count() - 1) {
            let span = w[1] - w[0];
            assert!(
                span == expected_span || span + 1 == expected_span,
                "span {span} vs expected {expected_span}"
            );
        }
    }

    #[test]
    fn degenerate_single_step_flagged() {
        let grid = Grid::new(0.0, 1.0, 3).unwrap();
        let rp = lift_piecewise_linear(
            PathSample::new(grid, 1, vec![0.0, 10.0, 10.001, 10.002]).unwrap(),
        );
        let cfg = GreedyConfig::new(0.5, 4.0, 0.05, params()).unwrap();
        let part = greedy_times(&rp, (0, 3), &cfg).unwrap();
        assert!(part.degenerate[0]);
        assert!(part.norms[0] > cfg.threshold());
        // remaining flat tail collapses into one ordinary piece
        assert_eq!(part.node_indices.last(), Some(&3));
    }

    #[test]
    fn partition_invariants_on_fbm() {
        let grid = Grid::new(0.0, 1.0 / 512.0, 512).unwrap();
        let rp = generate_fbm_rough(0.4, 1, grid, 42).unwrap();
        let cfg = GreedyConfig::new(0.5, 4.0, 0.05, params()).unwrap();
        let part = greedy_times(&rp, (0, 512), &cfg).unwrap();
        // nodes strictly increasing, pieces at or below threshold unless degenerate
        for (i, w) in part.node_indices.windows(2).enumerate() {
            assert!(w[0] < w[1]);
            if !part.degenerate[i] {
                assert!(part.norms[i] <= part.threshold * (1.0 + 1e-12));
            }
            // maximality: extending any non-final non-degenerate piece by one
            // node exceeds the threshold
            if !part.degenerate[i] && w[1] < 512 {
                let extended = p_var_norm(&rp, w[0], w[1] + 1, &cfg.params).unwrap();
                assert!(extended > part.threshold);
            }
        }
        // determinism
        let again = greedy_times(&rp, (0, 512), &cfg).unwrap();
        assert_eq!(part, again);
        let report = count_bound_report(&part, &rp, (0, 512), &cfg).unwrap();
        assert!(report.ok, "N = {} bound = {}", report.count, report.bound);
    }

    #[test]
    fn huge_threshold_single_piece() {
        let grid = Grid::new(0.0, 1.0 / 64.0, 64).unwrap();
        let rp = generate_fbm_rough(0.4, 1, grid, 7).unwrap();
        // C_g -> 0 sends the threshold to infinity: single piece, bound -> 1
        let cfg = GreedyConfig::new(0.999, 4.0, 1e-12, params()).unwrap();
        let part = greedy_times(&rp, (0, 64), &cfg).unwrap();
        assert_eq!(part.count(), 1);
        let report = count_bound_report(&part, &rp, (0, 64), &cfg).unwrap();
        assert!(report.ok);
        assert!(report.bound >= 1.0 && report.bound < 1.0 + 1e-6);
    }
}
