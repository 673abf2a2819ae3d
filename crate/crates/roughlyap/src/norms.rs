//! p-variation and Hölder norms of discrete (rough) paths.
//!
//! The path-level p-variation over a window `[t_i, t_j]` is
//!
//! ```text
//! |||x|||_{p-var,[i,j]} = ( sup_P  sum_cells |x_{t_l,t_k}|^p )^{1/p}
//! ```
//!
//! with the supremum over all partitions of the window into grid cells. On a
//! discrete grid the supremum is exact and computed by the dynamic program
//! `best(k) = max_{l<k} best(l) + |x_{t_l,t_k}|^p`. The second-level term uses
//! the same program on `||XX_{t_l,t_k}||^q` with `q = p/2`, where the window
//! values `XX_{t_l,t_k}` come from Chen recombination of the per-step data.
//! The rough-path norm combines both levels:
//!
//! ```text
//! |||x|||_{p-var} = ( |||x|||^p_{p-var} + |||XX|||^q_{q-var} )^{1/p}.
//! ```
//!
//! Exponents in this crate are snapped to the grid `k/16` so that `|d|^p`
//! reduces to integer powers and square-root chains; this keeps the O(n^2)
//! programs cheap on long windows without changing any result (the snap is a
//! parameter choice, not an approximation).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PathSample;
use crate::rough::RoughPathGrid;

/// Variation/Hölder exponents for rough-path norms.
///
/// `p` is the variation exponent in (2,3), `q = p/2`, `alpha = 1/p`, and `nu`
/// is the Hölder regularity of the driving path, with `1/3 < alpha < nu <= 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub nu: f64,
}

impl NormParams {
    pub fn new(p: f64, nu: f64) -> Result<Self> {
        if !(2.0 < p && p < 3.0) {
            return Err(Error::param(format!("variation exponent p must lie in (2,3), got {p}")));
        }
        let alpha = 1.0 / p;
        if !(alpha < nu && nu <= 0.5) {
            return Err(Error::param(format!(
                "need 1/3 < alpha = 1/p < nu <= 1/2, got alpha={alpha}, nu={nu}"
            )));
        }
        Ok(NormParams { p, q: p / 2.0, alpha, nu })
    }

    /// Default exponents for a driver of Hurst index `h in (1/3, 1/2]`.
    ///
    /// Picks `nu` strictly below `h` (sample paths of fBm are nu-Hölder only
    /// for nu < H) and the smallest exponent `p = k/16 > 1/nu`.
    pub fn for_hurst(h: f64) -> Result<Self> {
        if !(h > 1.0 / 3.0 && h <= 0.5) {
            return Err(Error::param(format!("hurst index must lie in (1/3, 1/2], got {h}")));
        }
        let nu = 1.0 / 3.0 + (h - 1.0 / 3.0) * 0.8;
        let mut k = (16.0 / nu).ceil() as i64;
        if (k as f64) / 16.0 <= 1.0 / nu {
            k += 1;
        }
        NormParams::new(k as f64 / 16.0, nu)
    }
}

/// `|x|^p` for `x >= 0`, specialized for exponents on the `k/16` grid.
///
/// For such exponents the power is an integer power times a product of
/// `x^{1/2}, x^{1/4}, x^{1/8}, x^{1/16}` factors, which is much cheaper than
/// `powf` inside the O(n^2) variation programs.
#[derive(Debug, Clone, Copy)]
pub struct PowSpec {
    exponent: f64,
    sixteenths: Option<u32>,
}

impl PowSpec {
    pub fn new(exponent: f64) -> Self {
        let scaled = exponent * 16.0;
        let sixteenths = if (scaled - scaled.round()).abs() < 1e-12 && scaled > 0.0 {
            Some(scaled.round() as u32)
        } else {
            None
        };
        PowSpec { exponent, sixteenths }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        match self.sixteenths {
            Some(k) => {
                let int_part = k / 16;
                let frac = k % 16;
                let mut acc = if int_part > 0 { x.powi(int_part as i32) } else { 1.0 };
                if frac != 0 {
                    let r2 = x.sqrt(); // x^{8/16}
                    let r4 = r2.sqrt(); // x^{4/16}
                    let r8 = r4.sqrt(); // x^{2/16}
                    let r16 = r8.sqrt(); // x^{1/16}
                    if frac & 8 != 0 {
                        acc *= r2;
                    }
                    if frac & 4 != 0 {
                        acc *= r4;
                    }
                    if frac & 2 != 0 {
                        acc *= r8;
                    }
                    if frac & 1 != 0 {
                        acc *= r16;
                    }
                }
                acc
            }
            None => x.powf(self.exponent),
        }
    }
}

/// Incremental two-level variation engine anchored at node `a`.
///
/// After `extend_to(k)` the engine holds, for every node `a <= j <= k`,
/// the path-level sum `sup sum |x|^p` and the second-level sum
/// `sup sum ||XX||^q` over partitions of `[t_a, t_j]`. Extension by one node
/// costs O(window * m^2), so building a window of length L costs O(L^2 m^2).
pub struct PrefixRoughVar<'a> {
    rp: &'a RoughPathGrid,
    anchor: usize,
    pow_p: PowSpec,
    pow_q: PowSpec,
    /// increments x_{a,k}, flattened m per node
    inc: Vec<f64>,
    /// level-2 terms XX_{a,k}, flattened m*m per node
    lvl2: Vec<f64>,
    best_p: Vec<f64>,
    best_q: Vec<f64>,
}

impl<'a> PrefixRoughVar<'a> {
    pub fn new(rp: &'a RoughPathGrid, anchor: usize, params: &NormParams) -> Result<Self> {
        if anchor > rp.n_steps() {
            return Err(Error::index(format!(
                "anchor {anchor} out of range for {} steps",
                rp.n_steps()
            )));
        }
        let m = rp.dims();
        Ok(PrefixRoughVar {
            rp,
            anchor,
            pow_p: PowSpec::new(params.p),
            pow_q: PowSpec::new(params.q),
            inc: vec![0.0; m],
            lvl2: vec![0.0; m * m],
            best_p: vec![0.0],
            best_q: vec![0.0],
        })
    }

    /// Highest node currently covered.
    pub fn covered(&self) -> usize {
        self.anchor + self.best_p.len() - 1
    }

    /// Extend coverage up to node `k` (inclusive).
    pub fn extend_to(&mut self, k: usize) -> Result<()> {
        if k > self.rp.n_steps() {
            return Err(Error::index(format!("node {k} out of range")));
        }
        let m = self.rp.dims();
        while self.covered() < k {
            let j = self.covered(); // appending node j+1
            // Chen: x_{a,j+1} = x_{a,j} + dx_j ; XX_{a,j+1} = XX_{a,j} + XX_j + x_{a,j} (x) dx_j
            let dx = self.rp.path.increment(j, j + 1);
            let step2 = self.rp.level2_step(j);
            let base = (j - self.anchor) * m;
            let base2 = (j - self.anchor) * m * m;
            let mut new_inc = vec![0.0; m];
            let mut new_lvl2 = vec![0.0; m * m];
            for r in 0..m {
                new_inc[r] = self.inc[base + r] + dx[r];
                for c in 0..m {
                    new_lvl2[r * m + c] =
                        self.lvl2[base2 + r * m + c] + step2[r * m + c] + self.inc[base + r] * dx[c];
                }
            }
            self.inc.extend_from_slice(&new_inc);
            self.lvl2.extend_from_slice(&new_lvl2);

            // dynamic program for both levels against every anchor-side node
            let idx_new = self.best_p.len(); // offset of node j+1
            let mut best_p = 0.0f64;
            let mut best_q = 0.0f64;
            for l in 0..idx_new {
                let mut d2 = 0.0;
                let mut f2 = 0.0;
                let lb = l * m;
                let lb2 = l * m * m;
                for r in 0..m {
                    let d = new_inc[r] - self.inc[lb + r];
                    d2 += d * d;
                }
                for r in 0..m {
                    let xl = self.inc[lb + r];
                    for c in 0..m {
                        // XX_{l,j+1} = XX_{a,j+1} - XX_{a,l} - x_{a,l} (x) x_{l,j+1}
                        let cross = xl * (new_inc[c] - self.inc[lb + c]);
                        let e = new_lvl2[r * m + c] - self.lvl2[lb2 + r * m + c] - cross;
                        f2 += e * e;
                    }
                }
                let cand_p = self.best_p[l] + self.pow_p.apply(d2.sqrt());
                if cand_p > best_p {
                    best_p = cand_p;
                }
                let cand_q = self.best_q[l] + self.pow_q.apply(f2.sqrt());
                if cand_q > best_q {
                    best_q = cand_q;
                }
            }
            if !best_p.is_finite() || !best_q.is_finite() {
                return Err(Error::Numerical("variation sum overflowed".into()));
            }
            self.best_p.push(best_p);
            self.best_q.push(best_q);
        }
        Ok(())
    }

    /// `sup sum |x|^p + sup sum ||XX||^q` over `[t_anchor, t_k]`.
    pub fn norm_pow_sum(&self, k: usize) -> f64 {
        let i = k - self.anchor;
        self.best_p[i] + self.best_q[i]
    }

    /// Path-level contribution `sup sum |x|^p` over `[t_anchor, t_k]`.
    pub fn path_pow(&self, k: usize) -> f64 {
        self.best_p[k - self.anchor]
    }

    /// Second-level contribution `sup sum ||XX||^q` over `[t_anchor, t_k]`.
    pub fn level2_pow(&self, k: usize) -> f64 {
        self.best_q[k - self.anchor]
    }

    /// Rough-path norm `(path^p + level2^q)^{1/p}` over `[t_anchor, t_k]`.
    pub fn norm(&self, k: usize, params: &NormParams) -> f64 {
        self.norm_pow_sum(k).powf(1.0 / params.p)
    }
}

/// Rough-path p-variation norm over the window `[t_i, t_j]`.
pub fn p_var_norm(rp: &RoughPathGrid, i: usize, j: usize, params: &NormParams) -> Result<f64> {
    if i > j || j > rp.n_steps() {
        return Err(Error::index(format!("window [{i},{j}] invalid for {} steps", rp.n_steps())));
    }
    if i == j {
        return Ok(0.0);
    }
    let mut eng = PrefixRoughVar::new(rp, i, params)?;
    eng.extend_to(j)?;
    Ok(eng.norm(j, params))
}

/// Path-level p-variation of a plain sample path over `[t_i, t_j]`.
pub fn path_p_variation(path: &PathSample, i: usize, j: usize, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::param(format!("variation exponent must be >= 1, got {p}")));
    }
    if i > j || j > path.grid.n_steps {
        return Err(Error::index(format!("window [{i},{j}] invalid")));
    }
    if i == j {
        return Ok(0.0);
    }
    let pow = PowSpec::new(p);
    let n = j - i;
    let mut best = vec![0.0f64; n + 1];
    for k in 1..=n {
        let mut b = 0.0f64;
        for l in 0..k {
            let cand = best[l] + pow.apply(path.increment_norm(i + l, i + k));
            if cand > b {
                b = cand;
            }
        }
        best[k] = b;
    }
    if !best[n].is_finite() {
        return Err(Error::Numerical("variation sum overflowed".into()));
    }
    Ok(best[n].powf(1.0 / p))
}

/// Hölder seminorm `max_{s<t} |x_{s,t}| / (t-s)^alpha` over grid pairs in `[t_i, t_j]`.
pub fn holder_norm(path: &PathSample, i: usize, j: usize, alpha: f64) -> Result<f64> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::param(format!("Hölder exponent must lie in (0,1), got {alpha}")));
    }
    if i >= j || j > path.grid.n_steps {
        return Err(Error::index(format!("window [{i},{j}] invalid")));
    }
    let dt = path.grid.dt;
    let mut best = 0.0f64;
    for s in i..j {
        for t in (s + 1)..=j {
            let ratio = path.increment_norm(s, t) / ((t - s) as f64 * dt).powf(alpha);
            if ratio > best {
                best = ratio;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::rough::lift_piecewise_linear;
    use proptest::prelude::*;

    fn scalar_path(values: &[f64]) -> PathSample {
        let grid = Grid::new(0.0, 1.0, values.len() - 1).unwrap();
        PathSample::new(grid, 1, values.to_vec()).unwrap()
    }

    /// Exhaustive-partition oracle for the path-level p-variation (power p).
    fn pvar_exhaustive_pow(values: &[f64], p: f64) -> f64 {
        let n = values.len() - 1;
        let pow = PowSpec::new(p);
        let mut best = 0.0f64;
        // interior nodes 1..n-1 in/out by bitmask, left-to-right fold
        for mask in 0..(1u32 << (n.saturating_sub(1))) {
            let mut nodes = vec![0usize];
            for b in 0..n.saturating_sub(1) {
                if mask & (1 << b) != 0 {
                    nodes.push(b + 1);
                }
            }
            nodes.push(n);
            let mut sum = 0.0;
            for w in nodes.windows(2) {
                sum += pow.apply((values[w[1]] - values[w[0]]).abs());
            }
            if sum > best {
                best = sum;
            }
        }
        best
    }

    #[test]
    fn pow_spec_matches_powf() {
        for &p in &[2.5f64, 2.625, 2.75, 2.9375, 1.3125, 1.375, 2.0, 1.0] {
            let spec = PowSpec::new(p);
            for &x in &[0.0f64, 1e-9, 0.3, 1.0, 7.5, 123.456] {
                let a = spec.apply(x);
                let b = x.powf(p);
                assert!(
                    (a - b).abs() <= 1e-12 * b.max(1.0),
                    "p={p} x={x}: {a} vs {b}"
                );
            }
        }
        // off-grid exponent falls back to powf
        let spec = PowSpec::new(2.123456);
        assert_eq!(spec.apply(1.7), 1.7f64.powf(2.123456));
    }

    #[test]
    fn monotone_path_single_interval() {
        // (a+b)^p >= a^p + b^p: a monotone path's variation is the total increment
        let path = scalar_path(&[0.0, 0.5, 1.2, 1.3, 2.0]);
        for &p in &[1.5, 2.0, 2.625] {
            let v = path_p_variation(&path, 0, 4, p).unwrap();
            assert!((v - 2.0).abs() < 1e-12, "p={p}: {v}");
        }
    }

    #[test]
    fn zigzag_sqrt2() {
        // nodes (0,1,0), p=2: partition {0,1,2} gives 1^2+1^2 = 2, full interval gives 0
        let path = scalar_path(&[0.0, 1.0, 0.0]);
        let v = path_p_variation(&path, 0, 2, 2.0).unwrap();
        assert!((v - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dp_equals_exhaustive_on_random_paths() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(2..=9usize);
            let values: Vec<f64> = (0..=n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let p = *[1.5, 2.0, 2.625, 2.75].iter().nth(rng.gen_range(0..4)).unwrap();
            let path = scalar_path(&values);
            let dp = path_p_variation(&path, 0, n, p).unwrap();
            let oracle = pvar_exhaustive_pow(&values, p).powf(1.0 / p);
            assert_eq!(dp, oracle, "n={n} p={p} values={values:?}");
        }
    }

    #[test]
    fn holder_norm_cases() {
        // constant path
        let path = scalar_path(&[1.0; 6]);
        assert_eq!(holder_norm(&path, 0, 5, 0.4).unwrap(), 0.0);

        // linear path slope c over [0,T]: norm = c * T^{1-alpha}, attained on the full window
        let c = 0.7;
        let grid = Grid::new(0.0, 0.5, 8).unwrap();
        let values: Vec<f64> = (0..=8).map(|k| c * grid.time(k)).collect();
        let path = PathSample::new(grid, 1, values).unwrap();
        let alpha = 0.35;
        let t = 4.0f64;
        let expect = c * t.powf(1.0 - alpha);
        let got = holder_norm(&path, 0, 8, alpha).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn holder_matches_bruteforce_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        let grid = Grid::new(-1.0, 0.25, 12).unwrap();
        let values: Vec<f64> = (0..=12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let path = PathSample::new(grid, 1, values.clone()).unwrap();
        let alpha = 0.45;
        let mut brute = 0.0f64;
        for s in 0..12 {
            for t in (s + 1)..=12 {
                brute = brute.max((values[t] - values[s]).abs() / ((t - s) as f64 * 0.25).powf(alpha));
            }
        }
        assert_eq!(holder_norm(&path, 0, 12, alpha).unwrap(), brute);
    }

    #[test]
    fn rough_norm_interval_monotone() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(21);
        let grid = Grid::new(0.0, 0.125, 16).unwrap();
        let values: Vec<f64> = (0..=16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rp = lift_piecewise_linear(PathSample::new(grid, 1, values).unwrap());
        let params = NormParams::new(2.75, 0.4).unwrap();
        let full = p_var_norm(&rp, 2, 14, &params).unwrap();
        let inner = p_var_norm(&rp, 4, 10, &params).unwrap();
        assert!(inner <= full + 1e-14, "inner {inner} > full {full}");
        assert_eq!(p_var_norm(&rp, 5, 5, &params).unwrap(), 0.0);
    }

    #[test]
    fn prefix_engine_matches_fresh_windows() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let grid = Grid::new(0.0, 0.1, 20).unwrap();
        let values: Vec<f64> = (0..(20 + 1) * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rp = lift_piecewise_linear(PathSample::new(grid, 2, values).unwrap());
        let params = NormParams::new(2.625, 0.39).unwrap();
        let mut eng = PrefixRoughVar::new(&rp, 3, &params).unwrap();
        eng.extend_to(18).unwrap();
        for k in [4usize, 9, 15, 18] {
            let fresh = p_var_norm(&rp, 3, k, &params).unwrap();
            assert!((eng.norm(k, &params) - fresh).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn prop_dp_equals_exhaustive(values in proptest::collection::vec(-3.0f64..3.0, 3..=9)) {
            let path = scalar_path(&values);
            let n = values.len() - 1;
            let p = 2.625;
            let dp = path_p_variation(&path, 0, n, p).unwrap();
            let oracle = pvar_exhaustive_pow(&values, p).powf(1.0 / p);
            prop_assert_eq!(dp, oracle);
        }

        #[test]
        fn prop_interval_monotone(values in proptest::collection::vec(-3.0f64..3.0, 6..=12),
                                  lo in 0usize..2, hi_back in 0usize..2) {
            let n = values.len() - 1;
            let path = scalar_path(&values);
            let p = 2.5;
            let outer = path_p_variation(&path, 0, n, p).unwrap();
            let inner = path_p_variation(&path, lo, n - hi_back.min(n - lo - 1), p).unwrap();
            prop_assert!(inner <= outer + 1e-12);
        }
    }
}
