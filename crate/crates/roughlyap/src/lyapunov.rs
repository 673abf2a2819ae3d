//! Lyapunov functions, strong-condition certificates and decay bounds.
//!
//! A certificate `(lambda, C_lambda, delta)` asserts the perturbed gradient
//! condition
//!
//! ```text
//! sup_{|psi| <= lambda, |eta| <= lambda}
//!     <grad V(z), (I + psi) f(z + eta)>  <=  C_lambda - delta V(z)
//! ```
//!
//! uniformly over a domain. [`check_strong_condition`] validates a certificate
//! numerically on a grid with sampled perturbations; the `derive_cert_*`
//! constructors produce certificates from classical Lyapunov data for globally
//! Lipschitz drifts; [`fhn_lyapunov`] and [`pendulum_lyapunov`] build the
//! explicit functions for the two nonlinear examples. [`decay_envelope`] and
//! [`absorbing_radius`] evaluate the pathwise decay estimate and the absorbing
//! ball radius driven by rough-path norms over unit windows.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::models::DriftField;
use crate::norms::{NormParams, PowSpec, PrefixRoughVar};
use crate::rough::RoughPathGrid;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Growth-class tag for comparison functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "class")]
pub enum KClass {
    Tempered,
    Poly { c_kappa: f64, rho_kappa: f64 },
}

/// A strictly increasing comparison function with optional inverse.
#[derive(Clone)]
pub struct KBound {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    inv: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub class: KClass,
}

impl KBound {
    pub fn new(f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, class: KClass) -> Self {
        KBound { f, inv: None, class }
    }

    pub fn with_inverse(mut self, inv: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Self {
        self.inv = Some(inv);
        self
    }

    pub fn apply(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    pub fn inverse(&self, u: f64) -> Option<f64> {
        self.inv.as_ref().map(|f| f(u))
    }
}

impl std::fmt::Debug for KBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KBound").field("class", &self.class).finish()
    }
}

/// A candidate Lyapunov function with analytic gradient and growth data.
#[derive(Clone)]
pub struct LyapunovFn {
    pub dim: usize,
    v: ScalarFn,
    grad: GradFn,
    /// gradient bound `|grad V| <= L_V`
    pub l_v: f64,
    pub alpha: Option<KBound>,
    pub beta: Option<KBound>,
    /// classical-condition constants `(d1, d2)`: `<grad V, f> <= d1 - d2 V`
    pub classical: Option<(f64, f64)>,
    /// region on which the sandwich bounds are claimed (None = everywhere)
    pub bound_domain: Option<Domain>,
    pub name: String,
}

impl std::fmt::Debug for LyapunovFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LyapunovFn")
            .field("dim", &self.dim)
            .field("l_v", &self.l_v)
            .field("name", &self.name)
            .finish()
    }
}

impl LyapunovFn {
    pub fn new(dim: usize, v: ScalarFn, grad: GradFn, l_v: f64, name: impl Into<String>) -> Self {
        LyapunovFn {
            dim,
            v,
            grad,
            l_v,
            alpha: None,
            beta: None,
            classical: None,
            bound_domain: None,
            name: name.into(),
        }
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        (self.v)(z)
    }

    pub fn grad_into(&self, z: &[f64], out: &mut [f64]) {
        (self.grad)(z, out)
    }

    pub fn grad(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.grad_into(z, &mut out);
        out
    }

    /// Central finite-difference gradient (test oracle).
    pub fn grad_fd(&self, z: &[f64], h: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        for k in 0..self.dim {
            zp[k] = z[k] + h;
            zm[k] = z[k] - h;
            out[k] = (self.value(&zp) - self.value(&zm)) / (2.0 * h);
            zp[k] = z[k];
            zm[k] = z[k];
        }
        out
    }
}

/// Where a certificate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertProvenance {
    DerivedLipschitz,
    DerivedLipschitz2,
    FhnExplicit,
    CheckedNumerically,
}

/// The triple certifying the strong condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongCert {
    pub lambda: f64,
    pub c_lambda: f64,
    pub delta: f64,
    pub provenance: CertProvenance,
}

impl StrongCert {
    pub fn new(lambda: f64, c_lambda: f64, delta: f64, provenance: CertProvenance) -> Result<Self> {
        if !(lambda >= 0.0 && lambda < 1.0) {
            return Err(Error::param(format!("lambda must lie in [0,1), got {lambda}")));
        }
        if !(c_lambda > 0.0 && delta > 0.0) {
            return Err(Error::param("certificate needs C_lambda, delta > 0"));
        }
        Ok(StrongCert { lambda, c_lambda, delta, provenance })
    }
}

/// Sampler for the perturbation pairs `(psi, eta)` with `|psi|_F <= lambda`
/// (the Frobenius ball sits inside the operator-norm ball) and `|eta| <= lambda`.
///
/// The sample sets always contain the zero perturbation and boundary-norm
/// draws; remaining radii alternate between the boundary and volume-uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSampler {
    pub lambda: f64,
    pub n_psi: usize,
    pub n_eta: usize,
    pub seed: u64,
}

impl PerturbationSampler {
    pub fn new(lambda: f64, n_psi: usize, n_eta: usize, seed: u64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda < 1.0) {
            return Err(Error::param(format!("lambda must lie in [0,1), got {lambda}")));
        }
        if n_psi == 0 || n_eta == 0 {
            return Err(Error::param("need at least one psi and one eta sample"));
        }
        Ok(PerturbationSampler { lambda, n_psi, n_eta, seed })
    }

    /// The degenerate sampler reducing the check to the classical condition.
    pub fn classical(seed: u64) -> Self {
        PerturbationSampler { lambda: 0.0, n_psi: 1, n_eta: 1, seed }
    }

    /// Draw the fixed sample sets for dimension `d`.
    pub fn draw(&self, d: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        let psis = draw_ball_samples(&mut rng, d * d, self.n_psi, self.lambda);
        let etas = draw_ball_samples(&mut rng, d, self.n_eta, self.lambda);
        (psis, etas)
    }
}

fn draw_ball_samples<R: Rng>(rng: &mut R, dim: usize, count: usize, radius: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    out.push(vec![0.0; dim]); // the zero perturbation, always present
    for i in 1..count {
        let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        // odd draws sit on the boundary, even draws fill the ball uniformly
        let r = if i % 2 == 1 {
            radius
        } else {
            radius * rng.gen_range(0.0f64..1.0).powf(1.0 / dim as f64)
        };
        for v in dir.iter_mut() {
            *v *= r / norm;
        }
        out.push(dir);
    }
    out
}

/// Result of a strong-condition sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub pass: bool,
    pub pass_rate: f64,
    pub worst_margin: f64,
    pub worst_point: Vec<f64>,
    pub n_points: usize,
    pub n_excluded: usize,
}

/// Sweep the domain grid and check
/// `sup_{psi,eta} <grad V(z), (I+psi) f(z+eta)> <= C_lambda - delta V(z)`.
///
/// The margin at `z` is the right-hand side minus the sampled supremum; the
/// check passes when every margin is nonnegative. Points where `V` or `f`
/// evaluate non-finite are excluded and counted. Ties in the worst margin
/// resolve to the lowest grid index, so the sweep is deterministic under
/// parallel evaluation.
pub fn check_strong_condition(
    v: &LyapunovFn,
    f: &DriftField,
    domain: &Domain,
    resolution: usize,
    cert: &StrongCert,
    sampler: &PerturbationSampler,
) -> Result<CheckReport> {
    if v.dim != f.dim || domain.dim() != v.dim {
        return Err(Error::param("dimension mismatch between V, f and domain"));
    }
    let d = v.dim;
    let (psis, etas) = sampler.draw(d);
    let points = domain.grid_points(resolution);

    let margins: Vec<Option<f64>> = points
        .par_iter()
        .map(|z| point_margin(v, f, z, cert, &psis, &etas))
        .collect();

    let mut worst = f64::INFINITY;
    let mut worst_idx = None;
    let mut n_pass = 0usize;
    let mut n_excluded = 0usize;
    let mut n_valid = 0usize;
    for (i, m) in margins.iter().enumerate() {
        match m {
            None => n_excluded += 1,
            Some(margin) => {
                n_valid += 1;
                if *margin >= 0.0 {
                    n_pass += 1;
                }
                if *margin < worst {
                    worst = *margin;
                    worst_idx = Some(i);
                }
            }
        }
    }
    if n_valid == 0 {
        return Err(Error::Numerical("no finite evaluation point in the sweep".into()));
    }
    Ok(CheckReport {
        pass: n_pass == n_valid,
        pass_rate: n_pass as f64 / n_valid as f64,
        worst_margin: worst,
        worst_point: points[worst_idx.unwrap()].clone(),
        n_points: n_valid,
        n_excluded,
    })
}

fn point_margin(
    v: &LyapunovFn,
    f: &DriftField,
    z: &[f64],
    cert: &StrongCert,
    psis: &[Vec<f64>],
    etas: &[Vec<f64>],
) -> Option<f64> {
    let d = z.len();
    let vz = v.value(z);
    if !vz.is_finite() {
        return None;
    }
    let mut grad = vec![0.0; d];
    v.grad_into(z, &mut grad);
    if grad.iter().any(|g| !g.is_finite()) {
        return None;
    }
    let mut zp = vec![0.0; d];
    let mut fz = vec![0.0; d];
    let mut sup = f64::NEG_INFINITY;
    for eta in etas {
        for k in 0..d {
            zp[k] = z[k] + eta[k];
        }
        f.eval_into(&zp, &mut fz);
        if fz.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let base: f64 = grad.iter().zip(&fz).map(|(g, x)| g * x).sum();
        for psi in psis {
            // <grad, psi f> with psi row-major d x d
            let mut extra = 0.0;
            for r in 0..d {
                let mut acc = 0.0;
                for c in 0..d {
                    acc += psi[r * d + c] * fz[c];
                }
                extra += grad[r] * acc;
            }
            let val = base + extra;
            if val > sup {
                sup = val;
            }
        }
    }
    Some(cert.c_lambda - cert.delta * vz - sup)
}

/// Classical Lyapunov data feeding the Lipschitz-drift certificate
/// constructors: `<grad V, f> <= d1 - d2 V`, `|grad V| <= L_V`, and the drift
/// Lipschitz constant `C_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalCertData {
    pub d1: f64,
    pub d2: f64,
    pub l_v: f64,
    pub c_f: f64,
}

/// Certificate for a globally Lipschitz drift from a classical Lyapunov
/// function with linear sandwich bounds `alpha |z| + c <= V(z)`:
///
/// ```text
/// C_lambda = d1 + L_V lambda (2 C_f lambda + |f(0)| - (c/alpha) C_f)
/// delta    = d2 - (1/alpha) L_V C_f lambda
/// ```
pub fn derive_cert_lipschitz(
    data: &ClassicalCertData,
    f0_norm: f64,
    alpha: f64,
    c: f64,
    lambda: f64,
) -> Result<StrongCert> {
    if !(alpha > 0.0) {
        return Err(Error::param("lower-bound slope alpha must be positive"));
    }
    let c_lambda =
        data.d1 + data.l_v * lambda * (2.0 * data.c_f * lambda + f0_norm - (c / alpha) * data.c_f);
    let delta = data.d2 - data.l_v * data.c_f * lambda / alpha;
    if delta <= 0.0 || c_lambda <= 0.0 {
        return Err(Error::Infeasible(format!(
            "lambda = {lambda} gives C_lambda = {c_lambda}, delta = {delta}"
        )));
    }
    StrongCert::new(lambda, c_lambda, delta, CertProvenance::DerivedLipschitz)
}

/// Largest feasible `lambda` for [`derive_cert_lipschitz`], located by
/// bisection on the feasibility predicate.
pub fn max_feasible_lambda_lipschitz(
    data: &ClassicalCertData,
    f0_norm: f64,
    alpha: f64,
    c: f64,
) -> f64 {
    bisect_feasible(|lam| derive_cert_lipschitz(data, f0_norm, alpha, c, lam).is_ok())
}

/// Certificate variant for functions dominating the drift norm,
/// `(1/K) |f(z)| + c <= V(z)`:
///
/// ```text
/// C_lambda = d1 + L_V lambda (K L_V lambda - K c + C_f)
/// delta    = d2 - K L_V lambda
/// ```
pub fn derive_cert_lipschitz2(
    data: &ClassicalCertData,
    k: f64,
    c: f64,
    lambda: f64,
) -> Result<StrongCert> {
    if !(k > 0.0) {
        return Err(Error::param("norm-domination constant K must be positive"));
    }
    let c_lambda = data.d1 + data.l_v * lambda * (k * data.l_v * lambda - k * c + data.c_f);
    let delta = data.d2 - k * data.l_v * lambda;
    if delta <= 0.0 || c_lambda <= 0.0 {
        return Err(Error::Infeasible(format!(
            "lambda = {lambda} gives C_lambda = {c_lambda}, delta = {delta}"
        )));
    }
    StrongCert::new(lambda, c_lambda, delta, CertProvenance::DerivedLipschitz2)
}

pub fn max_feasible_lambda_lipschitz2(data: &ClassicalCertData, k: f64, c: f64) -> f64 {
    bisect_feasible(|lam| derive_cert_lipschitz2(data, k, c, lam).is_ok())
}

fn bisect_feasible(feasible: impl Fn(f64) -> bool) -> f64 {
    let mut lo = 0.0f64;
    let mut hi = 1.0 - 1e-12;
    if feasible(hi) {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `V(z) = sqrt(1 + |z|^2)` with `|grad V| <= 1` and linear sandwich
/// `|z| <= V(z) <= 1 + |z|`. Given drift dissipativity constants `(d1, d2)`
/// the classical condition holds with `(d1 + d2, d2)`.
pub fn sqrt_norm_lyapunov(dim: usize, dissipativity: Option<(f64, f64)>) -> LyapunovFn {
    let v: ScalarFn = Arc::new(|z| (1.0 + z.iter().map(|x| x * x).sum::<f64>()).sqrt());
    let grad: GradFn = Arc::new(|z, out| {
        let vv = (1.0 + z.iter().map(|x| x * x).sum::<f64>()).sqrt();
        for (o, x) in out.iter_mut().zip(z) {
            *o = x / vv;
        }
    });
    let mut fun = LyapunovFn::new(dim, v, grad, 1.0, "sqrt-norm");
    fun.alpha = Some(
        KBound::new(Arc::new(|r| r), KClass::Poly { c_kappa: 1.0, rho_kappa: 1.0 })
            .with_inverse(Arc::new(|u| u)),
    );
    fun.beta = Some(KBound::new(
        Arc::new(|r| 1.0 + r),
        KClass::Poly { c_kappa: 1.0, rho_kappa: 1.0 },
    ));
    fun.classical = dissipativity.map(|(d1, d2)| (d1 + d2, d2));
    fun
}

/// Pendulum Lyapunov function
/// `V(v, w) = sqrt(1 + w^2/2 + sigma^2 (1 - cos v))` with `L_V = 1 + sigma^2`
/// and classical constants `(2 mu (1 + sigma^2), 2 mu)`. The linear sandwich
/// holds on the strip `|v| <= 2` (recorded as the bound domain).
pub fn pendulum_lyapunov(sigma: f64, mu: f64) -> Result<LyapunovFn> {
    if !(sigma > 0.0 && mu > 0.0) {
        return Err(Error::param("pendulum needs sigma, mu > 0"));
    }
    let s2 = sigma * sigma;
    let v: ScalarFn =
        Arc::new(move |z| (1.0 + 0.5 * z[1] * z[1] + s2 * (1.0 - z[0].cos())).sqrt());
    let grad: GradFn = Arc::new(move |z, out| {
        let vv = (1.0 + 0.5 * z[1] * z[1] + s2 * (1.0 - z[0].cos())).sqrt();
        out[0] = s2 * z[0].sin() / (2.0 * vv);
        out[1] = z[1] / (2.0 * vv);
    });
    let mut fun = LyapunovFn::new(2, v, grad, 1.0 + s2, "pendulum");
    fun.classical = Some((2.0 * mu * (1.0 + s2), 2.0 * mu));
    // (V - V(0)) sandwich on |v| <= 2: (sigma ^ 1)/2 |z| <= V - 1 <= (1+sigma)(1+|z|)
    let ca = 0.5 * sigma.min(1.0);
    let cb = 1.0 + sigma;
    fun.alpha = Some(
        KBound::new(
            Arc::new(move |r| 1.0 + ca * r),
            KClass::Poly { c_kappa: 1.0 + ca, rho_kappa: 1.0 },
        )
        .with_inverse(Arc::new(move |u| ((u - 1.0) / ca).max(0.0))),
    );
    fun.beta = Some(KBound::new(
        Arc::new(move |r| 1.0 + cb * (1.0 + r)),
        KClass::Poly { c_kappa: 1.0 + 2.0 * cb, rho_kappa: 1.0 },
    ));
    fun.bound_domain = Some(Domain::new(vec![-2.0, -1e6], vec![2.0, 1e6])?);
    Ok(fun)
}

/// Template carrying the explicit FHN constants: `B = 6/(eps mu)`,
/// `delta = eps mu / (12 (2 + eps mu))`, and the analytic gradient bound.
/// `lambda = 1/(12 D)` stays open until the proof constant `D` is fixed (it is
/// configuration; see [`fhn_estimate_d`] for the default bounding procedure).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhnCertTemplate {
    pub b: f64,
    pub delta: f64,
    pub l_v: f64,
}

impl FhnCertTemplate {
    pub fn lambda_for(&self, d: f64) -> f64 {
        1.0 / (12.0 * d)
    }

    /// Fill in the configured constants `(D, C_lambda)`.
    pub fn cert(&self, d: f64, c_lambda: f64) -> Result<StrongCert> {
        StrongCert::new(self.lambda_for(d), c_lambda, self.delta, CertProvenance::FhnExplicit)
    }
}

/// FHN Lyapunov function `V(v, w) = (1 + v^4 + B w^2)^{1/4}`, `B = 6/(eps mu)`,
/// with sandwich `(2 ^ B)^{1/4} |z|^{1/2} <= V <= (1 + B/2)^{1/4} (1 + |z|)`
/// and the gradient bound `L_V = sqrt(1 + (B/2) 3^{-3/2})`.
pub fn fhn_lyapunov(epsilon: f64, mu: f64) -> Result<(LyapunovFn, FhnCertTemplate)> {
    if !(epsilon > 0.0 && mu > 0.0) {
        return Err(Error::param("FHN needs epsilon, mu > 0"));
    }
    let b = 6.0 / (epsilon * mu);
    let delta = epsilon * mu / (12.0 * (2.0 + epsilon * mu));
    let l_v = (1.0 + 0.5 * b / 3.0f64.powf(1.5)).sqrt();

    let v: ScalarFn = Arc::new(move |z| {
        let (x, w) = (z[0], z[1]);
        (1.0 + x.powi(4) + b * w * w).powf(0.25)
    });
    let grad: GradFn = Arc::new(move |z, out| {
        let (x, w) = (z[0], z[1]);
        let den = (1.0 + x.powi(4) + b * w * w).powf(0.75);
        out[0] = x.powi(3) / den;
        out[1] = 0.5 * b * w / den;
    });
    let mut fun = LyapunovFn::new(2, v, grad, l_v, "fhn-quartic");
    let ca = 2.0f64.min(b).powf(0.25);
    let cb = (1.0 + 0.5 * b).powf(0.25);
    fun.alpha = Some(
        KBound::new(
            Arc::new(move |r: f64| ca * r.sqrt()),
            KClass::Poly { c_kappa: ca, rho_kappa: 0.5 },
        )
        .with_inverse(Arc::new(move |u: f64| (u / ca).max(0.0).powi(2))),
    );
    fun.beta = Some(KBound::new(
        Arc::new(move |r| cb * (1.0 + r)),
        KClass::Poly { c_kappa: 2.0 * cb, rho_kappa: 1.0 },
    ));
    Ok((fun, FhnCertTemplate { b, delta, l_v }))
}

/// Numerical bound for the FHN proof constant `D`: the smallest constant with
/// remainder `4V^3 [<grad V, (I+psi) f(z+eta)> - <grad V, f(z)>]` dominated by
/// `D (lambda v^6 + lambda w^2 + 1)` over the domain and the perturbation
/// balls of radius `lambda = 1/(12 D)`.
///
/// The bound and the radius depend on each other, so the probe iterates the
/// map `D -> sup(remainder ratio at 1/(12D))` a few times from `D = 15` and
/// returns a 15% safety ceiling over the largest late iterate.
pub fn fhn_estimate_d(
    epsilon: f64,
    mu: f64,
    current: f64,
    offset: f64,
    domain: &Domain,
    seed: u64,
) -> Result<f64> {
    let (lyap, _tpl) = fhn_lyapunov(epsilon, mu)?;
    let drift = crate::models::make_fhn(epsilon, mu, current, offset)?.drift;
    let b = 6.0 / (epsilon * mu);
    let points = domain.grid_points(81);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let psis = draw_ball_samples(&mut rng, 4, 48, 1.0); // unit shapes, rescaled per probe
    let etas = draw_ball_samples(&mut rng, 2, 48, 1.0);

    let ratio_at = |lambda: f64| -> f64 {
        points
            .par_iter()
            .map(|z| {
                let (x, w) = (z[0], z[1]);
                let v4 = 1.0 + x.powi(4) + b * w * w;
                let scale = 4.0 * v4.powf(0.75);
                let grad = lyap.grad(z);
                let fz = drift.eval(z);
                let base = scale * (grad[0] * fz[0] + grad[1] * fz[1]);
                let denom = lambda * (x.powi(6) + w * w) + 1.0;
                let mut worst: f64 = 0.0;
                for eta in &etas {
                    let zp = [z[0] + lambda * eta[0], z[1] + lambda * eta[1]];
                    let fp = drift.eval(&zp);
                    for psi in &psis {
                        let p0 = fp[0] + lambda * (psi[0] * fp[0] + psi[1] * fp[1]);
                        let p1 = fp[1] + lambda * (psi[2] * fp[0] + psi[3] * fp[1]);
                        let val = scale * (grad[0] * p0 + grad[1] * p1);
                        let r = (val - base) / denom;
                        if r > worst {
                            worst = r;
                        }
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    };

    let mut d = 15.0f64;
    let mut late_max: f64 = 1.0;
    for it in 0..4 {
        let r = ratio_at(1.0 / (12.0 * d)).max(1.0);
        if it >= 2 {
            late_max = late_max.max(r);
        }
        d = r;
    }
    Ok((late_max.max(d) * 1.15).ceil())
}

/// Probe value for a free `C_lambda`: the sampled supremum of
/// `bracket + delta V` over a coarse grid, plus a headroom margin. The result
/// is a candidate configuration value; it must still be validated with
/// [`check_strong_condition`] on an independent, finer sweep.
pub fn calibrate_c_lambda(
    v: &LyapunovFn,
    f: &DriftField,
    domain: &Domain,
    resolution: usize,
    delta: f64,
    sampler: &PerturbationSampler,
    headroom: f64,
) -> Result<f64> {
    let (psis, etas) = sampler.draw(v.dim);
    let probe_cert = StrongCert {
        lambda: sampler.lambda,
        c_lambda: 1.0,
        delta,
        provenance: CertProvenance::CheckedNumerically,
    };
    let points = domain.grid_points(resolution);
    let sup = points
        .par_iter()
        .filter_map(|z| point_margin(v, f, z, &probe_cert, &psis, &etas))
        .map(|margin| 1.0 - margin) // bracket + delta V = C_lambda - margin
        .reduce(|| f64::NEG_INFINITY, f64::max);
    if !sup.is_finite() {
        return Err(Error::Numerical("calibration sweep produced no finite value".into()));
    }
    Ok(sup + headroom)
}

/// Parameters of the decay envelope and the absorbing-radius series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParams {
    pub cert: StrongCert,
    pub l_v: f64,
    pub c_p: f64,
    pub c_g: f64,
    /// variation exponent entering `H`
    pub p: f64,
}

impl EnvelopeParams {
    /// `H(xi) = L_V (16 C_p C_g)^p lambda^{1-p} xi^p + 8 L_V C_p C_g xi`.
    pub fn h_term(&self, xi: f64) -> f64 {
        let base = 16.0 * self.c_p * self.c_g;
        self.l_v * base.powf(self.p) * self.cert.lambda.powf(1.0 - self.p) * xi.powf(self.p)
            + 8.0 * self.l_v * self.c_p * self.c_g * xi
    }
}

/// Pathwise decay envelope
/// `e^{-delta t} [V0 - C_lambda/delta] + C_lambda/delta + H(xi)`.
pub fn decay_envelope(v0: f64, t: f64, xi: f64, env: &EnvelopeParams) -> f64 {
    let ratio = env.cert.c_lambda / env.cert.delta;
    (-env.cert.delta * t).exp() * (v0 - ratio) + ratio + env.h_term(xi)
}

/// Truncated absorbing-radius series and ball radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingRadius {
    /// truncated series `sum_k e^{-k delta} H(|||x|||_{p-var,[-1-k,-k]})`
    pub r_bar: f64,
    /// `alpha^{-1}(C_lambda/delta + r_bar + eps)` when the inverse is available
    pub ball_radius: Option<f64>,
    /// geometric bound on the dropped tail
    pub truncation_tail: f64,
    /// per-window H terms actually summed
    pub terms: Vec<f64>,
}

/// Evaluate the truncated absorbing-radius series on a two-sided path
/// covering `[-k_trunc - 1, 0]`.
pub fn absorbing_radius(
    rp: &RoughPathGrid,
    env: &EnvelopeParams,
    k_trunc: usize,
    params: &NormParams,
    alpha: Option<&KBound>,
    eps: f64,
) -> Result<AbsorbingRadius> {
    let grid = rp.grid();
    let mut terms = Vec::with_capacity(k_trunc + 1);
    let mut r_bar = 0.0;
    let mut h_max = 0.0f64;
    for k in 0..=k_trunc {
        let a = grid.index_of_time(-(k as f64) - 1.0).ok_or_else(|| {
            Error::input(format!("path window does not reach time {}", -(k as f64) - 1.0))
        })?;
        let b = grid
            .index_of_time(-(k as f64))
            .ok_or_else(|| Error::input("path window misses a unit-window endpoint"))?;
        let mut eng = PrefixRoughVar::new(rp, a, params)?;
        eng.extend_to(b)?;
        let h = env.h_term(eng.norm(b, params));
        terms.push(h);
        h_max = h_max.max(h);
        r_bar += (-(k as f64) * env.cert.delta).exp() * h;
    }
    let delta = env.cert.delta;
    let truncation_tail = (-(k_trunc as f64 + 1.0) * delta).exp() / (1.0 - (-delta).exp()) * h_max;
    let ball_radius = alpha
        .and_then(|a| a.inverse(env.cert.c_lambda / delta + r_bar + eps));
    Ok(AbsorbingRadius { r_bar, ball_radius, truncation_tail, terms })
}

/// Convenience: `PowSpec` for the envelope exponent (placed here so the
/// solver's decay check and the radius series share one definition).
pub(crate) fn envelope_pow(p: f64) -> PowSpec {
    PowSpec::new(p)
}
