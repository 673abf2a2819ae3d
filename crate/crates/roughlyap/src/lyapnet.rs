//! Lyapunov networks: covering-aware sampling, training against the strong
//! condition, and accuracy verification.
//!
//! The candidate function is `V(z) = |N(z)| + alpha_bar |z|` with a single
//! hidden RePU layer `N(z) = w2 . max(0, W1 z + b1)^s + b2`, which is positive
//! and radially bounded below by construction. Training minimizes the
//! empirical risk
//!
//! ```text
//! mean_i [ max_{j,k} <grad V(z_i), (I + psi_j) f(z_i + eta_k)>
//!          + delta_bar V(z_i) - C_bar ]_+^2
//! ```
//!
//! over fixed uniform sample sets by projected full-batch gradient descent
//! (weights clamped to [-1, 1], gradient flowing through the maximizing
//! perturbation pair only, subgradient zero at the `|.|` and norm kinks).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::models::DriftField;

/// Parameters of the Lyapunov network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    pub input_dim: usize,
    pub hidden: usize,
    /// hidden x input, row-major
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// output weights, one per hidden unit
    pub w2: Vec<f64>,
    pub b2: f64,
    /// RePU power s >= 2
    pub power: u32,
    pub alpha_bar: f64,
}

impl NetParams {
    /// Random initialization with entries uniform in `(-scale, scale)`.
    pub fn init(
        input_dim: usize,
        hidden: usize,
        power: u32,
        alpha_bar: f64,
        scale: f64,
        seed: u64,
    ) -> Result<Self> {
        if power < 2 {
            return Err(Error::param("RePU power must be at least 2"));
        }
        if !(alpha_bar > 0.0) {
            return Err(Error::param("alpha_bar must be positive"));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let s = scale.min(1.0);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.gen_range(-s..s)).collect()
        };
        Ok(NetParams {
            input_dim,
            hidden,
            w1: draw(hidden * input_dim),
            b1: draw(hidden),
            w2: draw(hidden),
            b2: 0.0,
            power,
            alpha_bar,
        })
    }

    fn zeros_like(&self) -> NetParams {
        NetParams {
            input_dim: self.input_dim,
            hidden: self.hidden,
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: 0.0,
            power: self.power,
            alpha_bar: self.alpha_bar,
        }
    }

    /// Flatten the trainable parameters (w1, b1, w2, b2).
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.w1.clone();
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.push(self.b2);
        v
    }

    /// Inverse of [`NetParams::to_vec`].
    pub fn from_vec(&self, flat: &[f64]) -> NetParams {
        let mut out = self.clone();
        let n1 = self.w1.len();
        let n2 = n1 + self.b1.len();
        let n3 = n2 + self.w2.len();
        out.w1.copy_from_slice(&flat[..n1]);
        out.b1.copy_from_slice(&flat[n1..n2]);
        out.w2.copy_from_slice(&flat[n2..n3]);
        out.b2 = flat[n3];
        out
    }

    fn clamp_weights(&mut self) {
        for v in self.w1.iter_mut().chain(self.b1.iter_mut()).chain(self.w2.iter_mut()) {
            *v = v.clamp(-1.0, 1.0);
        }
        self.b2 = self.b2.clamp(-1.0, 1.0);
    }

    fn axpy(&mut self, alpha: f64, other: &NetParams) {
        for (a, b) in self.w1.iter_mut().zip(&other.w1) {
            *a += alpha * b;
        }
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a += alpha * b;
        }
        for (a, b) in self.w2.iter_mut().zip(&other.w2) {
            *a += alpha * b;
        }
        self.b2 += alpha * other.b2;
    }
}

/// `V(z)` and its spatial gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct NetEval {
    pub v: f64,
    pub grad: Vec<f64>,
}

/// Evaluate `V(z) = |N(z)| + alpha_bar |z|` with
/// `grad V = sign(N) grad N + alpha_bar z/|z|` (subgradient 0 at kinks).
pub fn net_eval(theta: &NetParams, z: &[f64]) -> NetEval {
    let d = theta.input_dim;
    let h = theta.hidden;
    let s = theta.power as i32;
    let mut n_val = theta.b2;
    let mut grad_n = vec![0.0; d];
    for l in 0..h {
        let mut a = theta.b1[l];
        for c in 0..d {
            a += theta.w1[l * d + c] * z[c];
        }
        if a > 0.0 {
            let a_pow = a.powi(s);
            n_val += theta.w2[l] * a_pow;
            let coeff = theta.w2[l] * s as f64 * a.powi(s - 1);
            for c in 0..d {
                grad_n[c] += coeff * theta.w1[l * d + c];
            }
        }
    }
    let znorm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sign = if n_val > 0.0 {
        1.0
    } else if n_val < 0.0 {
        -1.0
    } else {
        0.0
    };
    let mut grad = vec![0.0; d];
    for c in 0..d {
        grad[c] = sign * grad_n[c] + if znorm > 0.0 { theta.alpha_bar * z[c] / znorm } else { 0.0 };
    }
    NetEval { v: n_val.abs() + theta.alpha_bar * znorm, grad }
}

/// Unit-ball volume in `R^d`.
fn unit_ball_volume(d: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_d = 2 pi / d * V_{d-2}
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Axis-aligned cube covering count of the box at covering radius `eps0`:
/// cubes of side `2 eps0 / sqrt(d)` fit inside the balls.
pub fn covering_count(domain: &Domain, eps0: f64) -> Result<usize> {
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::param("covering radius must lie in (0,1)"));
    }
    let d = domain.dim();
    let side = 2.0 * eps0 / (d as f64).sqrt();
    let mut m = 1usize;
    for i in 0..d {
        m = m.saturating_mul((domain.side(i) / side).ceil() as usize);
    }
    Ok(m.max(1))
}

/// Ball centers realizing [`covering_count`]. A trailing cell that sticks out
/// of the box has its center clamped back inside, which keeps the cell
/// covered (the cell still fits inside the ball after the clamp).
pub fn covering_centers(domain: &Domain, eps0: f64) -> Result<Vec<Vec<f64>>> {
    covering_count(domain, eps0)?;
    let d = domain.dim();
    let side = 2.0 * eps0 / (d as f64).sqrt();
    let counts: Vec<usize> = (0..d).map(|i| (domain.side(i) / side).ceil() as usize).collect();
    let mut centers = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let center: Vec<f64> = (0..d)
            .map(|i| (domain.lo[i] + side * (idx[i] as f64 + 0.5)).min(domain.hi[i] - 0.5 * side))
            .collect();
        centers.push(center);
        let mut axis = d;
        loop {
            if axis == 0 {
                return Ok(centers);
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < counts[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Analytic lower bound for `p_min` on a box: the quarter-ball (orthant)
/// volume fraction at a corner, `(V_d eps0^d / 2^d) / vol(domain)`.
pub fn p_min_box(domain: &Domain, eps0: f64) -> Result<f64> {
    if !(eps0 > 0.0) {
        return Err(Error::param("covering radius must be positive"));
    }
    let d = domain.dim();
    if (0..d).any(|i| domain.side(i) < eps0) {
        return Err(Error::param("covering radius exceeds a domain side"));
    }
    Ok(unit_ball_volume(d) * eps0.powi(d as i32) / 2f64.powi(d as i32) / domain.volume())
}

/// Smallest sample count `m` with `1 - M(eps0, D) (1 - p_min)^m >= 1 - rho`.
pub fn sample_size(domain: &Domain, eps0: f64, rho: f64, p_min: f64) -> Result<usize> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::param("failure probability rho must lie in (0,1)"));
    }
    if !(p_min > 0.0 && p_min < 1.0) {
        return Err(Error::param("p_min must lie in (0,1)"));
    }
    let m_cover = covering_count(domain, eps0)? as f64;
    let m = ((m_cover / rho).ln() / -(1.0 - p_min).ln()).ceil();
    Ok((m.max(1.0)) as usize)
}

/// One Monte-Carlo covering trial: draw `m` uniform samples and check that
/// every covering ball contains at least one of them.
pub fn covering_success(domain: &Domain, eps0: f64, m: usize, seed: u64) -> Result<bool> {
    let centers = covering_centers(domain, eps0)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let samples: Vec<Vec<f64>> = (0..m).map(|_| domain.sample_uniform(&mut rng)).collect();
    let eps2 = eps0 * eps0;
    Ok(centers.par_iter().all(|c| {
        samples.iter().any(|z| {
            let mut acc = 0.0;
            for (a, b) in c.iter().zip(z) {
                let diff = a - b;
                acc += diff * diff;
            }
            acc <= eps2
        })
    }))
}

/// Fixed sample sets for risk evaluation: `z` uniform on the domain, `psi`
/// uniform in the lambda-Frobenius matrix ball, `eta` uniform in the
/// lambda-ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub domain: Domain,
    pub eps0: f64,
    pub rho: f64,
    pub m_z: usize,
    pub m_psi: usize,
    pub m_eta: usize,
    pub seed: u64,
}

impl SamplePlan {
    /// Validates `m_z` against the covering lower bound for the domain.
    /// The perturbation balls are covered at radius `lambda` by a single ball
    /// centered at zero, so any positive count is admissible there.
    pub fn new(
        domain: Domain,
        eps0: f64,
        rho: f64,
        m_z: usize,
        m_psi: usize,
        m_eta: usize,
        seed: u64,
    ) -> Result<Self> {
        let need = sample_size(&domain, eps0, rho, p_min_box(&domain, eps0)?)?;
        if m_z < need {
            return Err(Error::param(format!(
                "m_z = {m_z} below the covering lower bound {need}"
            )));
        }
        if m_psi == 0 || m_eta == 0 {
            return Err(Error::param("need at least one perturbation sample"));
        }
        Ok(SamplePlan { domain, eps0, rho, m_z, m_psi, m_eta, seed })
    }

    /// Sized by [`sample_size`] directly.
    pub fn auto(domain: Domain, eps0: f64, rho: f64, m_psi: usize, m_eta: usize, seed: u64) -> Result<Self> {
        let need = sample_size(&domain, eps0, rho, p_min_box(&domain, eps0)?)?;
        SamplePlan::new(domain, eps0, rho, need, m_psi, m_eta, seed)
    }

    /// Draw the fixed `(z, psi, eta)` sample sets.
    pub fn draw(&self, dim: usize, lambda: f64) -> SampleSets {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        let zs: Vec<Vec<f64>> = (0..self.m_z).map(|_| self.domain.sample_uniform(&mut rng)).collect();
        let psis = uniform_ball(&mut rng, dim * dim, self.m_psi, lambda);
        let etas = uniform_ball(&mut rng, dim, self.m_eta, lambda);
        SampleSets { zs, psis, etas }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSets {
    pub zs: Vec<Vec<f64>>,
    pub psis: Vec<Vec<f64>>,
    pub etas: Vec<Vec<f64>>,
}

fn uniform_ball<R: Rng>(rng: &mut R, dim: usize, count: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let mut dir: Vec<f64> =
                (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let r = radius * rng.gen_range(0.0f64..1.0).powf(1.0 / dim as f64);
            for v in dir.iter_mut() {
                *v *= r / norm;
            }
            dir
        })
        .collect()
}

/// Training hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub delta_bar: f64,
    pub c_bar_lambda: f64,
    pub lambda: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub tolerance: f64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_bar > 0.0 && self.delta_bar < 1.0) {
            return Err(Error::param("delta_bar must lie in (0,1)"));
        }
        if !(self.c_bar_lambda > 0.0) {
            return Err(Error::param("C_bar must be positive"));
        }
        if !(self.lambda >= 0.0 && self.lambda < 1.0) {
            return Err(Error::param("lambda must lie in [0,1)"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::param("learning rate must be positive"));
        }
        Ok(())
    }

    /// Defaults relative to a reference certificate: `delta_bar = delta / 2`,
    /// `C_bar = C_lambda + eps`.
    pub fn from_reference(cert: &crate::lyapunov::StrongCert, eps: f64, learning_rate: f64, max_iters: usize, tolerance: f64) -> Self {
        TrainConfig {
            delta_bar: (cert.delta / 2.0).min(0.999),
            c_bar_lambda: cert.c_lambda + eps,
            lambda: cert.lambda,
            learning_rate,
            max_iters,
            tolerance,
        }
    }
}

/// Loss value with per-sample margins (the `[...]` brackets before the
/// positive part).
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEval {
    pub loss: f64,
    pub margins: Vec<f64>,
    pub n_flagged: usize,
}

/// Empirical risk at fixed samples.
pub fn empirical_risk(
    theta: &NetParams,
    drift: &DriftField,
    sets: &SampleSets,
    cfg: &TrainConfig,
) -> RiskEval {
    let per: Vec<Option<f64>> = sets
        .zs
        .par_iter()
        .map(|z| sample_bracket(theta, drift, z, sets, cfg).map(|(b, _, _)| b))
        .collect();
    let mut margins = Vec::with_capacity(per.len());
    let mut loss = 0.0;
    let mut flagged = 0usize;
    for b in per {
        match b {
            Some(bracket) => {
                margins.push(bracket);
                let pos = bracket.max(0.0);
                loss += pos * pos;
            }
            None => flagged += 1,
        }
    }
    let n = margins.len().max(1);
    RiskEval { loss: loss / n as f64, margins, n_flagged: flagged }
}

/// bracket, maximizing (psi, eta) indices
fn sample_bracket(
    theta: &NetParams,
    drift: &DriftField,
    z: &[f64],
    sets: &SampleSets,
    cfg: &TrainConfig,
) -> Option<(f64, usize, usize)> {
    let d = theta.input_dim;
    let ev = net_eval(theta, z);
    let mut best = f64::NEG_INFINITY;
    let mut best_jk = (0usize, 0usize);
    let mut zp = vec![0.0; d];
    let mut fz = vec![0.0; d];
    for (k, eta) in sets.etas.iter().enumerate() {
        for c in 0..d {
            zp[c] = z[c] + eta[c];
        }
        drift.eval_into(&zp, &mut fz);
        if fz.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let base: f64 = ev.grad.iter().zip(&fz).map(|(g, f)| g * f).sum();
        for (j, psi) in sets.psis.iter().enumerate() {
            let mut extra = 0.0;
            for r in 0..d {
                let mut acc = 0.0;
                for c in 0..d {
                    acc += psi[r * d + c] * fz[c];
                }
                extra += ev.grad[r] * acc;
            }
            let val = base + extra;
            if val > best {
                best = val;
                best_jk = (j, k);
            }
        }
    }
    Some((best + cfg.delta_bar * ev.v - cfg.c_bar_lambda, best_jk.0, best_jk.1))
}

/// Loss and its parameter gradient (active-sample rule for the inner max).
pub fn risk_gradient(
    theta: &NetParams,
    drift: &DriftField,
    sets: &SampleSets,
    cfg: &TrainConfig,
) -> (f64, NetParams) {
    let d = theta.input_dim;
    let h = theta.hidden;
    let s = theta.power as i32;
    let per: Vec<Option<(f64, NetParams)>> = sets
        .zs
        .par_iter()
        .map(|z| {
            let (bracket, j, k) = sample_bracket(theta, drift, z, sets, cfg)?;
            if bracket <= 0.0 {
                return Some((0.0, theta.zeros_like()));
            }
            // u = (I + psi_j) f(z + eta_k)
            let mut zp = vec![0.0; d];
            for c in 0..d {
                zp[c] = z[c] + sets.etas[k][c];
            }
            let fz = drift.eval(&zp);
            let psi = &sets.psis[j];
            let mut u = fz.clone();
            for r in 0..d {
                let mut acc = 0.0;
                for c in 0..d {
                    acc += psi[r * d + c] * fz[c];
                }
                u[r] += acc;
            }
            // forward quantities
            let mut n_val = theta.b2;
            let mut a_vec = vec![0.0; h];
            for l in 0..h {
                let mut a = theta.b1[l];
                for c in 0..d {
                    a += theta.w1[l * d + c] * z[c];
                }
                a_vec[l] = a;
                if a > 0.0 {
                    n_val += theta.w2[l] * a.powi(s);
                }
            }
            let sign = if n_val > 0.0 {
                1.0
            } else if n_val < 0.0 {
                -1.0
            } else {
                0.0
            };
            let mut g = theta.zeros_like();
            let sf = s as f64;
            for l in 0..h {
                let a = a_vec[l];
                if a <= 0.0 {
                    continue;
                }
                let phi0 = a.powi(s);
                let phi1 = a.powi(s - 1);
                let phi2 = if s >= 2 { a.powi(s - 2) } else { 0.0 };
                // t_l = (W1 u)_l
                let mut t_l = 0.0;
                for c in 0..d {
                    t_l += theta.w1[l * d + c] * u[c];
                }
                // gradient-term contributions: sign(N) d/dtheta <grad N, u>
                g.w2[l] += sign * sf * phi1 * t_l;
                g.b1[l] += sign * theta.w2[l] * sf * (sf - 1.0) * phi2 * t_l;
                for c in 0..d {
                    g.w1[l * d + c] += sign
                        * theta.w2[l]
                        * sf
                        * ((sf - 1.0) * phi2 * z[c] * t_l + phi1 * u[c]);
                }
                // delta_bar V term: sign(N) d N/dtheta
                g.w2[l] += cfg.delta_bar * sign * phi0;
                g.b1[l] += cfg.delta_bar * sign * theta.w2[l] * sf * phi1;
                for c in 0..d {
                    g.w1[l * d + c] += cfg.delta_bar * sign * theta.w2[l] * sf * phi1 * z[c];
                }
            }
            g.b2 += cfg.delta_bar * sign;
            // chain through the squared positive part
            let scale = 2.0 * bracket;
            for v in g.w1.iter_mut().chain(g.b1.iter_mut()).chain(g.w2.iter_mut()) {
                *v *= scale;
            }
            g.b2 *= scale;
            Some((bracket * bracket, g))
        })
        .collect();

    let mut grad = theta.zeros_like();
    let mut loss = 0.0;
    let mut n = 0usize;
    for item in per.into_iter().flatten() {
        loss += item.0;
        grad.axpy(1.0, &item.1);
        n += 1;
    }
    let n = n.max(1) as f64;
    loss /= n;
    for v in grad.w1.iter_mut().chain(grad.b1.iter_mut()).chain(grad.w2.iter_mut()) {
        *v /= n;
    }
    grad.b2 /= n;
    (loss, grad)
}

/// How a training run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainStatus {
    /// loss fell at or below the tolerance
    Converged,
    /// iteration budget exhausted
    IterBudget,
    /// line search collapsed: loss would not decrease at any usable step
    Aborted { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub theta: NetParams,
    pub loss_history: Vec<f64>,
    pub status: TrainStatus,
}

/// Projected gradient descent with a monotone line search: a step is accepted
/// only if the loss does not increase; otherwise the learning rate is halved.
/// Training aborts when no acceptable step remains above a minimal rate.
pub fn train(
    initial: &NetParams,
    drift: &DriftField,
    plan: &SamplePlan,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if drift.dim != initial.input_dim {
        return Err(Error::param("drift and network dimensions differ"));
    }
    let sets = plan.draw(initial.input_dim, cfg.lambda);
    let mut theta = initial.clone();
    theta.clamp_weights();
    let mut lr = cfg.learning_rate;
    let (mut loss, mut grad) = risk_gradient(&theta, drift, &sets, cfg);
    let mut history = vec![loss];
    if loss <= cfg.tolerance {
        return Ok(TrainOutcome { theta, loss_history: history, status: TrainStatus::Converged });
    }
    for _ in 0..cfg.max_iters {
        // candidate step with halving until the loss is non-increasing
        let mut accepted = false;
        for _ in 0..40 {
            let mut cand = theta.clone();
            cand.axpy(-lr, &grad);
            cand.clamp_weights();
            let (cand_loss, cand_grad) = risk_gradient(&cand, drift, &sets, cfg);
            if cand_loss <= loss {
                theta = cand;
                loss = cand_loss;
                grad = cand_grad;
                accepted = true;
                break;
            }
            lr *= 0.5;
            if lr < 1e-14 {
                break;
            }
        }
        if !accepted {
            return Ok(TrainOutcome {
                theta,
                loss_history: history,
                status: TrainStatus::Aborted {
                    reason: format!("line search collapsed at loss {loss:.3e}"),
                },
            });
        }
        history.push(loss);
        if loss <= cfg.tolerance {
            return Ok(TrainOutcome { theta, loss_history: history, status: TrainStatus::Converged });
        }
        // gentle recovery so one bad region does not freeze the rate
        lr = (lr * 1.5).min(cfg.learning_rate);
    }
    Ok(TrainOutcome { theta, loss_history: history, status: TrainStatus::IterBudget })
}

/// Verification report for a trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub pass_rate: f64,
    pub worst_margin: f64,
    pub worst_point: Vec<f64>,
    pub n_points: usize,
    /// Lipschitz modulus of the bracket in (z, psi, eta)
    pub modulus: f64,
    /// smallest certified radius over passing points
    pub min_certified_radius: f64,
}

/// Re-check the relaxed strong condition
/// `max_{j,k} bracket <= C_bar + 2 eps - delta_bar V(z)` on a dense grid with
/// fresh perturbation samples, and report the Lipschitz-modulus certified
/// radius around each passing point.
#[allow(clippy::too_many_arguments)]
pub fn verify_accuracy(
    theta: &NetParams,
    drift: &DriftField,
    domain: &Domain,
    lambda: f64,
    cfg: &TrainConfig,
    eps: f64,
    resolution: usize,
    seed: u64,
) -> Result<AccuracyReport> {
    let d = theta.input_dim;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let psis = uniform_ball(&mut rng, d * d, 64, lambda);
    let etas = uniform_ball(&mut rng, d, 64, lambda);
    let sets = SampleSets { zs: vec![], psis, etas };
    let points = domain.grid_points(resolution);

    // numeric bound for the modulus L(Theta, D)(1 + lambda)(|f| + |Df|)
    let mut grad_sup = 0.0f64;
    let mut hess_sup = 0.0f64;
    let mut f_sup = 0.0f64;
    let mut df_sup = 0.0f64;
    for _ in 0..500 {
        let z = domain.sample_uniform(&mut rng);
        let ev = net_eval(theta, &z);
        grad_sup = grad_sup.max(ev.grad.iter().map(|g| g * g).sum::<f64>().sqrt());
        // second derivative by differencing the gradient
        let h = 1e-4;
        for c in 0..d {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[c] += h;
            zm[c] -= h;
            let gp = net_eval(theta, &zp).grad;
            let gm = net_eval(theta, &zm).grad;
            let row_norm = gp
                .iter()
                .zip(&gm)
                .map(|(a, b)| ((a - b) / (2.0 * h)).powi(2))
                .sum::<f64>()
                .sqrt();
            hess_sup = hess_sup.max(row_norm);
        }
        let fz = drift.eval(&z);
        f_sup = f_sup.max(fz.iter().map(|v| v * v).sum::<f64>().sqrt());
        let jac = drift.jacobian(&z);
        df_sup = df_sup.max(jac.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    let modulus = grad_sup.max(hess_sup) * (1.0 + lambda) * (f_sup + df_sup);

    let margins: Vec<Option<f64>> = points
        .par_iter()
        .map(|z| {
            let ev = net_eval(theta, z);
            let relaxed = TrainConfig { c_bar_lambda: cfg.c_bar_lambda + 2.0 * eps, ..*cfg };
            sample_bracket(theta, drift, z, &sets, &relaxed).map(|(b, _, _)| {
                // bracket uses the relaxed C_bar, so the pass margin is -bracket
                let _ = ev;
                -b
            })
        })
        .collect();

    let mut worst = f64::INFINITY;
    let mut worst_idx = 0usize;
    let mut n_pass = 0usize;
    let mut n_valid = 0usize;
    let mut min_radius = f64::INFINITY;
    for (i, m) in margins.iter().enumerate() {
        if let Some(margin) = m {
            n_valid += 1;
            if *margin >= 0.0 {
                n_pass += 1;
                min_radius = min_radius.min(margin / modulus.max(1e-300));
            }
            if *margin < worst {
                worst = *margin;
                worst_idx = i;
            }
        }
    }
    if n_valid == 0 {
        return Err(Error::Numerical("no finite verification point".into()));
    }
    Ok(AccuracyReport {
        pass_rate: n_pass as f64 / n_valid as f64,
        worst_margin: worst,
        worst_point: points[worst_idx].clone(),
        n_points: n_valid,
        modulus,
        min_certified_radius: if min_radius.is_finite() { min_radius } else { 0.0 },
    })
}
