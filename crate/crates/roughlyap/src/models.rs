//! Built-in systems: drift/diffusion pairs with derivatives and recorded
//! constants.
//!
//! Three drifts are provided — FitzHugh-Nagumo, the damped pendulum and a
//! linear dissipative field — plus a small family of `C^3`-bounded diffusion
//! shapes with a tunable intensity knob `C_g`. Tensor norms behind the `C_g`
//! bookkeeping are entrywise sup-norms; the profiles are normalized so the
//! recorded bound equals `C_g` exactly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};

pub type VectorFieldFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type MatrixFieldFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Drift `f` with optional Jacobian and recorded growth constants.
#[derive(Clone)]
pub struct DriftField {
    pub dim: usize,
    f: VectorFieldFn,
    /// row-major `dim x dim` Jacobian
    jac: Option<MatrixFieldFn>,
    /// global Lipschitz constant, when one exists
    pub lipschitz: Option<f64>,
    pub f0_norm: f64,
    /// sup of the Jacobian norm over a box, for locally Lipschitz drifts
    local_lipschitz: Option<Arc<dyn Fn(&Domain) -> f64 + Send + Sync>>,
    /// recorded dissipativity constants `(d1, d2)` with `<z, f(z)> <= d1 - d2 |z|^2`
    pub dissipativity: Option<(f64, f64)>,
}

impl std::fmt::Debug for DriftField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DriftField")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("f0_norm", &self.f0_norm)
            .finish()
    }
}

impl DriftField {
    pub fn new(dim: usize, f: VectorFieldFn) -> Self {
        let mut f0 = vec![0.0; dim];
        (f)(&vec![0.0; dim], &mut f0);
        let f0_norm = f0.iter().map(|v| v * v).sum::<f64>().sqrt();
        DriftField {
            dim,
            f,
            jac: None,
            lipschitz: None,
            f0_norm,
            local_lipschitz: None,
            dissipativity: None,
        }
    }

    pub fn with_jacobian(mut self, jac: MatrixFieldFn) -> Self {
        self.jac = Some(jac);
        self
    }

    pub fn with_lipschitz(mut self, c_f: f64) -> Self {
        self.lipschitz = Some(c_f);
        self
    }

    pub fn with_local_lipschitz(
        mut self,
        f: Arc<dyn Fn(&Domain) -> f64 + Send + Sync>,
    ) -> Self {
        self.local_lipschitz = Some(f);
        self
    }

    pub fn with_dissipativity(mut self, d1: f64, d2: f64) -> Self {
        self.dissipativity = Some((d1, d2));
        self
    }

    pub fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        (self.f)(y, out)
    }

    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(y, &mut out);
        out
    }

    /// Analytic Jacobian when provided, central finite differences otherwise.
    pub fn jacobian(&self, y: &[f64]) -> Vec<f64> {
        match &self.jac {
            Some(j) => {
                let mut out = vec![0.0; self.dim * self.dim];
                (j)(y, &mut out);
                out
            }
            None => self.jacobian_fd(y, 1e-6),
        }
    }

    pub fn jacobian_fd(&self, y: &[f64], h: f64) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        let mut yp = y.to_vec();
        let mut ym = y.to_vec();
        let mut fp = vec![0.0; d];
        let mut fm = vec![0.0; d];
        for c in 0..d {
            yp[c] = y[c] + h;
            ym[c] = y[c] - h;
            self.eval_into(&yp, &mut fp);
            self.eval_into(&ym, &mut fm);
            for r in 0..d {
                out[r * d + c] = (fp[r] - fm[r]) / (2.0 * h);
            }
            yp[c] = y[c];
            ym[c] = y[c];
        }
        out
    }

    /// Lipschitz constant valid on `domain`: the global one when recorded,
    /// otherwise the registered local estimate.
    pub fn lipschitz_on(&self, domain: &Domain) -> Option<f64> {
        self.lipschitz
            .or_else(|| self.local_lipschitz.as_ref().map(|f| f(domain)))
    }
}

/// Diffusion shape families. Each is `C^3` with bounded derivatives and a
/// scale chosen so the recorded bound equals `C_g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffusionKind {
    /// constant matrix: additive noise
    Constant,
    /// bounded smooth multiplicative profile, non-vanishing at the origin
    LinearBump,
    /// multiplicative profile with `g(0) = 0`
    VanishingAtZero,
}

/// Diffusion `g` with derivative tensor and intensity bound.
#[derive(Clone)]
pub struct DiffusionField {
    pub d: usize,
    pub m: usize,
    g: MatrixFieldFn,
    /// derivative tensor dg[i][j][k] = d g_{ij} / d y_k, row-major d x m x d
    dg: MatrixFieldFn,
    pub c_g: f64,
    pub zero_at_origin: bool,
    pub kind: DiffusionKind,
}

impl std::fmt::Debug for DiffusionField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiffusionField")
            .field("d", &self.d)
            .field("m", &self.m)
            .field("c_g", &self.c_g)
            .field("kind", &self.kind)
            .finish()
    }
}

impl DiffusionField {
    /// `g(y)` as a `d x m` row-major matrix.
    pub fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        (self.g)(y, out)
    }

    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d * self.m];
        self.eval_into(y, &mut out);
        out
    }

    /// Derivative tensor as a `d x m x d` row-major block.
    pub fn derivative_into(&self, y: &[f64], out: &mut [f64]) {
        (self.dg)(y, out)
    }

    pub fn derivative(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d * self.m * self.d];
        self.derivative_into(y, &mut out);
        out
    }
}

/// A named drift/diffusion pair with its parameter record.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub name: String,
    pub drift: DriftField,
    pub diffusion: Option<DiffusionField>,
    pub params: serde_json::Value,
}

impl SystemSpec {
    pub fn dim(&self) -> usize {
        self.drift.dim
    }

    /// Noise dimension; zero without a diffusion.
    pub fn noise_dims(&self) -> usize {
        self.diffusion.as_ref().map(|g| g.m).unwrap_or(0)
    }
}

/// FitzHugh-Nagumo drift
/// `f(v, w) = (v - v^3/3 - w + I, eps (v - mu w + J))`.
pub fn make_fhn(epsilon: f64, mu: f64, current: f64, offset: f64) -> Result<SystemSpec> {
    if !(epsilon > 0.0 && mu > 0.0) {
        return Err(Error::param("FHN needs epsilon, mu > 0"));
    }
    let (e, m, i, j) = (epsilon, mu, current, offset);
    let f: VectorFieldFn = Arc::new(move |y, out| {
        let (v, w) = (y[0], y[1]);
        out[0] = v - v * v * v / 3.0 - w + i;
        out[1] = e * (v - m * w + j);
    });
    let jac: MatrixFieldFn = Arc::new(move |y, out| {
        let v = y[0];
        out[0] = 1.0 - v * v;
        out[1] = -1.0;
        out[2] = e;
        out[3] = -e * m;
    });
    let local: Arc<dyn Fn(&Domain) -> f64 + Send + Sync> = Arc::new(move |dom: &Domain| {
        // sup of the Jacobian Frobenius norm over the box
        let vmax = dom.lo[0].abs().max(dom.hi[0].abs());
        let a = (1.0 - vmax * vmax).abs().max(1.0);
        (a * a + 1.0 + e * e + e * e * m * m).sqrt()
    });
    let drift = DriftField::new(2, f)
        .with_jacobian(jac)
        .with_local_lipschitz(local);
    Ok(SystemSpec {
        name: "fhn".into(),
        drift,
        diffusion: None,
        params: serde_json::json!({"epsilon": epsilon, "mu": mu, "I": current, "J": offset}),
    })
}

/// Damped pendulum drift `f(v, w) = (w, -sigma^2 sin v - 2 mu w)` with its
/// global Lipschitz constant recorded as the sup of the Jacobian norm.
pub fn make_pendulum(sigma: f64, mu: f64) -> Result<SystemSpec> {
    if !(sigma > 0.0 && mu > 0.0) {
        return Err(Error::param("pendulum needs sigma, mu > 0"));
    }
    let s2 = sigma * sigma;
    let f: VectorFieldFn = Arc::new(move |y, out| {
        out[0] = y[1];
        out[1] = -s2 * y[0].sin() - 2.0 * mu * y[1];
    });
    let jac: MatrixFieldFn = Arc::new(move |y, out| {
        out[0] = 0.0;
        out[1] = 1.0;
        out[2] = -s2 * y[0].cos();
        out[3] = -2.0 * mu;
    });
    let c_f = (1.0 + s2 * s2 + 4.0 * mu * mu).sqrt();
    let drift = DriftField::new(2, f).with_jacobian(jac).with_lipschitz(c_f);
    Ok(SystemSpec {
        name: "pendulum".into(),
        drift,
        diffusion: None,
        params: serde_json::json!({"sigma": sigma, "mu": mu}),
    })
}

/// Linear dissipative drift `f(z) = -a z + b` with its dissipativity record
/// `<z, f(z)> <= |b|^2/(2a) - (a/2) |z|^2`.
pub fn make_linear_dissipative(a: f64, b: Vec<f64>) -> Result<SystemSpec> {
    if !(a > 0.0) {
        return Err(Error::param("linear dissipative drift needs a > 0"));
    }
    if b.is_empty() {
        return Err(Error::param("offset vector must fix the dimension"));
    }
    let dim = b.len();
    let b2: f64 = b.iter().map(|v| v * v).sum();
    let bcl = b.clone();
    let f: VectorFieldFn = Arc::new(move |y, out| {
        for k in 0..y.len() {
            out[k] = -a * y[k] + bcl[k];
        }
    });
    let jac: MatrixFieldFn = Arc::new(move |_y, out| {
        for r in 0..dim {
            for c in 0..dim {
                out[r * dim + c] = if r == c { -a } else { 0.0 };
            }
        }
    });
    let drift = DriftField::new(dim, f)
        .with_jacobian(jac)
        .with_lipschitz(a)
        .with_dissipativity(b2 / (2.0 * a), a / 2.0);
    Ok(SystemSpec {
        name: "linear".into(),
        drift,
        diffusion: None,
        params: serde_json::json!({"a": a, "b": b}),
    })
}

/// Attach a diffusion of the given shape, scaled so its recorded `C^3` bound
/// equals `c_g`, with `m` noise channels.
pub fn attach_diffusion(
    mut spec: SystemSpec,
    kind: DiffusionKind,
    c_g: f64,
    m: usize,
) -> Result<SystemSpec> {
    if !(c_g > 0.0) {
        return Err(Error::param("C_g must be positive"));
    }
    if m == 0 {
        return Err(Error::param("noise dimension must be at least 1"));
    }
    let d = spec.dim();
    let diffusion = match kind {
        DiffusionKind::Constant => {
            // g = C_g on the leading diagonal; all derivatives vanish
            let g: MatrixFieldFn = Arc::new(move |_y, out| {
                for r in 0..d {
                    for c in 0..m {
                        out[r * m + c] = if r == c { c_g } else { 0.0 };
                    }
                }
            });
            let dg: MatrixFieldFn = Arc::new(move |_y, out| {
                for v in out.iter_mut() {
                    *v = 0.0;
                }
            });
            DiffusionField { d, m, g, dg, c_g, zero_at_origin: false, kind }
        }
        DiffusionKind::LinearBump | DiffusionKind::VanishingAtZero => {
            // entry profile tanh(y_r + shift) with sup |third derivative| = 2,
            // so scale C_g/2 makes the entrywise C^3 bound exactly C_g
            let shift = if kind == DiffusionKind::LinearBump { 1.0 } else { 0.0 };
            let scale = c_g / 2.0;
            let g: MatrixFieldFn = Arc::new(move |y, out| {
                for r in 0..d {
                    let v = scale * (y[r] + shift).tanh();
                    for c in 0..m {
                        out[r * m + c] = v;
                    }
                }
            });
            let dg: MatrixFieldFn = Arc::new(move |y, out| {
                // d g_{rc} / d y_k = scale sech^2(y_r + shift) delta_{rk}
                for v in out.iter_mut() {
                    *v = 0.0;
                }
                for r in 0..d {
                    let t = (y[r] + shift).tanh();
                    let der = scale * (1.0 - t * t);
                    for c in 0..m {
                        out[(r * m + c) * d + r] = der;
                    }
                }
            });
            DiffusionField {
                d,
                m,
                g,
                dg,
                c_g,
                zero_at_origin: kind == DiffusionKind::VanishingAtZero,
                kind,
            }
        }
    };
    spec.diffusion = Some(diffusion);
    Ok(spec)
}

/// Registry of built-in models, addressable by name and a JSON parameter blob.
///
/// Recognized names: `fhn` (epsilon, mu, I, J), `pendulum` (sigma, mu),
/// `linear` (a, b). An optional `diffusion` object `{kind, c_g, m}` attaches a
/// noise shape.
pub fn make_system(name: &str, params: &serde_json::Value) -> Result<SystemSpec> {
    let getf = |key: &str, default: f64| -> f64 {
        params.get(key).and_then(|v| v.as_f64()).unwrap_or(default)
    };
    let mut spec = match name {
        "fhn" => make_fhn(
            getf("epsilon", FHN_DEFAULTS.0),
            getf("mu", FHN_DEFAULTS.1),
            getf("I", FHN_DEFAULTS.2),
            getf("J", FHN_DEFAULTS.3),
        )?,
        "pendulum" => make_pendulum(getf("sigma", 1.0), getf("mu", 0.5))?,
        "linear" => {
            let b = match params.get("b") {
                Some(v) => serde_json::from_value::<Vec<f64>>(v.clone())?,
                None => vec![0.0, 0.0],
            };
            make_linear_dissipative(getf("a", 1.0), b)?
        }
        other => {
            return Err(Error::param(format!(
                "unknown model '{other}' (expected fhn | pendulum | linear)"
            )))
        }
    };
    if let Some(dspec) = params.get("diffusion") {
        let kind = match dspec.get("kind").and_then(|v| v.as_str()) {
            Some("constant") | None => DiffusionKind::Constant,
            Some("linear-bump") => DiffusionKind::LinearBump,
            Some("vanishing-at-zero") => DiffusionKind::VanishingAtZero,
            Some(other) => return Err(Error::param(format!("unknown diffusion kind '{other}'"))),
        };
        let c_g = dspec.get("c_g").and_then(|v| v.as_f64()).unwrap_or(0.05);
        let m = dspec.get("m").and_then(|v| v.as_u64()).unwrap_or(1) as usize;
        spec = attach_diffusion(spec, kind, c_g, m)?;
    }
    Ok(spec)
}

/// Run defaults for the FHN parameters `(epsilon, mu, I, J)`. These are
/// configuration, not ground truth; every experiment logs the values it used.
pub const FHN_DEFAULTS: (f64, f64, f64, f64) = (0.08, 0.8, 0.5, 0.7);

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() / (1.0 + x.abs().max(y.abs())))
            .fold(0.0, f64::max)
    }

    #[test]
    fn fhn_values() {
        let fhn = make_fhn(0.08, 0.8, 0.0, 0.7).unwrap();
        assert_eq!(fhn.drift.eval(&[0.0, 0.0]), vec![0.0, 0.08 * 0.7]);
        let v = fhn.drift.eval(&[1.0, 0.0]);
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((v[1] - 0.08 * 1.7).abs() < 1e-15);

        let zero = make_fhn(1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(zero.drift.eval(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn fhn_jacobian_matches_fd() {
        let fhn = make_fhn(0.08, 0.8, 0.5, 0.7).unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        for _ in 0..200 {
            let y = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let a = fhn.drift.jacobian(&y);
            let b = fhn.drift.jacobian_fd(&y, 1e-6);
            assert!(max_rel_err(&a, &b) < 1e-5, "at {y:?}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn pendulum_values_and_lipschitz() {
        let pend = make_pendulum(1.0, 0.5).unwrap();
        assert_eq!(pend.drift.eval(&[0.0, 0.0]), vec![0.0, 0.0]);
        let v = pend.drift.eval(&[std::f64::consts::PI, 1.0]);
        assert!((v[0] - 1.0).abs() < 1e-15);
        assert!((v[1] + 1.0).abs() < 1e-12); // sin(pi) ~ 0 => -2 mu w = -1

        // sampled Lipschitz check
        let c_f = pend.drift.lipschitz.unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let z1 = [rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)];
            let z2 = [rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)];
            let f1 = pend.drift.eval(&z1);
            let f2 = pend.drift.eval(&z2);
            let df = ((f1[0] - f2[0]).powi(2) + (f1[1] - f2[1]).powi(2)).sqrt();
            let dz = ((z1[0] - z2[0]).powi(2) + (z1[1] - z2[1]).powi(2)).sqrt();
            assert!(df <= c_f * dz * (1.0 + 1e-12), "ratio {}", df / dz);
        }
    }

    #[test]
    fn linear_dissipativity_record() {
        let sys = make_linear_dissipative(1.0, vec![0.0, 0.0]).unwrap();
        assert_eq!(sys.drift.eval(&[1.0, 0.0]), vec![-1.0, 0.0]);
        let (d1, d2) = sys.drift.dissipativity.unwrap();
        assert_eq!((d1, d2), (0.0, 0.5));

        let sys = make_linear_dissipative(0.7, vec![0.3, -0.4]).unwrap();
        let (d1, d2) = sys.drift.dissipativity.unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let z = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
            let f = sys.drift.eval(&z);
            let ip = z[0] * f[0] + z[1] * f[1];
            let n2 = z[0] * z[0] + z[1] * z[1];
            assert!(ip <= d1 - d2 * n2 + 1e-9);
        }
    }

    #[test]
    fn constant_diffusion_scaling() {
        let sys = make_linear_dissipative(1.0, vec![0.0]).unwrap();
        let sys = attach_diffusion(sys, DiffusionKind::Constant, 0.3, 1).unwrap();
        let g = sys.diffusion.as_ref().unwrap();
        assert_eq!(g.eval(&[5.0]), vec![0.3]);
        assert_eq!(g.derivative(&[5.0]), vec![0.0]);

        let sys2 = make_linear_dissipative(1.0, vec![0.0]).unwrap();
        let sys2 = attach_diffusion(sys2, DiffusionKind::Constant, 0.6, 1).unwrap();
        assert_eq!(sys2.diffusion.as_ref().unwrap().eval(&[5.0]), vec![0.6]);
    }

    #[test]
    fn vanishing_diffusion_bound() {
        let sys = make_pendulum(1.0, 0.5).unwrap();
        let sys = attach_diffusion(sys, DiffusionKind::VanishingAtZero, 0.2, 1).unwrap();
        let g = sys.diffusion.as_ref().unwrap();
        assert!(g.zero_at_origin);
        assert_eq!(g.eval(&[0.0, 0.0]), vec![0.0, 0.0]);
        // |g(y)| <= C_g min(|y|, 1) sqrt(d m) at sampled points
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let y = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            let gv = g.eval(&y);
            let norm = gv.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ynorm = (y[0] * y[0] + y[1] * y[1]).sqrt();
            assert!(norm <= 0.2 * ynorm.min(1.0) * 2.0f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn diffusion_derivative_matches_fd() {
        let sys = make_pendulum(1.0, 0.5).unwrap();
        let sys = attach_diffusion(sys, DiffusionKind::LinearBump, 0.4, 2).unwrap();
        let g = sys.diffusion.as_ref().unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let h = 1e-6;
        for _ in 0..100 {
            let y = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let analytic = g.derivative(&y);
            for k in 0..2 {
                let mut yp = y;
                let mut ym = y;
                yp[k] += h;
                ym[k] -= h;
                let gp = g.eval(&yp);
                let gm = g.eval(&ym);
                for idx in 0..4 {
                    let fd = (gp[idx] - gm[idx]) / (2.0 * h);
                    let an = analytic[idx * 2 + k];
                    assert!((fd - an).abs() < 1e-5 * (1.0 + an.abs()));
                }
            }
        }
    }

    #[test]
    fn registry_roundtrip() {
        let sys = make_system(
            "fhn",
            &serde_json::json!({"epsilon": 0.1, "diffusion": {"kind": "constant", "c_g": 0.05}}),
        )
        .unwrap();
        assert_eq!(sys.name, "fhn");
        assert_eq!(sys.noise_dims(), 1);
        assert!(make_system("nope", &serde_json::json!({})).is_err());
    }
}
