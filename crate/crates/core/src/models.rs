//! Diffusion models `dX = b(X) dt + a(X) dW`, numerical checks of the
//! boundedness/ellipticity (A1) and drift-confinement (A2) assumptions, and
//! analytic invariant densities for the built-in families.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Step for central finite differences in the assumption checks.
pub const FD_STEP: f64 = 1e-5;

/// Relative slack used when comparing against declared bounds.
const BOUND_RTOL: f64 = 1e-12;

/// Coefficient functions of a diffusion. Diffusion matrices are row-major
/// `d x d`.
pub trait Coefficients: Send + Sync {
    fn dimension(&self) -> usize;
    fn drift(&self, x: &[f64], out: &mut [f64]);
    fn diffusion(&self, x: &[f64], out: &mut [f64]);
    /// Normalized invariant density when known in closed form.
    fn invariant_density(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

/// Bounds of A1: `|b| <= b0`, `|a| <= a0`, derivative bounds `b1`, `a1`,
/// and uniform ellipticity `a a^T >= a_min^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A1Constants {
    pub a_min: f64,
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
}

/// Constants of A2: `<x, b(x)> <= -c_b |x|` for `|x| >= rho_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A2Constants {
    pub c_b: f64,
    pub rho_b: f64,
}

/// Ornstein–Uhlenbeck process with diagonal mean reversion
/// `dX_i = -theta_i X_i dt + sigma_i (L dW)_i`, `L L^T = R` a correlation
/// matrix (identity unless given).
#[derive(Debug, Clone, PartialEq)]
pub struct OrnsteinUhlenbeck {
    theta: Vec<f64>,
    sigma: Vec<f64>,
    correlation: DMatrix<f64>,
    noise: DMatrix<f64>,
    stationary_cov: DMatrix<f64>,
    stationary_inv: DMatrix<f64>,
    log_norm: f64,
}

impl OrnsteinUhlenbeck {
    pub fn new(theta: Vec<f64>, sigma: Vec<f64>, correlation: Option<Vec<Vec<f64>>>) -> Result<Self> {
        let d = theta.len();
        if d == 0 || sigma.len() != d {
            return Err(Error::Parameter("theta and sigma must be nonempty and of equal length".into()));
        }
        if theta.iter().chain(&sigma).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Parameter("theta and sigma must be positive".into()));
        }
        let correlation = match correlation {
            None => DMatrix::identity(d, d),
            Some(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Parameter("correlation matrix must be d x d".into()));
                }
                let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
                for i in 0..d {
                    if (m[(i, i)] - 1.0).abs() > 1e-12 {
                        return Err(Error::Parameter("correlation diagonal must be 1".into()));
                    }
                    for j in 0..d {
                        if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                            return Err(Error::Parameter("correlation matrix must be symmetric".into()));
                        }
                    }
                }
                m
            }
        };
        let chol = correlation
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Parameter("correlation matrix is not positive definite".into()))?;
        let l = chol.l();
        let noise = DMatrix::from_fn(d, d, |i, j| sigma[i] * l[(i, j)]);
        let stationary_cov = DMatrix::from_fn(d, d, |i, j| {
            sigma[i] * sigma[j] * correlation[(i, j)] / (theta[i] + theta[j])
        });
        let sc = stationary_cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Parameter("stationary covariance is singular".into()))?;
        let log_det: f64 = 2.0 * sc.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let stationary_inv = sc.inverse();
        let log_norm = -0.5 * (d as f64 * (2.0 * PI).ln() + log_det);
        Ok(Self { theta, sigma, correlation, noise, stationary_cov, stationary_inv, log_norm })
    }

    pub fn isotropic(d: usize, theta: f64, sigma: f64) -> Result<Self> {
        Self::new(vec![theta; d], vec![sigma; d], None)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.correlation
    }

    pub fn is_independent(&self) -> bool {
        self.correlation == DMatrix::identity(self.theta.len(), self.theta.len())
    }

    /// Stationary covariance `S_ij = sigma_i sigma_j R_ij / (theta_i + theta_j)`.
    pub fn stationary_covariance(&self) -> &DMatrix<f64> {
        &self.stationary_cov
    }

    /// Covariance of the Gaussian innovation over a step of length `s`:
    /// `S_ij (1 - exp(-(theta_i + theta_j) s))`.
    pub fn transition_covariance(&self, s: f64) -> DMatrix<f64> {
        let d = self.theta.len();
        DMatrix::from_fn(d, d, |i, j| {
            self.stationary_cov[(i, j)] * -(-(self.theta[i] + self.theta[j]) * s).exp_m1()
        })
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let d = self.theta.len();
        let mut q = 0.0;
        for i in 0..d {
            for j in 0..d {
                q += x[i] * self.stationary_inv[(i, j)] * x[j];
            }
        }
        (self.log_norm - 0.5 * q).exp()
    }
}

impl Coefficients for OrnsteinUhlenbeck {
    fn dimension(&self) -> usize {
        self.theta.len()
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), t) in out.iter_mut().zip(x).zip(&self.theta) {
            *o = -t * xi;
        }
    }

    fn diffusion(&self, _x: &[f64], out: &mut [f64]) {
        let d = self.theta.len();
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = self.noise[(i, j)];
            }
        }
    }

    fn invariant_density(&self, x: &[f64]) -> Option<f64> {
        Some(self.density(x))
    }
}

/// Gradient system with `V(x) = scale * sqrt(1 + |x|^2)`,
/// `dX = -grad V(X) dt + sqrt(2) dW`, invariant density `exp(-V) / Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicLangevin {
    dimension: usize,
    scale: f64,
    normalizer: f64,
}

impl HyperbolicLangevin {
    pub fn new(dimension: usize, scale: f64) -> Result<Self> {
        if dimension == 0 || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Parameter("hyperbolic Langevin needs d >= 1 and scale > 0".into()));
        }
        let normalizer = hyperbolic_normalizer(dimension, scale);
        Ok(Self { dimension, scale, normalizer })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        self.scale * (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Normalizing constant `Z = int exp(-V)`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }
}

impl Coefficients for HyperbolicLangevin {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) {
        let r = (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt();
        for (o, xi) in out.iter_mut().zip(x) {
            *o = -self.scale * xi / r;
        }
    }

    fn diffusion(&self, _x: &[f64], out: &mut [f64]) {
        let d = self.dimension;
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..d {
            out[i * d + i] = std::f64::consts::SQRT_2;
        }
    }

    fn invariant_density(&self, x: &[f64]) -> Option<f64> {
        Some((-self.potential(x)).exp() / self.normalizer)
    }
}

/// `Z = |S^{d-1}| int_0^inf r^{d-1} exp(-s sqrt(1 + r^2)) dr`.
fn hyperbolic_normalizer(d: usize, scale: f64) -> f64 {
    let sphere = 2.0 * PI.powf(d as f64 / 2.0) / gamma_half_integer(d);
    let f = |r: f64| r.powi(d as i32 - 1) * (-scale * (1.0 + r * r).sqrt()).exp();
    let upper = (80.0 + 10.0 * d as f64) / scale;
    // Split so the adaptive rule sees the bulk at a reasonable resolution.
    let pieces = 64;
    let width = upper / pieces as f64;
    let radial: f64 = (0..pieces)
        .map(|k| adaptive_simpson(&f, k as f64 * width, (k + 1) as f64 * width, 1e-16))
        .sum();
    sphere * radial
}

/// `Gamma(d / 2)` for positive integer `d`.
fn gamma_half_integer(d: usize) -> f64 {
    let mut g = if d.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if d.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < d as f64 / 2.0 - 1e-12 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Closed-form density for user-supplied models.
pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum ModelKind {
    Ou(OrnsteinUhlenbeck),
    Hyperbolic(HyperbolicLangevin),
    Custom { coefficients: Arc<dyn Coefficients>, density: Option<DensityFn> },
}

/// A diffusion together with its declared assumption constants.
#[derive(Clone)]
pub struct DiffusionModel {
    kind: ModelKind,
    pub a1: A1Constants,
    pub a2: A2Constants,
}

impl fmt::Debug for DiffusionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            ModelKind::Ou(ou) => format!("{ou:?}"),
            ModelKind::Hyperbolic(h) => format!("{h:?}"),
            ModelKind::Custom { .. } => "Custom".to_string(),
        };
        f.debug_struct("DiffusionModel")
            .field("kind", &kind)
            .field("a1", &self.a1)
            .field("a2", &self.a2)
            .finish()
    }
}

impl DiffusionModel {
    pub fn ou(ou: OrnsteinUhlenbeck) -> Self {
        let d = ou.dimension();
        let (lo, hi) = eig_range(&ou.noise, d);
        let theta_max = ou.theta.iter().cloned().fold(0.0, f64::max);
        let theta_min = ou.theta.iter().cloned().fold(f64::INFINITY, f64::min);
        Self {
            a1: A1Constants { a_min: lo.sqrt(), a0: hi.sqrt(), a1: 1.0, b0: 1.0, b1: theta_max },
            a2: A2Constants { c_b: theta_min, rho_b: 1.0 },
            kind: ModelKind::Ou(ou),
        }
    }

    pub fn hyperbolic_langevin(dimension: usize, scale: f64) -> Result<Self> {
        let h = HyperbolicLangevin::new(dimension, scale)?;
        let s2 = std::f64::consts::SQRT_2;
        Ok(Self {
            a1: A1Constants { a_min: s2, a0: s2, a1: 1.0, b0: scale, b1: scale },
            a2: A2Constants { c_b: scale / s2, rho_b: 1.0 },
            kind: ModelKind::Hyperbolic(h),
        })
    }

    pub fn custom(
        coefficients: Arc<dyn Coefficients>,
        density: Option<DensityFn>,
        a1: A1Constants,
        a2: A2Constants,
    ) -> Self {
        Self { kind: ModelKind::Custom { coefficients, density }, a1, a2 }
    }

    pub fn with_a1(mut self, a1: A1Constants) -> Self {
        self.a1 = a1;
        self
    }

    pub fn with_a2(mut self, a2: A2Constants) -> Self {
        self.a2 = a2;
        self
    }

    fn coefficients(&self) -> &dyn Coefficients {
        match &self.kind {
            ModelKind::Ou(ou) => ou,
            ModelKind::Hyperbolic(h) => h,
            ModelKind::Custom { coefficients, .. } => coefficients.as_ref(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.coefficients().dimension()
    }

    #[inline]
    pub fn drift(&self, x: &[f64], out: &mut [f64]) {
        self.coefficients().drift(x, out)
    }

    #[inline]
    pub fn diffusion(&self, x: &[f64], out: &mut [f64]) {
        self.coefficients().diffusion(x, out)
    }

    pub fn as_ou(&self) -> Option<&OrnsteinUhlenbeck> {
        match &self.kind {
            ModelKind::Ou(ou) => Some(ou),
            _ => None,
        }
    }

    pub fn as_hyperbolic(&self) -> Option<&HyperbolicLangevin> {
        match &self.kind {
            ModelKind::Hyperbolic(h) => Some(h),
            _ => None,
        }
    }

    pub fn has_density(&self) -> bool {
        match &self.kind {
            ModelKind::Custom { coefficients, density } => {
                density.is_some() || coefficients.invariant_density(&vec![0.0; coefficients.dimension()]).is_some()
            }
            _ => true,
        }
    }

    /// Analytic invariant density at `x`.
    pub fn true_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: x.len() });
        }
        let value = match &self.kind {
            ModelKind::Custom { density: Some(f), .. } => Some(f(x)),
            _ => self.coefficients().invariant_density(x),
        };
        value.ok_or(Error::NoAnalyticDensity)
    }

    /// Whether the drift is unbounded on `R^d`, so A1 cannot hold globally.
    pub fn has_unbounded_drift(&self) -> bool {
        matches!(self.kind, ModelKind::Ou(_))
    }
}

pub fn true_density(model: &DiffusionModel, x: &[f64]) -> Result<f64> {
    model.true_density(x)
}

/// Built-in model identifiers as they appear in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum BuiltinModelId {
    Ou {
        theta: Vec<f64>,
        sigma: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        correlation: Option<Vec<Vec<f64>>>,
    },
    HyperbolicLangevin {
        scale: f64,
        dimension: usize,
    },
}

impl BuiltinModelId {
    pub fn dimension(&self) -> usize {
        match self {
            BuiltinModelId::Ou { theta, .. } => theta.len(),
            BuiltinModelId::HyperbolicLangevin { dimension, .. } => *dimension,
        }
    }

    pub fn build(&self) -> Result<DiffusionModel> {
        match self {
            BuiltinModelId::Ou { theta, sigma, correlation } => Ok(DiffusionModel::ou(
                OrnsteinUhlenbeck::new(theta.clone(), sigma.clone(), correlation.clone())?,
            )),
            BuiltinModelId::HyperbolicLangevin { scale, dimension } => {
                DiffusionModel::hyperbolic_langevin(*dimension, *scale)
            }
        }
    }
}

/// Outcome of a single bound check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub declared: f64,
    /// Worst observed value (a maximum, or a minimum for lower bounds).
    pub observed: f64,
    pub worst_point: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<BoundCheck>,
    pub scope: String,
    pub notes: Vec<String>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn eig_range(a: &DMatrix<f64>, d: usize) -> (f64, f64) {
    let at = a * a.transpose();
    let at = DMatrix::from_fn(d, d, |i, j| 0.5 * (at[(i, j)] + at[(j, i)]));
    let eig = SymmetricEigen::new(at);
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

struct Worst {
    value: f64,
    point: Vec<f64>,
}

impl Worst {
    fn new(init: f64) -> Self {
        Self { value: init, point: Vec::new() }
    }
    fn max(&mut self, v: f64, x: &[f64]) {
        if v > self.value || self.point.is_empty() {
            self.value = v;
            self.point = x.to_vec();
        }
    }
    fn min(&mut self, v: f64, x: &[f64]) {
        if v < self.value || self.point.is_empty() {
            self.value = v;
            self.point = x.to_vec();
        }
    }
}

/// Checks A1 on the lattice `{-w, -w + step, ..., w}^d`. A pass covers the
/// sampled box only.
pub fn check_a1(model: &DiffusionModel, box_halfwidth: f64, grid_step: f64) -> Result<AssumptionReport> {
    if !(grid_step > 0.0) || !(box_halfwidth > 0.0) {
        return Err(Error::Precondition("box_halfwidth and grid_step must be positive".into()));
    }
    let d = model.dimension();
    let per_axis = (2.0 * box_halfwidth / grid_step + 1e-9).floor() as usize + 1;
    let total = per_axis.pow(d as u32);

    let mut b_sup = Worst::new(f64::NEG_INFINITY);
    let mut a_sup = Worst::new(f64::NEG_INFINITY);
    let mut db_sup = Worst::new(f64::NEG_INFINITY);
    let mut da_sup = Worst::new(f64::NEG_INFINITY);
    let mut ell_min = Worst::new(f64::INFINITY);

    let mut x = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut a = vec![0.0; d * d];
    let mut bp = vec![0.0; d];
    let mut bm = vec![0.0; d];
    let mut ap = vec![0.0; d * d];
    let mut am = vec![0.0; d * d];
    let finite = |v: &[f64], x: &[f64]| -> Result<()> {
        if v.iter().all(|z| z.is_finite()) {
            Ok(())
        } else {
            Err(Error::CoefficientEvaluation { point: x.to_vec() })
        }
    };

    for idx in 0..total {
        let mut rem = idx;
        for xi in x.iter_mut() {
            *xi = -box_halfwidth + (rem % per_axis) as f64 * grid_step;
            rem /= per_axis;
        }
        model.drift(&x, &mut b);
        model.diffusion(&x, &mut a);
        finite(&b, &x)?;
        finite(&a, &x)?;

        b_sup.max(b.iter().map(|v| v * v).sum::<f64>().sqrt(), &x);
        let am_mat = DMatrix::from_row_slice(d, d, &a);
        let (lo, hi) = eig_range(&am_mat, d);
        a_sup.max(hi.max(0.0).sqrt(), &x);
        ell_min.min(lo, &x);

        let mut db = 0.0f64;
        let mut da = 0.0f64;
        for k in 0..d {
            let orig = x[k];
            x[k] = orig + FD_STEP;
            model.drift(&x, &mut bp);
            model.diffusion(&x, &mut ap);
            x[k] = orig - FD_STEP;
            model.drift(&x, &mut bm);
            model.diffusion(&x, &mut am);
            x[k] = orig;
            finite(&bp, &x)?;
            finite(&bm, &x)?;
            finite(&ap, &x)?;
            finite(&am, &x)?;
            for i in 0..d {
                db = db.max(((bp[i] - bm[i]) / (2.0 * FD_STEP)).abs());
            }
            for i in 0..d * d {
                da = da.max(((ap[i] - am[i]) / (2.0 * FD_STEP)).abs());
            }
        }
        db_sup.max(db, &x);
        da_sup.max(da, &x);
    }

    let c = model.a1;
    let le = |obs: f64, bound: f64| obs <= bound * (1.0 + BOUND_RTOL) + 1e-300;
    let checks = vec![
        BoundCheck { name: "drift_sup".into(), declared: c.b0, observed: b_sup.value, passed: le(b_sup.value, c.b0), worst_point: b_sup.point },
        BoundCheck { name: "diffusion_sup".into(), declared: c.a0, observed: a_sup.value, passed: le(a_sup.value, c.a0), worst_point: a_sup.point },
        BoundCheck { name: "drift_derivative".into(), declared: c.b1, observed: db_sup.value, passed: le(db_sup.value, c.b1), worst_point: db_sup.point },
        BoundCheck { name: "diffusion_derivative".into(), declared: c.a1, observed: da_sup.value, passed: le(da_sup.value, c.a1), worst_point: da_sup.point },
        BoundCheck {
            name: "ellipticity".into(),
            declared: c.a_min * c.a_min,
            observed: ell_min.value,
            passed: ell_min.value >= c.a_min * c.a_min * (1.0 - BOUND_RTOL),
            worst_point: ell_min.point,
        },
    ];
    let mut notes = Vec::new();
    if model.has_unbounded_drift() {
        notes.push("drift is unbounded on R^d: A1 is violated globally regardless of the sampled box".into());
    }
    Ok(AssumptionReport {
        checks,
        scope: format!(
            "verdicts cover the lattice [-{box_halfwidth}, {box_halfwidth}]^{d} with step {grid_step} only; not a global claim"
        ),
        notes,
    })
}

/// Deterministic direction set on the unit sphere: the `2d` signed axes
/// followed by normalized Halton points.
pub fn sphere_directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let mut out = Vec::with_capacity(count);
    for k in 0..(2 * d).min(count) {
        let mut v = vec![0.0; d];
        v[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
        out.push(v);
    }
    if d == 2 {
        let extra = count.saturating_sub(out.len());
        for k in 0..extra {
            let t = 2.0 * PI * (k as f64 + 0.5) / extra as f64;
            out.push(vec![t.cos(), t.sin()]);
        }
        return out;
    }
    let mut i = 1u64;
    while out.len() < count {
        let v: Vec<f64> = (0..d).map(|k| 2.0 * radical_inverse(i, PRIMES[k % PRIMES.len()]) - 1.0).collect();
        i += 1;
        let norm = v.iter().map(|z| z * z).sum::<f64>().sqrt();
        if norm > 1e-3 {
            out.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    out
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    r
}

/// Checks `<x, b(x)> <= -c_b |x|` on spheres of the given radii. The
/// observed value is the largest excess `<x, b(x)> + c_b |x|`; the check
/// passes when it is nonpositive.
pub fn check_a2(model: &DiffusionModel, radii: &[f64], directions_per_radius: usize) -> Result<AssumptionReport> {
    if directions_per_radius == 0 {
        return Err(Error::Precondition("directions_per_radius must be positive".into()));
    }
    let c = model.a2;
    if let Some(&r) = radii.iter().find(|&&r| r < c.rho_b) {
        return Err(Error::RadiusInsideExemptBall { radius: r, exempt: c.rho_b });
    }
    let d = model.dimension();
    let dirs = sphere_directions(d, directions_per_radius);
    let mut worst = Worst::new(f64::NEG_INFINITY);
    let mut b = vec![0.0; d];
    let mut x = vec![0.0; d];
    for &r in radii {
        for dir in &dirs {
            for (xi, ui) in x.iter_mut().zip(dir) {
                *xi = r * ui;
            }
            model.drift(&x, &mut b);
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::CoefficientEvaluation { point: x.clone() });
            }
            let inner: f64 = x.iter().zip(&b).map(|(p, q)| p * q).sum();
            worst.max(inner + c.c_b * r, &x);
        }
    }
    let tol = 1e-12 * c.c_b * radii.iter().cloned().fold(1.0, f64::max);
    Ok(AssumptionReport {
        checks: vec![BoundCheck {
            name: "drift_confinement".into(),
            declared: c.c_b,
            observed: worst.value,
            passed: worst.value <= tol,
            worst_point: worst.point,
        }],
        scope: format!("verdict covers {directions_per_radius} deterministic directions on each of {} spheres", radii.len()),
        notes: Vec::new(),
    })
}
