//! Path simulation: Euler–Maruyama on a fine grid for any model, exact
//! Gaussian transitions for Ornstein–Uhlenbeck, and extraction of
//! observations along a schedule.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::models::{DiffusionModel, OrnsteinUhlenbeck};
use crate::rng::StreamId;
use crate::sampling::SamplingSchedule;

/// Default burn-in, in model time units.
pub const DEFAULT_BURN_IN: f64 = 20.0;
/// Default ratio between the schedule mesh and the fine step.
pub const FINE_STEPS_PER_MESH: f64 = 50.0;

/// States at `0, dt, 2 dt, ...`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FinePath {
    dt: f64,
    dimension: usize,
    values: Vec<f64>,
}

impl FinePath {
    pub fn new(dt: f64, dimension: usize, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || dimension == 0 || values.is_empty() || !values.len().is_multiple_of(dimension) {
            return Err(Error::Parameter("malformed fine path".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("fine path contains non-finite states".into()));
        }
        Ok(Self { dt, dimension, values })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of the last stored state.
    pub fn horizon(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    #[inline]
    pub fn state(&self, k: usize) -> &[f64] {
        &self.values[k * self.dimension..(k + 1) * self.dimension]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same path with coordinates reordered: new coordinate `j` is old
    /// coordinate `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> FinePath {
        let d = self.dimension;
        let mut values = Vec::with_capacity(self.values.len());
        for k in 0..self.len() {
            let s = self.state(k);
            values.extend(perm.iter().map(|&p| s[p]));
        }
        FinePath { dt: self.dt, dimension: d, values }
    }

    pub fn to_csv(&self) -> String {
        let mut out = header(self.dimension);
        for k in 0..self.len() {
            let _ = write!(out, "{}", k as f64 * self.dt);
            for v in self.state(k) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`FinePath::to_csv`]: complete rows on
    /// an equally spaced time grid starting at 0.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let head = lines.next().ok_or_else(|| Error::Parameter("empty path CSV".into()))?;
        let d = head.split(',').count().saturating_sub(1);
        if d == 0 {
            return Err(Error::Parameter("path CSV needs time and at least one coordinate".into()));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != d + 1 {
                return Err(Error::Parameter(format!("path CSV row {} has {} cells, expected {}", i + 1, cells.len(), d + 1)));
            }
            for c in &cells {
                let v: f64 = c.trim().parse().map_err(|_| Error::Parameter(format!("bad number '{c}' in row {}", i + 1)))?;
                values.push(v);
            }
            times.push(values.remove(values.len() - d - 1));
        }
        if times.len() < 2 || times[0] != 0.0 {
            return Err(Error::Parameter("path CSV needs at least two rows starting at time 0".into()));
        }
        let dt = times[1];
        for (k, t) in times.iter().enumerate() {
            if (t - k as f64 * dt).abs() > 1e-9 * (k as f64 * dt).max(dt) {
                return Err(Error::Parameter(format!("path CSV time {t} is off the grid of step {dt}")));
            }
        }
        FinePath::new(dt, d, values)
    }
}

fn header(d: usize) -> String {
    let mut h = String::from("time");
    for l in 1..=d {
        let _ = write!(h, ",x{l}");
    }
    h.push('\n');
    h
}

/// Number of fine steps covering `[0, t]` (floor, tolerant to rounding).
pub fn steps_for(t: f64, dt: f64) -> usize {
    (t / dt + 1e-9).floor() as usize
}

/// Euler–Maruyama `X_{k+1} = X_k + b(X_k) dt + a(X_k) sqrt(dt) xi_k`,
/// discarding `[0, t_burn)` and returning a window of length `horizon`.
pub fn simulate_path(
    model: &DiffusionModel,
    x0: &[f64],
    dt: f64,
    t_burn: f64,
    horizon: f64,
    stream: StreamId,
) -> Result<FinePath> {
    let keep = if dt > 0.0 { steps_for(horizon, dt) } else { 0 };
    let mut values = Vec::with_capacity((keep + 1) * model.dimension());
    euler_visit(model, x0, dt, t_burn, horizon, stream, |x| values.extend_from_slice(x))?;
    FinePath::new(dt, model.dimension(), values)
}

/// Streaming form of [`simulate_path`]: `visit` sees every retained state
/// in time order without the path being stored.
pub fn euler_visit<F: FnMut(&[f64])>(
    model: &DiffusionModel,
    x0: &[f64],
    dt: f64,
    t_burn: f64,
    horizon: f64,
    stream: StreamId,
    mut visit: F,
) -> Result<()> {
    let d = model.dimension();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    if !(dt > 0.0) || !(horizon > 0.0) || dt > horizon || !(t_burn >= 0.0) {
        return Err(Error::Precondition("need 0 < dt <= T and t_burn >= 0".into()));
    }
    let burn = (t_burn / dt).round() as usize;
    let keep = steps_for(horizon, dt);
    let mut rng = stream.rng();
    let sqrt_dt = dt.sqrt();
    let mut x = x0.to_vec();
    let mut b = vec![0.0; d];
    let mut a = vec![0.0; d * d];
    let mut xi = vec![0.0; d];
    if burn == 0 {
        visit(&x);
    }
    for step in 1..=burn + keep {
        model.drift(&x, &mut b);
        model.diffusion(&x, &mut a);
        for v in xi.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        for i in 0..d {
            let noise: f64 = (0..d).map(|j| a[i * d + j] * xi[j]).sum();
            x[i] += b[i] * dt + noise * sqrt_dt;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::PathDivergence { step });
        }
        if step >= burn {
            visit(&x);
        }
    }
    Ok(())
}

/// Exact stationary OU states at `0, dt, ..., floor(T/dt) dt`, streamed to
/// `visit`. Matches [`ou_exact_fine_path`] state for state.
pub fn ou_exact_visit<F: FnMut(&[f64])>(
    ou: &OrnsteinUhlenbeck,
    dt: f64,
    horizon: f64,
    stream: StreamId,
    mut visit: F,
) -> Result<()> {
    if !(dt > 0.0) || !(horizon >= dt) {
        return Err(Error::Precondition("need 0 < dt <= T".into()));
    }
    let mut rng = stream.rng();
    let mut x = stationary_draw(ou, &mut rng);
    let mut stepper = OuStepper::new(ou);
    visit(&x);
    for _ in 0..steps_for(horizon, dt) {
        stepper.step(&mut x, dt, &mut rng);
        visit(&x);
    }
    Ok(())
}

fn stationary_draw<R: Rng>(ou: &OrnsteinUhlenbeck, rng: &mut R) -> Vec<f64> {
    let d = ou.theta().len();
    let s = ou.stationary_covariance();
    let flat: Vec<f64> = (0..d * d).map(|k| s[(k / d, k % d)]).collect();
    let l = cholesky_psd(&flat, d);
    let xi: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    (0..d).map(|i| (0..=i).map(|j| l[i * d + j] * xi[j]).sum()).collect()
}

/// Starting state for exact OU sampling.
#[derive(Debug, Clone, PartialEq)]
pub enum OuStart {
    Point(Vec<f64>),
    /// Draw from the stationary law, so the whole path is stationary.
    Stationary,
}

/// Lower Cholesky factor of a small symmetric positive semidefinite
/// matrix; zero pivots yield zero columns.
fn cholesky_psd(m: &[f64], d: usize) -> Vec<f64> {
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut diag = m[j * d + j];
        for k in 0..j {
            diag -= l[j * d + k] * l[j * d + k];
        }
        let pivot = if diag > 0.0 { diag.sqrt() } else { 0.0 };
        l[j * d + j] = pivot;
        for i in j + 1..d {
            let mut v = m[i * d + j];
            for k in 0..j {
                v -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = if pivot > 0.0 { v / pivot } else { 0.0 };
        }
    }
    l
}

/// Transition sampler with a small cache of factorized innovation
/// covariances keyed by step length.
struct OuStepper<'a> {
    ou: &'a OrnsteinUhlenbeck,
    cache: Vec<(f64, Vec<f64>, Vec<f64>)>,
    xi: Vec<f64>,
}

impl<'a> OuStepper<'a> {
    const CACHE: usize = 16;

    fn new(ou: &'a OrnsteinUhlenbeck) -> Self {
        let d = ou.theta().len();
        Self { ou, cache: Vec::new(), xi: vec![0.0; d] }
    }

    fn factors(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.ou.theta().len();
        let decay: Vec<f64> = self.ou.theta().iter().map(|t| (-t * s).exp()).collect();
        let cov = self.ou.transition_covariance(s);
        let flat: Vec<f64> = (0..d * d).map(|k| cov[(k / d, k % d)]).collect();
        (decay, cholesky_psd(&flat, d))
    }

    fn step<R: Rng>(&mut self, x: &mut [f64], s: f64, rng: &mut R) {
        for v in self.xi.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        // Steps that differ only by rounding share a factorization.
        let idx = match self.cache.iter().position(|(k, _, _)| (k - s).abs() <= 1e-9 * s) {
            Some(p) => p,
            None => {
                let (decay, chol) = self.factors(s);
                if self.cache.len() >= Self::CACHE {
                    apply_transition(x, &decay, &chol, &self.xi);
                    return;
                }
                self.cache.push((s, decay, chol));
                self.cache.len() - 1
            }
        };
        let (_, decay, chol) = &self.cache[idx];
        apply_transition(x, decay, chol, &self.xi);
    }
}

#[inline]
fn apply_transition(x: &mut [f64], decay: &[f64], chol: &[f64], xi: &[f64]) {
    let d = x.len();
    for i in 0..d {
        let mut noise = 0.0;
        for j in 0..=i {
            noise += chol[i * d + j] * xi[j];
        }
        x[i] = decay[i] * x[i] + noise;
    }
}

/// Exact OU states at the sorted `times`, returned row-major
/// (`times.len() x d`).
pub fn ou_exact_path(ou: &OrnsteinUhlenbeck, times: &[f64], stream: StreamId, start: &OuStart) -> Result<Vec<f64>> {
    let d = ou.theta().len();
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::Precondition("times must be sorted and nonnegative".into()));
    }
    let mut rng = stream.rng();
    let mut x = match start {
        OuStart::Point(p) => {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            p.clone()
        }
        OuStart::Stationary => stationary_draw(ou, &mut rng),
    };
    let mut stepper = OuStepper::new(ou);
    let mut out = Vec::with_capacity(times.len() * d);
    let mut now = 0.0;
    for &t in times {
        if t > now {
            stepper.step(&mut x, t - now, &mut rng);
            now = t;
        }
        out.extend_from_slice(&x);
    }
    Ok(out)
}

/// Exact stationary OU path on the fine grid `0, dt, ..., floor(T/dt) dt`.
pub fn ou_exact_fine_path(ou: &OrnsteinUhlenbeck, dt: f64, horizon: f64, stream: StreamId) -> Result<FinePath> {
    let mut values = Vec::with_capacity((steps_for(horizon, dt) + 1) * ou.theta().len());
    ou_exact_visit(ou, dt, horizon, stream, |x| values.extend_from_slice(x))?;
    FinePath::new(dt, ou.theta().len(), values)
}

/// Per-coordinate observed values aligned with a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    schedule: Arc<SamplingSchedule>,
    values: Vec<Vec<f64>>,
    fine: Option<FinePath>,
}

impl ObservationSet {
    pub fn new(schedule: Arc<SamplingSchedule>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != schedule.dimension() {
            return Err(Error::DimensionMismatch { expected: schedule.dimension(), got: values.len() });
        }
        for (l, v) in values.iter().enumerate() {
            if v.len() != schedule.grid(l).len() {
                return Err(Error::Parameter(format!(
                    "coordinate {l}: {} values for {} ticks",
                    v.len(),
                    schedule.grid(l).len()
                )));
            }
        }
        Ok(Self { schedule, values, fine: None })
    }

    pub fn with_fine_path(mut self, path: FinePath) -> Self {
        self.fine = Some(path);
        self
    }

    pub fn schedule(&self) -> &SamplingSchedule {
        &self.schedule
    }

    pub fn shared_schedule(&self) -> &Arc<SamplingSchedule> {
        &self.schedule
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self, l: usize) -> &[f64] {
        &self.values[l]
    }

    pub fn fine_path(&self) -> Option<&FinePath> {
        self.fine.as_ref()
    }

    /// Rows at the union ticks (`time,x1..xd`); a coordinate not observed
    /// at a tick leaves its cell empty.
    pub fn to_csv(&self) -> String {
        let s = &*self.schedule;
        let d = self.dimension();
        let mut out = header(d);
        let mut ptr = vec![0usize; d];
        for t in s.union_ticks() {
            let _ = write!(out, "{t}");
            for l in 0..d {
                out.push(',');
                if s.grid(l).get(ptr[l]) == Some(&t) {
                    let _ = write!(out, "{}", self.values[l][ptr[l]]);
                    ptr[l] += 1;
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`ObservationSet::to_csv`]. The horizon
    /// defaults to the last tick plus the last gap of the union grid.
    pub fn from_csv(text: &str, horizon: Option<f64>) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let head = lines.next().ok_or_else(|| Error::Parameter("empty CSV".into()))?;
        let d = head.split(',').count() - 1;
        if d == 0 {
            return Err(Error::Parameter("CSV needs a time column and coordinates".into()));
        }
        let mut grids = vec![Vec::new(); d];
        let mut values = vec![Vec::new(); d];
        let mut times = Vec::new();
        for (row, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != d + 1 {
                return Err(Error::Parameter(format!("row {row}: expected {} cells", d + 1)));
            }
            let parse = |c: &str| {
                c.parse::<f64>().map_err(|e| Error::Parameter(format!("row {row}: {e}")))
            };
            let t = parse(cells[0])?;
            times.push(t);
            for l in 0..d {
                if !cells[l + 1].is_empty() {
                    grids[l].push(t);
                    values[l].push(parse(cells[l + 1])?);
                }
            }
        }
        let horizon = match horizon {
            Some(h) => h,
            None => match times.len() {
                0 => return Err(Error::Parameter("CSV has no rows".into())),
                1 => times[0] + 1.0,
                n => times[n - 1] + (times[n - 1] - times[n - 2]),
            },
        };
        let schedule = SamplingSchedule::new(horizon, grids)?;
        ObservationSet::new(Arc::new(schedule), values)
    }
}

/// Extracts, for every tick, the fine-grid state at the nearest index.
pub fn observe(path: &FinePath, schedule: Arc<SamplingSchedule>) -> Result<ObservationSet> {
    if path.dimension() != schedule.dimension() {
        return Err(Error::DimensionMismatch { expected: schedule.dimension(), got: path.dimension() });
    }
    let values = (0..schedule.dimension())
        .map(|l| {
            schedule
                .grid(l)
                .iter()
                .map(|&t| {
                    let k = (t / path.dt()).round() as usize;
                    if k >= path.len() {
                        Err(Error::Domain(format!("tick {t} beyond path horizon {}", path.horizon())))
                    } else {
                        Ok(path.state(k)[l])
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ObservationSet::new(schedule, values)
}

/// Exact stationary OU observations on an arbitrary schedule, sampled on
/// the union of its ticks.
pub fn observe_exact_ou(ou: &OrnsteinUhlenbeck, schedule: Arc<SamplingSchedule>, stream: StreamId) -> Result<ObservationSet> {
    let d = ou.theta().len();
    if schedule.dimension() != d {
        return Err(Error::DimensionMismatch { expected: d, got: schedule.dimension() });
    }
    if schedule.is_synchronous() {
        let states = ou_exact_path(ou, schedule.grid(0), stream, &OuStart::Stationary)?;
        let values = (0..d).map(|l| states.iter().skip(l).step_by(d).copied().collect()).collect();
        return ObservationSet::new(schedule, values);
    }
    let union = schedule.union_ticks();
    let states = ou_exact_path(ou, &union, stream, &OuStart::Stationary)?;
    let values = (0..d)
        .map(|l| {
            let mut k = 0;
            schedule
                .grid(l)
                .iter()
                .map(|&t| {
                    while union[k] != t {
                        k += 1;
                    }
                    states[k * d + l]
                })
                .collect()
        })
        .collect();
    ObservationSet::new(schedule, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{A1Constants, A2Constants, Coefficients};
    use crate::sampling::uniform_schedule;

    struct Frozen;
    impl Coefficients for Frozen {
        fn dimension(&self) -> usize {
            2
        }
        fn drift(&self, _x: &[f64], out: &mut [f64]) {
            out.iter_mut().for_each(|v| *v = 0.0);
        }
        fn diffusion(&self, _x: &[f64], out: &mut [f64]) {
            out.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    struct Explosive;
    impl Coefficients for Explosive {
        fn dimension(&self) -> usize {
            2
        }
        fn drift(&self, x: &[f64], out: &mut [f64]) {
            out[0] = x[0] * x[0] * 1e3;
            out[1] = 0.0;
        }
        fn diffusion(&self, _x: &[f64], out: &mut [f64]) {
            out.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn consts() -> (A1Constants, A2Constants) {
        (
            A1Constants { a_min: 1.0, a0: 1.0, a1: 1.0, b0: 1.0, b1: 1.0 },
            A2Constants { c_b: 1.0, rho_b: 1.0 },
        )
    }

    fn ou3() -> OrnsteinUhlenbeck {
        OrnsteinUhlenbeck::isotropic(3, 1.0, std::f64::consts::SQRT_2).unwrap()
    }

    #[test]
    fn fine_path_csv_round_trip() {
        let p = FinePath::new(0.1, 2, (0..22).map(|k| k as f64 * 0.5).collect()).unwrap();
        let back = FinePath::from_csv(&p.to_csv()).unwrap();
        assert_eq!(back.values(), p.values());
        assert!((back.dt() - 0.1).abs() < 1e-15);
        assert!(FinePath::from_csv("time,x1\n0,1\n0.1,2\n0.3,3\n").is_err());
    }

    #[test]
    fn frozen_model_gives_constant_path() {
        let (a1, a2) = consts();
        let m = DiffusionModel::custom(Arc::new(Frozen), None, a1, a2);
        let p = simulate_path(&m, &[0.3, -1.2], 0.01, 1.0, 2.0, StreamId::new(1, 0)).unwrap();
        assert_eq!(p.len(), 201);
        for k in 0..p.len() {
            assert_eq!(p.state(k), &[0.3, -1.2]);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let (a1, a2) = consts();
        let m = DiffusionModel::custom(Arc::new(Explosive), None, a1, a2);
        let r = simulate_path(&m, &[1.0, 0.0], 0.1, 0.0, 100.0, StreamId::new(1, 0));
        assert!(matches!(r, Err(Error::PathDivergence { .. })), "{r:?}");
    }

    #[test]
    fn euler_paths_are_deterministic() {
        let m = DiffusionModel::hyperbolic_langevin(2, 1.0).unwrap();
        let a = simulate_path(&m, &[0.0, 0.0], 0.01, 1.0, 5.0, StreamId::new(9, 3)).unwrap();
        let b = simulate_path(&m, &[0.0, 0.0], 0.01, 1.0, 5.0, StreamId::new(9, 3)).unwrap();
        assert_eq!(a, b);
        let c = simulate_path(&m, &[0.0, 0.0], 0.01, 1.0, 5.0, StreamId::new(9, 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn euler_ou_stationary_variance() {
        // Batch means: 20 batches of length 500 from one long path.
        let m = DiffusionModel::ou(OrnsteinUhlenbeck::isotropic(2, 1.0, std::f64::consts::SQRT_2).unwrap());
        let p = simulate_path(&m, &[0.0, 0.0], 0.01, DEFAULT_BURN_IN, 10_000.0, StreamId::new(3, 0)).unwrap();
        for l in 0..2 {
            let xs: Vec<f64> = (0..p.len()).map(|k| p.state(k)[l]).collect();
            let batches = 20;
            let size = xs.len() / batches;
            let bm: Vec<f64> = (0..batches)
                .map(|b| xs[b * size..(b + 1) * size].iter().map(|x| x * x).sum::<f64>() / size as f64)
                .collect();
            let mean = bm.iter().sum::<f64>() / batches as f64;
            let sd = (bm.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (batches - 1) as f64).sqrt();
            let se = sd / (batches as f64).sqrt();
            // EM bias on the variance is O(dt) = 0.5%, well under 3 se here.
            assert!((mean - 1.0).abs() < 3.0 * se + 0.006, "coord {l}: {mean} +- {se}");
        }
    }

    #[test]
    fn ou_zero_step_is_identity_and_long_step_forgets() {
        let ou = ou3();
        let states = ou_exact_path(&ou, &[1.0, 1.0, 1.0], StreamId::new(1, 1), &OuStart::Point(vec![2.0, -1.0, 0.5])).unwrap();
        assert_eq!(&states[0..3], &states[3..6]);
        assert_eq!(&states[3..6], &states[6..9]);
        let c = ou.transition_covariance(50.0);
        assert!((c[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((-ou.theta()[0] * 50.0f64).exp() < 1e-20);
        assert_eq!(ou.transition_covariance(0.0)[(1, 1)], 0.0);
    }

    #[test]
    fn ou_lag_one_autocorrelation() {
        // 1e5 stationary pairs (X_0, X_1); Monte Carlo oracle vs exp(-1).
        let ou = OrnsteinUhlenbeck::isotropic(1, 1.0, std::f64::consts::SQRT_2).unwrap();
        let n = 100_000;
        let mut prod = Vec::with_capacity(n);
        for r in 0..n {
            let s = ou_exact_path(&ou, &[0.0, 1.0], StreamId::new(17, r as u64), &OuStart::Stationary).unwrap();
            prod.push(s[0] * s[1]);
        }
        let mean = prod.iter().sum::<f64>() / n as f64;
        let sd = (prod.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let se = sd / (n as f64).sqrt();
        assert!((mean - (-1.0f64).exp()).abs() < 3.0 * se, "{mean} +- {se}");
    }

    #[test]
    fn observe_examples() {
        let ou = ou3();
        let path = ou_exact_fine_path(&ou, 0.1, 2.0, StreamId::new(4, 0)).unwrap();
        assert_eq!(path.len(), 21);
        let s = Arc::new(uniform_schedule(21, 0.1, 3).unwrap());
        let obs = observe(&path, s).unwrap();
        for l in 0..3 {
            for k in 0..21 {
                assert_eq!(obs.values(l)[k], path.state(k)[l]);
            }
        }
        let single = Arc::new(SamplingSchedule::new(1.0, vec![vec![0.0]; 3]).unwrap());
        let obs = observe(&path, single).unwrap();
        assert_eq!(obs.values(2)[0], path.state(0)[2]);

        let far = Arc::new(uniform_schedule(3, 1.5, 3).unwrap());
        assert!(matches!(observe(&path, far), Err(Error::Domain(_))));
    }

    #[test]
    fn observe_snaps_within_half_step() {
        let dt = 0.02;
        let ou = ou3();
        let path = ou_exact_fine_path(&ou, dt, 10.0, StreamId::new(4, 1)).unwrap();
        let grid: Vec<f64> = std::iter::once(0.0).chain((1..50).map(|i| i as f64 * 0.1937)).collect();
        let s = Arc::new(SamplingSchedule::new(10.0, vec![grid.clone(); 3]).unwrap());
        let obs = observe(&path, s).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            let k = (t / dt).round() as usize;
            assert!((k as f64 * dt - t).abs() <= dt / 2.0 + 1e-12);
            assert_eq!(obs.values(0)[i], path.state(k)[0]);
        }
    }

    #[test]
    fn observe_commutes_with_permutation() {
        let ou = ou3();
        let path = ou_exact_fine_path(&ou, 0.05, 3.0, StreamId::new(2, 2)).unwrap();
        let s = Arc::new(uniform_schedule(30, 0.1, 3).unwrap());
        let perm = [2, 0, 1];
        let a = observe(&path.permuted(&perm), s.clone()).unwrap();
        let b = observe(&path, s).unwrap();
        for (j, &p) in perm.iter().enumerate() {
            assert_eq!(a.values(j), b.values(p));
        }
    }

    #[test]
    fn csv_round_trip_async() {
        let s = Arc::new(SamplingSchedule::new(1.5, vec![vec![0.0, 1.0], vec![0.0, 0.5]]).unwrap());
        let obs = ObservationSet::new(s, vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let text = obs.to_csv();
        assert_eq!(text, "time,x1,x2\n0,1,3\n0.5,,4\n1,2,\n");
        let back = ObservationSet::from_csv(&text, Some(1.5)).unwrap();
        assert_eq!(back, obs);
    }

    #[test]
    fn exact_observation_matches_union_sampling() {
        let ou = ou3();
        let s = Arc::new(SamplingSchedule::new(2.0, vec![vec![0.0, 1.0], vec![0.0, 0.5, 1.0], vec![0.0, 1.5]]).unwrap());
        let obs = observe_exact_ou(&ou, s, StreamId::new(5, 5)).unwrap();
        let states = ou_exact_path(&ou, &[0.0, 0.5, 1.0, 1.5], StreamId::new(5, 5), &OuStart::Stationary).unwrap();
        assert_eq!(obs.values(0), &[states[0], states[6]]);
        assert_eq!(obs.values(1), &[states[1], states[4], states[7]]);
        assert_eq!(obs.values(2), &[states[2], states[11]]);
    }
}
