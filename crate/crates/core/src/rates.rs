//! Anisotropic smoothness arithmetic: harmonic means, rate-optimal
//! bandwidths, sampling-regime classification and theoretical MSE exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::BandwidthVector;

/// Smoothness indices `0 < beta_1 <= ... <= beta_d` with Hölder constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SmoothnessRepr", into = "SmoothnessRepr")]
pub struct SmoothnessSpec {
    beta: Vec<f64>,
    l: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SmoothnessRepr {
    beta: Vec<f64>,
    #[serde(default)]
    l: Option<Vec<f64>>,
}

impl TryFrom<SmoothnessRepr> for SmoothnessSpec {
    type Error = Error;
    fn try_from(r: SmoothnessRepr) -> Result<Self> {
        let l = r.l.unwrap_or_else(|| vec![1.0; r.beta.len()]);
        SmoothnessSpec::new(r.beta, l)
    }
}

impl From<SmoothnessSpec> for SmoothnessRepr {
    fn from(s: SmoothnessSpec) -> Self {
        SmoothnessRepr { beta: s.beta, l: Some(s.l) }
    }
}

impl SmoothnessSpec {
    pub fn new(beta: Vec<f64>, l: Vec<f64>) -> Result<Self> {
        if beta.len() < 2 {
            return Err(Error::Precondition("smoothness needs d >= 2".into()));
        }
        if l.len() != beta.len() {
            return Err(Error::DimensionMismatch { expected: beta.len(), got: l.len() });
        }
        if beta.iter().chain(&l).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Precondition("beta and L must be positive".into()));
        }
        if beta.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Precondition(format!("beta must be sorted ascending, got {beta:?}")));
        }
        Ok(Self { beta, l })
    }

    pub fn isotropic(beta: f64, d: usize) -> Result<Self> {
        Self::new(vec![beta; d], vec![1.0; d])
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn constants(&self) -> &[f64] {
        &self.l
    }

    pub fn dimension(&self) -> usize {
        self.beta.len()
    }

    /// `beta_2 < beta_3`; the continuous rates then carry a log factor.
    pub fn has_log_factor(&self) -> bool {
        self.beta.len() >= 3 && self.beta[1] < self.beta[2]
    }

    pub fn harmonic_means(&self) -> HarmonicMeans {
        harmonic_means(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicMeans {
    /// `1/beta_bar = (1/d) sum_j 1/beta_j`.
    pub beta_bar: f64,
    /// `1/beta_bar_3 = (1/(d-2)) sum_{j>=3} 1/beta_j`; `None` when `d = 2`.
    pub beta_bar3: Option<f64>,
    /// Harmonic mean of `beta_{k0+1..d}`; `None` when all indices are equal.
    pub beta_bar_k: Option<f64>,
    /// Multiplicity of `beta_1`.
    pub k0: usize,
}

fn harmonic(values: &[f64]) -> f64 {
    values.len() as f64 / values.iter().map(|b| 1.0 / b).sum::<f64>()
}

pub fn harmonic_means(spec: &SmoothnessSpec) -> HarmonicMeans {
    let b = &spec.beta;
    let d = b.len();
    let k0 = b.iter().take_while(|&&v| v == b[0]).count();
    HarmonicMeans {
        beta_bar: harmonic(b),
        beta_bar3: (d >= 3).then(|| harmonic(&b[2..])),
        beta_bar_k: (k0 < d).then(|| harmonic(&b[k0..])),
        k0,
    }
}

/// Exponents `a_j = beta_bar_3 / (beta_j (2 beta_bar_3 + d - 2))`.
pub fn continuous_exponents(spec: &SmoothnessSpec) -> Result<Vec<f64>> {
    let d = spec.dimension();
    let b3 = harmonic_means(spec)
        .beta_bar3
        .ok_or_else(|| Error::Precondition("continuous bandwidth needs d >= 3; use bandwidth_d2".into()))?;
    Ok(spec.beta.iter().map(|bj| b3 / (bj * (2.0 * b3 + d as f64 - 2.0))).collect())
}

/// Exponents `beta_bar / (beta_j (2 beta_bar + d))` of the intermediate
/// bandwidth in base `1/n`.
pub fn intermediate_exponents(spec: &SmoothnessSpec) -> Vec<f64> {
    let d = spec.dimension() as f64;
    let bb = harmonic_means(spec).beta_bar;
    spec.beta.iter().map(|bj| bb / (bj * (2.0 * bb + d))).collect()
}

fn clamp_below_one(h: f64) -> f64 {
    h.min(1.0 - 1e-12)
}

/// `h*_j = (log T / T)^{a_j}` when `beta_2 < beta_3`, `(1/T)^{a_j}` otherwise.
pub fn bandwidth_continuous(spec: &SmoothnessSpec, horizon: f64) -> Result<BandwidthVector> {
    let a = continuous_exponents(spec)?;
    if !(horizon > std::f64::consts::E) {
        return Err(Error::Precondition(format!("continuous bandwidth needs T > e, got {horizon}")));
    }
    let base = if spec.has_log_factor() { horizon.ln() / horizon } else { 1.0 / horizon };
    BandwidthVector::new(a.iter().map(|aj| clamp_below_one(base.powf(*aj))).collect())
}

/// `h~_j = n^{-beta_bar / (beta_j (2 beta_bar + d))}`.
pub fn bandwidth_intermediate(spec: &SmoothnessSpec, n: f64) -> Result<BandwidthVector> {
    if !(n >= 2.0) {
        return Err(Error::Precondition(format!("intermediate bandwidth needs n >= 2, got {n}")));
    }
    BandwidthVector::new(intermediate_exponents(spec).iter().map(|e| clamp_below_one(n.powf(-e))).collect())
}

/// `h_l = (log T / T)^{1 / (2 beta_l)}` for `d = 2`.
pub fn bandwidth_d2(spec: &SmoothnessSpec, horizon: f64) -> Result<BandwidthVector> {
    if spec.dimension() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: spec.dimension() });
    }
    if !(horizon > 1.0) {
        return Err(Error::Precondition(format!("d = 2 bandwidth needs T > 1, got {horizon}")));
    }
    let base = horizon.ln() / horizon;
    BandwidthVector::new(spec.beta.iter().map(|b| clamp_below_one(base.powf(1.0 / (2.0 * b)))).collect())
}

/// Sampling regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    ContinuousRate,
    Intermediate,
    Gap,
    D2Continuous,
    D2Intermediate,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::ContinuousRate => "continuous-rate",
            Regime::Intermediate => "intermediate",
            Regime::Gap => "gap",
            Regime::D2Continuous => "d2-continuous",
            Regime::D2Intermediate => "d2-intermediate",
        }
    }
}

/// One evaluated threshold: `actual` compared against `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdCheck {
    pub name: String,
    pub threshold: f64,
    pub actual: f64,
    /// `actual / threshold`.
    pub ratio: f64,
    pub satisfied: bool,
}

impl ThresholdCheck {
    fn at_most(name: &str, actual: f64, threshold: f64) -> Self {
        Self { name: name.into(), threshold, actual, ratio: actual / threshold, satisfied: actual <= threshold }
    }
    fn at_least(name: &str, actual: f64, threshold: f64) -> Self {
        Self { name: name.into(), threshold, actual, ratio: actual / threshold, satisfied: actual >= threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeVerdict {
    pub regime: Regime,
    /// Name of the condition that decided the verdict.
    pub binding: String,
    pub checks: Vec<ThresholdCheck>,
    pub log_factor: bool,
}

impl RegimeVerdict {
    pub fn check(&self, name: &str) -> Option<&ThresholdCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Sampling description fed to [`classify_regime`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingInputs {
    pub n: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub horizon: f64,
    pub synchronous: bool,
}

/// Mesh threshold of the synchronous continuous regime (`d >= 3`):
/// `(log T/T)^e log T` if `beta_2 < beta_3`, else `T^{-e}`, with
/// `e = beta_bar_3/(2 beta_bar_3 + d - 2) (1/beta_1 + 1/beta_2)`.
pub fn sync_mesh_threshold(spec: &SmoothnessSpec, horizon: f64) -> Result<f64> {
    let d = spec.dimension() as f64;
    let b = spec.beta();
    let b3 = harmonic_means(spec)
        .beta_bar3
        .ok_or_else(|| Error::Precondition("mesh threshold needs d >= 3".into()))?;
    let e = b3 / (2.0 * b3 + d - 2.0) * (1.0 / b[0] + 1.0 / b[1]);
    Ok(if spec.has_log_factor() {
        (horizon.ln() / horizon).powf(e) * horizon.ln()
    } else {
        horizon.powf(-e)
    })
}

/// Mesh threshold for `d = 2`: `(log T / T)^{1/beta_bar} log T`.
pub fn d2_mesh_threshold(spec: &SmoothnessSpec, horizon: f64) -> f64 {
    let bb = harmonic_means(spec).beta_bar;
    (horizon.ln() / horizon).powf(1.0 / bb) * horizon.ln()
}

/// Synchronous uniform mesh `Delta` with `Delta = ratio * threshold(n Delta)`,
/// found by bisection on `log Delta`.
pub fn mesh_at_threshold_ratio(spec: &SmoothnessSpec, n: f64, ratio: f64) -> Result<f64> {
    let threshold = |t: f64| -> Result<f64> {
        if spec.dimension() == 2 {
            Ok(d2_mesh_threshold(spec, t))
        } else {
            sync_mesh_threshold(spec, t)
        }
    };
    let f = |delta: f64| -> Result<f64> { Ok(delta.ln() - (ratio * threshold(n * delta)?).ln()) };
    let (mut lo, mut hi) = ((std::f64::consts::E * 1.000001 / n).ln(), 10.0f64.ln());
    if f(lo.exp())? > 0.0 || f(hi.exp())? < 0.0 {
        return Err(Error::Precondition(format!("no mesh with ratio {ratio} for n = {n}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid.exp())? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

pub fn classify_regime(spec: &SmoothnessSpec, s: &SamplingInputs) -> Result<RegimeVerdict> {
    let d = spec.dimension();
    if !(s.n > 0.0 && s.delta > 0.0 && s.horizon > 0.0 && s.delta_prime >= 0.0) {
        return Err(Error::Precondition("n, delta and T must be positive, delta' nonnegative".into()));
    }
    if s.delta_prime > s.delta {
        return Err(Error::Precondition(format!("delta' = {} exceeds delta = {}", s.delta_prime, s.delta)));
    }
    if s.synchronous && s.horizon < s.n * s.delta * (1.0 - 1e-9) {
        return Err(Error::Consistency(format!(
            "T = {} is below n * delta = {}",
            s.horizon,
            s.n * s.delta
        )));
    }
    let m = harmonic_means(spec);
    let t = s.horizon;

    if d == 2 {
        let thr = d2_mesh_threshold(spec, t);
        let c = ThresholdCheck::at_most("mesh_d2", s.delta, thr);
        if !s.synchronous && s.delta_prime > 0.0 {
            return Ok(RegimeVerdict {
                regime: Regime::Gap,
                binding: "asynchronous d=2 data: no rate available".into(),
                checks: vec![c, ThresholdCheck::at_most("asynchrony_d2", s.delta_prime, 0.0)],
                log_factor: true,
            });
        }
        let regime = if c.satisfied { Regime::D2Continuous } else { Regime::D2Intermediate };
        return Ok(RegimeVerdict { regime, binding: "mesh_d2".into(), checks: vec![c], log_factor: true });
    }

    let b3 = m.beta_bar3.expect("d >= 3");
    let df = d as f64;
    if s.synchronous {
        let name = if spec.has_log_factor() { "mesh_sync_log" } else { "mesh_sync" };
        let c = ThresholdCheck::at_most(name, s.delta, sync_mesh_threshold(spec, t)?);
        let regime = if c.satisfied { Regime::ContinuousRate } else { Regime::Intermediate };
        return Ok(RegimeVerdict { regime, binding: name.into(), checks: vec![c], log_factor: spec.has_log_factor() });
    }

    let h = bandwidth_continuous(spec, t)?;
    let hs = h.as_slice();
    let c_mesh = ThresholdCheck::at_most("mesh_async", s.delta, 0.25 * hs[0] * hs[1]);
    let c_async = ThresholdCheck::at_most(
        "asynchrony_continuous",
        s.delta_prime,
        (t.ln() / t).powf(2.0 * b3 / (2.0 * b3 + df - 2.0)),
    );
    let ht = bandwidth_intermediate(spec, s.n)?;
    let i_mesh = ThresholdCheck::at_least("mesh_intermediate", s.delta, ht.product().powf(2.0 / df));
    let i_async = ThresholdCheck::at_most(
        "asynchrony_intermediate",
        s.delta_prime,
        s.n.powf(-2.0 * m.beta_bar / (2.0 * m.beta_bar + df)),
    );
    let (regime, binding) = if c_mesh.satisfied && c_async.satisfied {
        (Regime::ContinuousRate, "mesh_async and asynchrony_continuous")
    } else if i_mesh.satisfied && i_async.satisfied {
        (Regime::Intermediate, "mesh_intermediate and asynchrony_intermediate")
    } else {
        (Regime::Gap, "neither continuous nor intermediate conditions hold")
    };
    Ok(RegimeVerdict {
        regime,
        binding: binding.into(),
        checks: vec![c_mesh, c_async, i_mesh, i_async],
        log_factor: spec.has_log_factor(),
    })
}

/// Variable the MSE decays in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleBase {
    #[serde(rename = "T")]
    Horizon,
    #[serde(rename = "n")]
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RateOutcome {
    /// `MSE ~ base^{-exponent}` (times `log base` to the same power when
    /// `log_factor`).
    Rate { exponent: f64, base: ScaleBase, log_factor: bool },
    NoTheoreticalRate,
}

impl RateOutcome {
    pub fn exponent(&self) -> Option<f64> {
        match self {
            RateOutcome::Rate { exponent, .. } => Some(*exponent),
            RateOutcome::NoTheoreticalRate => None,
        }
    }
}

pub fn rate_exponent(spec: &SmoothnessSpec, regime: Regime) -> RateOutcome {
    let d = spec.dimension() as f64;
    let m = harmonic_means(spec);
    match regime {
        Regime::ContinuousRate => match m.beta_bar3 {
            Some(b3) => RateOutcome::Rate {
                exponent: 2.0 * b3 / (2.0 * b3 + d - 2.0),
                base: ScaleBase::Horizon,
                log_factor: spec.has_log_factor(),
            },
            None => rate_exponent(spec, Regime::D2Continuous),
        },
        Regime::Intermediate => RateOutcome::Rate {
            exponent: 2.0 * m.beta_bar / (2.0 * m.beta_bar + d),
            base: ScaleBase::Count,
            log_factor: false,
        },
        Regime::D2Continuous => RateOutcome::Rate { exponent: 1.0, base: ScaleBase::Horizon, log_factor: true },
        Regime::D2Intermediate => RateOutcome::Rate {
            exponent: 2.0 * m.beta_bar / (2.0 * m.beta_bar + 2.0),
            base: ScaleBase::Count,
            log_factor: false,
        },
        Regime::Gap => RateOutcome::NoTheoreticalRate,
    }
}
