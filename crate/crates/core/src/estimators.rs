//! Kernel estimators of the invariant density from a continuous record
//! (fine-grid surrogate), synchronous observations, asynchronous
//! observations, and the hybrid with two continuously observed coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{BandwidthVector, KernelSpec};
use crate::rates::SmoothnessSpec;
use crate::simulate::{steps_for, FinePath, ObservationSet};

/// Which estimator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    Sync,
    Async,
    Hybrid,
    Continuous,
}

impl std::str::FromStr for EstimatorMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sync" => Ok(Self::Sync),
            "async" => Ok(Self::Async),
            "hybrid" => Ok(Self::Hybrid),
            "continuous" => Ok(Self::Continuous),
            other => Err(Error::Parameter(format!("unknown estimator mode {other:?}"))),
        }
    }
}

/// Where and how to estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRequest {
    point: Vec<f64>,
    bandwidth: BandwidthVector,
    kernel: KernelSpec,
}

impl EstimateRequest {
    pub fn new(point: Vec<f64>, bandwidth: BandwidthVector, kernel: KernelSpec) -> Result<Self> {
        if point.len() != bandwidth.len() {
            return Err(Error::DimensionMismatch { expected: point.len(), got: bandwidth.len() });
        }
        Ok(Self { point, bandwidth, kernel })
    }

    /// As [`EstimateRequest::new`], additionally requiring the kernel order
    /// to reach the largest smoothness index.
    pub fn with_smoothness(
        point: Vec<f64>,
        bandwidth: BandwidthVector,
        kernel: KernelSpec,
        smoothness: &SmoothnessSpec,
    ) -> Result<Self> {
        let beta_max = smoothness.beta().last().copied().unwrap_or(0.0);
        if (kernel.order() as f64) < beta_max {
            return Err(Error::Precondition(format!(
                "kernel order {} below max smoothness {beta_max}",
                kernel.order()
            )));
        }
        if smoothness.dimension() != point.len() {
            return Err(Error::DimensionMismatch { expected: point.len(), got: smoothness.dimension() });
        }
        Self::new(point, bandwidth, kernel)
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn bandwidth(&self) -> &BandwidthVector {
        &self.bandwidth
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn dimension(&self) -> usize {
        self.point.len()
    }

    #[inline]
    fn factor(&self, l: usize, value: f64) -> f64 {
        self.kernel.scaled(self.point[l], value, self.bandwidth.as_slice()[l])
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `sum_i (t_{i+1} - t_i) K_h(x - X_{t_i}) / T_n` over a synchronous
/// schedule (`t_n = T_n`); `(1/n) sum_i K_h(x - X_{t_i})` on a uniform grid.
pub fn estimate_sync(obs: &ObservationSet, req: &EstimateRequest) -> Result<f64> {
    let s = obs.schedule();
    if !s.is_synchronous() {
        return Err(Error::NotSynchronous);
    }
    let d = obs.dimension();
    check_dim(d, req.dimension())?;
    let grid = s.grid(0);
    let horizon = s.horizon();
    let mut acc = 0.0;
    for i in 0..grid.len() {
        let next = grid.get(i + 1).copied().unwrap_or(horizon);
        let mut prod = 1.0;
        for l in 0..d {
            prod *= req.factor(l, obs.values(l)[i]);
        }
        acc += (next - grid[i]) * prod;
    }
    Ok(acc / horizon)
}

/// `(1/T_n) int_0^{T_n} prod_l K_{h_l}(x_l - X^l_{phi_l(u)}) du`, evaluated
/// exactly as a sum over the pieces of the union grid.
pub fn estimate_async(obs: &ObservationSet, req: &EstimateRequest) -> Result<f64> {
    let s = obs.schedule();
    let d = obs.dimension();
    check_dim(d, req.dimension())?;
    if s.grids().iter().any(|g| g.is_empty()) {
        return Err(Error::Domain("empty observation grid".into()));
    }
    let mut factors: Vec<f64> = (0..d).map(|l| req.factor(l, obs.values(l)[0])).collect();
    let mut current = vec![0usize; d];
    let mut acc = 0.0;
    s.for_each_segment(|start, end, idx| {
        for l in 0..d {
            if idx[l] != current[l] {
                current[l] = idx[l];
                factors[l] = req.factor(l, obs.values(l)[idx[l]]);
            }
        }
        let mut prod = 1.0;
        for f in &factors {
            prod *= f;
        }
        acc += (end - start) * prod;
    });
    Ok(acc / s.horizon())
}

/// Left-endpoint Riemann sum of the hybrid estimator: the two coordinates
/// in `continuous` are read from the fine path at every fine step, the
/// others (held by `obs`, in increasing coordinate order) at their last
/// tick. Normalized by the horizon of `obs`.
pub fn estimate_hybrid(
    path: &FinePath,
    obs: &ObservationSet,
    continuous: [usize; 2],
    req: &EstimateRequest,
) -> Result<f64> {
    let d = req.dimension();
    if d < 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: d });
    }
    check_dim(d, path.dimension())?;
    check_dim(d - 2, obs.dimension())?;
    let [c0, c1] = continuous;
    if c0 == c1 || c0 >= d || c1 >= d {
        return Err(Error::Parameter(format!("invalid continuous coordinates {continuous:?}")));
    }
    let discrete: Vec<usize> = (0..d).filter(|l| *l != c0 && *l != c1).collect();
    let s = obs.schedule();
    let horizon = s.horizon();
    let dt = path.dt();
    let steps = steps_for(horizon, dt);
    if steps + 1 > path.len() {
        return Err(Error::Domain(format!("fine path ends at {} before T_n = {horizon}", path.horizon())));
    }
    let mut ptr = vec![0usize; discrete.len()];
    let mut factors: Vec<f64> = discrete.iter().enumerate().map(|(j, &l)| req.factor(l, obs.values(j)[0])).collect();
    let mut acc = 0.0;
    for k in 0..steps {
        let u = k as f64 * dt;
        for (j, &l) in discrete.iter().enumerate() {
            let grid = s.grid(j);
            let before = ptr[j];
            while ptr[j] + 1 < grid.len() && grid[ptr[j] + 1] <= u {
                ptr[j] += 1;
            }
            if ptr[j] != before {
                factors[j] = req.factor(l, obs.values(j)[ptr[j]]);
            }
        }
        let state = path.state(k);
        let mut prod = req.factor(c0, state[c0]) * req.factor(c1, state[c1]);
        for f in &factors {
            prod *= f;
        }
        acc += dt * prod;
    }
    Ok(acc / horizon)
}

/// Left-endpoint Riemann approximation of the continuous-record estimator
/// `(1/T) int_0^T K_h(x - X_u) du` on the fine grid.
pub fn estimate_continuous(path: &FinePath, req: &EstimateRequest) -> Result<f64> {
    let d = path.dimension();
    check_dim(d, req.dimension())?;
    let steps = path.len() - 1;
    if steps == 0 {
        return Err(Error::Domain("fine path needs at least two states".into()));
    }
    let dt = path.dt();
    let mut acc = 0.0;
    for k in 0..steps {
        let state = path.state(k);
        let mut prod = 1.0;
        for l in 0..d {
            prod *= req.factor(l, state[l]);
        }
        acc += dt * prod;
    }
    Ok(acc / (steps as f64 * dt))
}

/// Display helper: negative values of higher-order kernel estimates
/// clipped to zero.
pub fn clip_nonnegative(estimate: f64) -> f64 {
    estimate.max(0.0)
}
