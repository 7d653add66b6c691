//! Monte Carlo sweeps: simulate, observe, estimate at a point, and compare
//! empirical error scaling with the theoretical regime exponents.

mod config;
mod fit;
mod histogram;
mod report;

pub use config::{BandwidthRule, ExperimentConfig, HistogramConfig, ScheduleMode, SweepRow};
pub use fit::{fit_exponent, ExponentFit};
pub use histogram::{histogram_oracle, HistogramDensity};
pub use report::{render_svg, summarize, RuleOutcome, Summary, CSV_HEADER};

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{estimate_async, estimate_continuous, estimate_hybrid, estimate_sync, EstimateRequest, EstimatorMode};
use crate::kernels::{BandwidthVector, KernelSpec};
use crate::models::DiffusionModel;
use crate::par::{map_indexed, with_workers};
use crate::rates::{
    bandwidth_continuous, bandwidth_d2, bandwidth_intermediate, classify_regime, rate_exponent, RateOutcome, Regime,
    SamplingInputs, ScaleBase, SmoothnessSpec,
};
use crate::rng::StreamId;
use crate::sampling::SamplingSchedule;
use crate::simulate::{observe, observe_exact_ou, ou_exact_fine_path, simulate_path, FinePath, ObservationSet, FINE_STEPS_PER_MESH};
use crate::stats::{mean, pairwise_sum};

/// Where the reference density value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthSource {
    Analytic,
    /// Occupation histogram of a long path; lower precision.
    Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub scale: f64,
    pub n: usize,
    pub horizon: f64,
    pub delta_n: f64,
    pub delta_prime_n: f64,
    pub mse: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub stderr: f64,
    pub mean_estimate: f64,
    pub regime: Regime,
    pub theory_exponent: Option<f64>,
    pub bandwidth: Vec<f64>,
    pub threshold_ratio: Option<f64>,
    /// Replications dropped after path divergence (at most 1%).
    pub diverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub truth: f64,
    pub truth_source: TruthSource,
    pub scale_base: ScaleBase,
    pub replications: usize,
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let theory = r.theory_exponent.map(|e| e.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.scale,
                r.delta_n,
                r.delta_prime_n,
                r.mse,
                r.bias_sq,
                r.variance,
                r.stderr,
                r.regime.as_str(),
                theory
            ));
        }
        out
    }
}

/// Runs the sweep for the configured built-in model.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let model = cfg.model.build()?;
    run_experiment_with(cfg, &model)
}

/// Runs the sweep with an explicit model; `cfg.model` is ignored.
pub fn run_experiment_with(cfg: &ExperimentConfig, model: &DiffusionModel) -> Result<ResultTable> {
    cfg.validate()?;
    let d = model.dimension();
    if cfg.smoothness.dimension() != d {
        return Err(Error::Config(format!(
            "smoothness has dimension {}, model has {d}",
            cfg.smoothness.dimension()
        )));
    }
    let point = cfg.point.clone().unwrap_or_else(|| vec![0.0; d]);
    if point.len() != d {
        return Err(Error::Config(format!("evaluation point has {} coordinates, model has {d}", point.len())));
    }
    let (truth, truth_source) = match model.true_density(&point) {
        Ok(v) => (v, TruthSource::Analytic),
        Err(Error::NoAnalyticDensity) => match &cfg.histogram {
            Some(h) => (histogram_oracle(model, h, StreamId::new(cfg.seed, u64::MAX))?.density(&point), TruthSource::Histogram),
            None => {
                return Err(Error::Config("model has no analytic density and histogram fallback is disabled".into()))
            }
        },
        Err(e) => return Err(e),
    };
    let kernel = KernelSpec::build(cfg.kernel_order);
    let mut rows = Vec::with_capacity(cfg.sweep.len());
    let mut scale_base = cfg.scale;
    for (index, row) in cfg.sweep.iter().enumerate() {
        let schedule = Arc::new(cfg.build_schedule(index, row, d)?);
        let horizon = schedule.horizon();
        let inputs = SamplingInputs {
            n: row.n as f64,
            delta: schedule.mesh_delta(),
            delta_prime: schedule.asynchrony_delta_prime(),
            horizon,
            synchronous: schedule.is_synchronous(),
        };
        let verdict = classify_regime(&cfg.smoothness, &inputs)?;
        let rate = rate_exponent(&cfg.smoothness, verdict.regime);
        if scale_base.is_none() {
            if let RateOutcome::Rate { base, .. } = rate {
                scale_base = Some(base);
            }
        }
        let bandwidth = row_bandwidth(&cfg.bandwidth, &cfg.smoothness, row.n, horizon)?;
        let req = EstimateRequest::with_smoothness(point.clone(), bandwidth.clone(), kernel.clone(), &cfg.smoothness)?;
        let default_dt = horizon / row.n as f64 / FINE_STEPS_PER_MESH;
        let stream_base = if cfg.common_random_numbers { 0 } else { (index * cfg.replications) as u64 };
        let outcomes: Vec<Result<f64>> = with_workers(cfg.workers, || {
            map_indexed(cfg.replications, |r| {
                let stream = StreamId::new(cfg.seed, stream_base + r as u64);
                replicate(cfg, model, &schedule, &req, default_dt, stream)
            })
        });
        let mut estimates = Vec::with_capacity(outcomes.len());
        let mut diverged = Vec::new();
        for (r, o) in outcomes.into_iter().enumerate() {
            match o {
                Ok(v) => estimates.push(v),
                Err(Error::PathDivergence { step }) => diverged.push((r, step)),
                Err(e) => return Err(e),
            }
        }
        if diverged.len() * 100 > cfg.replications {
            let (r, step) = diverged[0];
            return Err(Error::RowAborted(format!(
                "row {index}: {} of {} paths diverged (first: replication {r} at step {step})",
                diverged.len(),
                cfg.replications
            )));
        }
        let stats = aggregate(&estimates, truth);
        let threshold_ratio = verdict.checks.first().map(|c| c.ratio);
        rows.push(ResultRow {
            scale: 0.0,
            n: row.n,
            horizon,
            delta_n: inputs.delta,
            delta_prime_n: inputs.delta_prime,
            mse: stats.mse,
            bias_sq: stats.bias_sq,
            variance: stats.variance,
            stderr: stats.stderr,
            mean_estimate: stats.mean,
            regime: verdict.regime,
            theory_exponent: rate.exponent(),
            bandwidth: bandwidth.as_slice().to_vec(),
            threshold_ratio,
            diverged: diverged.len(),
        });
    }
    let scale_base = scale_base.unwrap_or(ScaleBase::Horizon);
    for r in &mut rows {
        r.scale = match scale_base {
            ScaleBase::Horizon => r.horizon,
            ScaleBase::Count => r.n as f64,
        };
    }
    Ok(ResultTable { rows, truth, truth_source, scale_base, replications: cfg.replications })
}

fn row_bandwidth(rule: &BandwidthRule, spec: &SmoothnessSpec, n: usize, horizon: f64) -> Result<BandwidthVector> {
    match rule {
        BandwidthRule::Continuous => bandwidth_continuous(spec, horizon),
        BandwidthRule::Intermediate => bandwidth_intermediate(spec, n as f64),
        BandwidthRule::D2 => bandwidth_d2(spec, horizon),
        BandwidthRule::Explicit { h } => BandwidthVector::new(h.clone()),
    }
}

fn replicate(
    cfg: &ExperimentConfig,
    model: &DiffusionModel,
    schedule: &Arc<SamplingSchedule>,
    req: &EstimateRequest,
    default_dt: f64,
    stream: StreamId,
) -> Result<f64> {
    let horizon = schedule.horizon();
    let needs_path = matches!(cfg.estimator, EstimatorMode::Hybrid | EstimatorMode::Continuous);
    let fine_path = |dt: f64| -> Result<FinePath> {
        match model.as_ou() {
            Some(ou) => ou_exact_fine_path(ou, dt, horizon, stream),
            None => {
                let x0 = cfg.initial_state.clone().unwrap_or_else(|| vec![0.0; model.dimension()]);
                simulate_path(model, &x0, dt, cfg.burn_in, horizon, stream)
            }
        }
    };
    let (path, obs) = match (model.as_ou(), cfg.fine_dt, needs_path) {
        (Some(ou), None, false) => (None, observe_exact_ou(ou, Arc::clone(schedule), stream)?),
        (_, dt, _) => {
            let path = fine_path(dt.unwrap_or(default_dt))?;
            let obs = observe(&path, Arc::clone(schedule))?;
            (Some(path), obs)
        }
    };
    match cfg.estimator {
        EstimatorMode::Sync => estimate_sync(&obs, req),
        EstimatorMode::Async => estimate_async(&obs, req),
        EstimatorMode::Continuous => estimate_continuous(path.as_ref().expect("fine path"), req),
        EstimatorMode::Hybrid => {
            let [c0, c1] = cfg.continuous_coords.unwrap_or([0, 1]);
            let discrete: Vec<usize> = (0..model.dimension()).filter(|l| *l != c0 && *l != c1).collect();
            let sub = SamplingSchedule::new(horizon, discrete.iter().map(|&l| schedule.grid(l).to_vec()).collect())?;
            let sub_obs = ObservationSet::new(Arc::new(sub), discrete.iter().map(|&l| obs.values(l).to_vec()).collect())?;
            estimate_hybrid(path.as_ref().expect("fine path"), &sub_obs, [c0, c1], req)
        }
    }
}

struct Aggregate {
    mean: f64,
    mse: f64,
    bias_sq: f64,
    variance: f64,
    stderr: f64,
}

fn aggregate(estimates: &[f64], truth: f64) -> Aggregate {
    let r = estimates.len() as f64;
    let m = mean(estimates);
    let sq_err: Vec<f64> = estimates.iter().map(|v| (v - truth) * (v - truth)).collect();
    let mse = mean(&sq_err);
    let centred: Vec<f64> = estimates.iter().map(|v| (v - m) * (v - m)).collect();
    let variance = mean(&centred);
    let spread: Vec<f64> = sq_err.iter().map(|e| (e - mse) * (e - mse)).collect();
    let stderr = if estimates.len() > 1 { (pairwise_sum(&spread) / (r - 1.0) / r).sqrt() } else { 0.0 };
    Aggregate { mean: m, mse, bias_sq: (m - truth) * (m - truth), variance, stderr }
}
