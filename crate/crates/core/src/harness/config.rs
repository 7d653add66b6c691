use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorMode;
use crate::models::BuiltinModelId;
use crate::rates::{ScaleBase, SmoothnessSpec};
use crate::rng::StreamId;
use crate::sampling::{async_schedule, uniform_schedule, AsyncMode, SamplingSchedule};
use crate::simulate::DEFAULT_BURN_IN;

/// How each row picks its bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum BandwidthRule {
    Continuous,
    Intermediate,
    D2,
    Explicit { h: Vec<f64> },
}

/// Observation design of a sweep row. Offsets are absolute times.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ScheduleMode {
    #[default]
    Sync,
    PhaseShift { offsets: Vec<f64> },
    Jittered { fraction: f64 },
    Staggered { offsets: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub schedule: ScheduleMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub total_time: f64,
    pub bin_width: f64,
    #[serde(default = "default_hist_dt")]
    pub dt: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
}

fn default_hist_dt() -> f64 {
    0.01
}

fn default_burn_in() -> f64 {
    DEFAULT_BURN_IN
}

fn default_tolerance() -> f64 {
    0.25
}

fn default_true() -> bool {
    true
}

fn default_estimator() -> EstimatorMode {
    EstimatorMode::Sync
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: BuiltinModelId,
    pub smoothness: SmoothnessSpec,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorMode,
    /// Evaluation point; the origin when absent.
    #[serde(default)]
    pub point: Option<Vec<f64>>,
    pub kernel_order: usize,
    pub bandwidth: BandwidthRule,
    pub sweep: Vec<SweepRow>,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Regression variable; taken from the theoretical rate when absent.
    #[serde(default)]
    pub scale: Option<ScaleBase>,
    #[serde(default)]
    pub strip_log: Option<bool>,
    /// Step of the simulated fine path. For OU without it, observations
    /// are drawn exactly at the schedule ticks.
    #[serde(default)]
    pub fine_dt: Option<f64>,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
    /// Coordinates observed continuously by the hybrid estimator.
    #[serde(default)]
    pub continuous_coords: Option<[usize; 2]>,
    #[serde(default)]
    pub histogram: Option<HistogramConfig>,
    #[serde(default = "default_tolerance")]
    pub slope_tolerance: f64,
    /// Reuse replication streams across rows.
    #[serde(default = "default_true")]
    pub common_random_numbers: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::Config(format!("need at least 2 replications, got {}", self.replications)));
        }
        if self.sweep.is_empty() {
            return Err(Error::Config("sweep is empty".into()));
        }
        if self.kernel_order == 0 {
            return Err(Error::Config("kernel order must be at least 1".into()));
        }
        if let Some(dt) = self.fine_dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("fine_dt must be positive, got {dt}")));
            }
        }
        for (i, row) in self.sweep.iter().enumerate() {
            self.row_horizon(i, row)?;
        }
        Ok(())
    }

    fn row_horizon(&self, index: usize, row: &SweepRow) -> Result<f64> {
        if row.n < 2 {
            return Err(Error::Config(format!("row {index}: n must be at least 2")));
        }
        let n = row.n as f64;
        match (row.delta, row.horizon) {
            (Some(delta), Some(t)) => {
                if matches!(row.schedule, ScheduleMode::Sync) && (t - n * delta).abs() > 1e-9 * t {
                    return Err(Error::Config(format!("row {index}: T = {t} differs from n * delta = {}", n * delta)));
                }
                Ok(t)
            }
            (Some(delta), None) if delta > 0.0 => Ok(n * delta),
            (None, Some(t)) if t > 0.0 => Ok(t),
            _ => Err(Error::Config(format!("row {index}: give a positive delta or T"))),
        }
    }

    /// The schedule of sweep row `index` for a `d`-dimensional model.
    pub fn build_schedule(&self, index: usize, row: &SweepRow, d: usize) -> Result<SamplingSchedule> {
        let horizon = self.row_horizon(index, row)?;
        match &row.schedule {
            ScheduleMode::Sync => uniform_schedule(row.n, row.delta.unwrap_or(horizon / row.n as f64), d),
            ScheduleMode::PhaseShift { offsets } => {
                async_schedule(row.n, horizon, &AsyncMode::PhaseShift { offsets: offsets.clone() }, d)
            }
            ScheduleMode::Staggered { offsets } => {
                async_schedule(row.n, horizon, &AsyncMode::Staggered { offsets: offsets.clone() }, d)
            }
            ScheduleMode::Jittered { fraction } => async_schedule(
                row.n,
                horizon,
                &AsyncMode::Jittered { fraction: *fraction, stream: StreamId::new(self.seed, u64::MAX - 1 - index as u64) },
                d,
            ),
        }
    }
}
