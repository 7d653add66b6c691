//! Kernel estimators of the invariant density of multidimensional ergodic
//! diffusions observed at discrete (synchronous or asynchronous) times,
//! plus a Monte Carlo harness measuring their empirical convergence rates.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision)]

pub mod error;
pub mod estimators;
pub mod harness;
pub mod kernels;
pub mod models;
pub mod par;
pub mod quadrature;
pub mod rates;
pub mod rng;
pub mod sampling;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use estimators::{EstimateRequest, EstimatorMode};
pub use harness::{ExperimentConfig, ResultTable};
pub use rates::{Regime, SmoothnessSpec};
pub use kernels::{BandwidthVector, KernelSpec};
pub use models::{BuiltinModelId, DiffusionModel, OrnsteinUhlenbeck};
pub use rng::StreamId;
pub use sampling::{AsyncMode, SamplingSchedule};
pub use simulate::{FinePath, ObservationSet};
