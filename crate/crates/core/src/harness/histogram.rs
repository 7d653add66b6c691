use std::collections::BTreeMap;

use super::HistogramConfig;
use crate::error::{Error, Result};
use crate::models::DiffusionModel;
use crate::rng::StreamId;
use crate::simulate::{euler_visit, ou_exact_visit};

/// Normalized occupation histogram on the lattice of cubes
/// `prod_l [k_l w, (k_l + 1) w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramDensity {
    bin_width: f64,
    dimension: usize,
    counts: BTreeMap<Vec<i64>, u64>,
    total: u64,
}

impl HistogramDensity {
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn bin_volume(&self) -> f64 {
        self.bin_width.powi(self.dimension as i32)
    }

    pub fn bin_index(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|v| (v / self.bin_width).floor() as i64).collect()
    }

    /// Density of the bin containing `x`.
    pub fn density(&self, x: &[f64]) -> f64 {
        let c = self.counts.get(&self.bin_index(x)).copied().unwrap_or(0);
        c as f64 / (self.total as f64 * self.bin_volume())
    }

    /// Occupied bins with their densities.
    pub fn bins(&self) -> impl Iterator<Item = (&[i64], f64)> + '_ {
        let norm = self.total as f64 * self.bin_volume();
        self.counts.iter().map(move |(k, c)| (k.as_slice(), *c as f64 / norm))
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn samples(&self) -> u64 {
        self.total
    }
}

/// Occupation histogram of one long stationary path: exact transitions
/// for OU, Euler–Maruyama after burn-in otherwise. Per-bin accuracy is of
/// order `total_time^{-1/2}`.
pub fn histogram_oracle(model: &DiffusionModel, cfg: &HistogramConfig, stream: StreamId) -> Result<HistogramDensity> {
    if !(cfg.bin_width > 0.0) || !(cfg.dt > 0.0) || !(cfg.total_time >= cfg.dt) {
        return Err(Error::Config("histogram needs positive bin width and dt <= total time".into()));
    }
    let d = model.dimension();
    let mut hist = HistogramDensity { bin_width: cfg.bin_width, dimension: d, counts: BTreeMap::new(), total: 0 };
    let mut key = vec![0i64; d];
    let mut record = |x: &[f64]| {
        for (k, v) in key.iter_mut().zip(x) {
            *k = (v / cfg.bin_width).floor() as i64;
        }
        match hist.counts.get_mut(&key) {
            Some(c) => *c += 1,
            None => {
                hist.counts.insert(key.clone(), 1);
            }
        }
        hist.total += 1;
    };
    match model.as_ou() {
        Some(ou) => ou_exact_visit(ou, cfg.dt, cfg.total_time, stream, &mut record)?,
        None => euler_visit(model, &vec![0.0; d], cfg.dt, cfg.burn_in, cfg.total_time, stream, &mut record)?,
    }
    Ok(hist)
}
