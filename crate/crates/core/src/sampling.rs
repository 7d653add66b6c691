//! Observation schedules, last-tick functions, the mesh `Delta_n` and the
//! asynchronicity measure `Delta'_n`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamId;

/// Per-coordinate observation times on `[0, T]`. Each grid is strictly
/// increasing and starts at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct SamplingSchedule {
    horizon: f64,
    grids: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ScheduleRepr {
    #[serde(rename = "T")]
    horizon: f64,
    grids: Vec<Vec<f64>>,
}

impl TryFrom<ScheduleRepr> for SamplingSchedule {
    type Error = Error;
    fn try_from(r: ScheduleRepr) -> Result<Self> {
        SamplingSchedule::new(r.horizon, r.grids)
    }
}

impl From<SamplingSchedule> for ScheduleRepr {
    fn from(s: SamplingSchedule) -> Self {
        ScheduleRepr { horizon: s.horizon, grids: s.grids }
    }
}

/// How an asynchronous schedule is generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum AsyncMode {
    /// Coordinate `l` observed at `{0} U {i T/n + o_l : i = 1..n-1}`.
    PhaseShift { offsets: Vec<f64> },
    /// Interior ticks of the uniform grid moved by `U(-f, f) T/n`.
    Jittered { fraction: f64, stream: StreamId },
    /// Coordinate `l` observed on the uniform grid plus the same grid
    /// shifted by `o_l >= 0`; `Delta'_n = max_l o_l` while `Delta_n = T/n`.
    Staggered { offsets: Vec<f64> },
}

impl SamplingSchedule {
    pub fn new(horizon: f64, grids: Vec<Vec<f64>>) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Parameter(format!("horizon must be positive, got {horizon}")));
        }
        if grids.is_empty() {
            return Err(Error::Parameter("schedule needs at least one coordinate".into()));
        }
        for (l, g) in grids.iter().enumerate() {
            if g.first() != Some(&0.0) {
                return Err(Error::Parameter(format!("grid {l} must start at 0")));
            }
            if g.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Parameter(format!("grid {l} is not strictly increasing")));
            }
            if *g.last().unwrap() > horizon {
                return Err(Error::Parameter(format!("grid {l} exceeds the horizon {horizon}")));
            }
        }
        Ok(Self { horizon, grids })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dimension(&self) -> usize {
        self.grids.len()
    }

    pub fn grid(&self, l: usize) -> &[f64] {
        &self.grids[l]
    }

    pub fn grids(&self) -> &[Vec<f64>] {
        &self.grids
    }

    /// All coordinates share one grid.
    pub fn is_synchronous(&self) -> bool {
        self.grids.windows(2).all(|w| w[0] == w[1])
    }

    /// Sorted, deduplicated union of all ticks.
    pub fn union_ticks(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.grids.iter().flatten().copied().collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }

    /// `phi_{n,l}(t)`: the latest tick of coordinate `l` not after `t`.
    pub fn last_tick(&self, l: usize, t: f64) -> Result<f64> {
        Ok(self.grids[l][self.last_tick_index(l, t)?])
    }

    pub fn last_tick_index(&self, l: usize, t: f64) -> Result<usize> {
        if l >= self.grids.len() {
            return Err(Error::Domain(format!("coordinate {l} out of range")));
        }
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Domain(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(self.grids[l].partition_point(|&x| x <= t) - 1)
    }

    /// Largest gap over all coordinates, the terminal gap to `T` included.
    pub fn mesh_delta(&self) -> f64 {
        self.grids
            .iter()
            .flat_map(|g| {
                g.windows(2)
                    .map(|w| w[1] - w[0])
                    .chain(std::iter::once(self.horizon - g[g.len() - 1]))
            })
            .fold(0.0, f64::max)
    }

    /// `sup_t max_{i,j} |phi_i(t) - phi_j(t)|`, evaluated exactly on the
    /// union grid where the last-tick vector changes.
    pub fn asynchrony_delta_prime(&self) -> f64 {
        let mut worst = 0.0f64;
        self.for_each_segment(|_, _, idx| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (l, &i) in idx.iter().enumerate() {
                let t = self.grids[l][i];
                lo = lo.min(t);
                hi = hi.max(t);
            }
            worst = worst.max(hi - lo);
        });
        worst
    }

    /// Walks the pieces `[u_k, u_{k+1})` of the union grid (the last piece
    /// ends at `T`), passing the last-tick index of every coordinate.
    pub fn for_each_segment<F>(&self, mut f: F)
    where
        F: FnMut(f64, f64, &[usize]),
    {
        let d = self.grids.len();
        let mut idx = vec![0usize; d];
        let mut start = 0.0;
        loop {
            // Next change point after `start`.
            let mut next = self.horizon;
            for l in 0..d {
                if let Some(&t) = self.grids[l].get(idx[l] + 1) {
                    next = next.min(t);
                }
            }
            f(start, next, &idx);
            if next >= self.horizon {
                break;
            }
            for l in 0..d {
                if self.grids[l].get(idx[l] + 1) == Some(&next) {
                    idx[l] += 1;
                }
            }
            start = next;
        }
    }
}

/// Every coordinate observed at `{0, delta, ..., (n-1) delta}`, `T = n delta`.
pub fn uniform_schedule(n: usize, delta: f64, d: usize) -> Result<SamplingSchedule> {
    if n == 0 || !(delta > 0.0) || d == 0 {
        return Err(Error::Parameter("uniform schedule needs n >= 1, delta > 0, d >= 1".into()));
    }
    let grid: Vec<f64> = (0..n).map(|i| i as f64 * delta).collect();
    SamplingSchedule::new(n as f64 * delta, vec![grid; d])
}

pub fn async_schedule(n: usize, horizon: f64, mode: &AsyncMode, d: usize) -> Result<SamplingSchedule> {
    if n == 0 || !(horizon > 0.0) || d == 0 {
        return Err(Error::Parameter("async schedule needs n >= 1, T > 0, d >= 1".into()));
    }
    let step = horizon / n as f64;
    let base = |i: usize| i as f64 * step;
    let grids = match mode {
        AsyncMode::PhaseShift { offsets } => {
            check_offsets(offsets, d, step, true)?;
            offsets
                .iter()
                .map(|&o| {
                    std::iter::once(0.0)
                        .chain((1..n).map(|i| base(i) + o).filter(|&t| t > 0.0 && t <= horizon))
                        .collect()
                })
                .collect()
        }
        AsyncMode::Jittered { fraction, stream } => {
            if !(0.0..=0.49).contains(fraction) {
                return Err(Error::Parameter(format!("jitter fraction {fraction} outside [0, 0.49]")));
            }
            let mut rng = stream.rng();
            (0..d)
                .map(|_| {
                    let mut g: Vec<f64> = std::iter::once(0.0)
                        .chain((1..n).map(|i| base(i) + rng.gen_range(-1.0..=1.0) * fraction * step))
                        .collect();
                    g[1..].sort_by(f64::total_cmp);
                    g
                })
                .collect()
        }
        AsyncMode::Staggered { offsets } => {
            check_offsets(offsets, d, step, false)?;
            offsets
                .iter()
                .map(|&o| {
                    let mut g = Vec::with_capacity(2 * n);
                    for i in 0..n {
                        g.push(base(i));
                        if o > 0.0 {
                            g.push(base(i) + o);
                        }
                    }
                    g
                })
                .collect()
        }
    };
    SamplingSchedule::new(horizon, grids)
}

fn check_offsets(offsets: &[f64], d: usize, step: f64, allow_negative: bool) -> Result<()> {
    if offsets.len() != d {
        return Err(Error::Parameter(format!("expected {d} offsets, got {}", offsets.len())));
    }
    for &o in offsets {
        let ok = o.abs() < step && (allow_negative || o >= 0.0);
        if !ok {
            return Err(Error::Parameter(format!("offset {o} out of range for step {step}")));
        }
    }
    Ok(())
}

pub fn last_tick(s: &SamplingSchedule, l: usize, t: f64) -> Result<f64> {
    s.last_tick(l, t)
}

pub fn mesh_delta(s: &SamplingSchedule) -> f64 {
    s.mesh_delta()
}

pub fn asynchrony_delta_prime(s: &SamplingSchedule) -> f64 {
    s.asynchrony_delta_prime()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ab() -> SamplingSchedule {
        SamplingSchedule::new(1.5, vec![vec![0.0, 1.0], vec![0.0, 0.5]]).unwrap()
    }

    #[test]
    fn uniform_examples() {
        let s = uniform_schedule(3, 0.5, 2).unwrap();
        assert_eq!(s.grid(0), &[0.0, 0.5, 1.0]);
        assert_eq!(s.grid(1), &[0.0, 0.5, 1.0]);
        assert_eq!(s.horizon(), 1.5);
        assert!(s.is_synchronous());
        let s = uniform_schedule(1, 1.0, 3).unwrap();
        assert_eq!(s.grid(2), &[0.0]);
        assert_eq!(s.horizon(), 1.0);
        assert_eq!(uniform_schedule(4, 0.25, 2).unwrap().mesh_delta(), 0.25);
    }

    #[test]
    fn last_tick_examples() {
        let s = SamplingSchedule::new(1.0, vec![vec![0.0, 0.4, 0.8]]).unwrap();
        assert_eq!(last_tick(&s, 0, 0.75).unwrap(), 0.4);
        assert_eq!(last_tick(&s, 0, 0.4).unwrap(), 0.4);
        assert_eq!(last_tick(&s, 0, 0.0).unwrap(), 0.0);
        assert!(matches!(last_tick(&s, 0, 1.01), Err(Error::Domain(_))));
        assert!(matches!(last_tick(&s, 0, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn mesh_and_asynchrony_examples() {
        let s = ab();
        assert_eq!(mesh_delta(&s), 1.0);
        assert_eq!(asynchrony_delta_prime(&s), 0.5);
        let single = SamplingSchedule::new(2.0, vec![vec![0.0], vec![0.0]]).unwrap();
        assert_eq!(single.mesh_delta(), 2.0);
        assert_eq!(uniform_schedule(10, 0.1, 3).unwrap().asynchrony_delta_prime(), 0.0);
    }

    #[test]
    fn phase_shift_schedule() {
        let s = async_schedule(2, 1.5, &AsyncMode::PhaseShift { offsets: vec![0.25, -0.25] }, 2).unwrap();
        assert_eq!(s.grid(0), &[0.0, 1.0]);
        assert_eq!(s.grid(1), &[0.0, 0.5]);
        assert_eq!(s.asynchrony_delta_prime(), 0.5);
        assert!(async_schedule(2, 1.5, &AsyncMode::PhaseShift { offsets: vec![0.0, 0.8] }, 2).is_err());
        assert!(async_schedule(2, 1.5, &AsyncMode::PhaseShift { offsets: vec![0.0] }, 2).is_err());
    }

    #[test]
    fn staggered_schedule_hits_requested_asynchrony() {
        let n = 40;
        let t = 10.0;
        for o in [0.0, t / (4.0 * n as f64), t / (2.0 * n as f64)] {
            let s = async_schedule(n, t, &AsyncMode::Staggered { offsets: vec![0.0, o, o] }, 3).unwrap();
            assert!((s.mesh_delta() - t / n as f64).abs() < 1e-12);
            assert!((s.asynchrony_delta_prime() - o).abs() < 1e-12);
        }
        assert!(async_schedule(4, 1.0, &AsyncMode::Staggered { offsets: vec![0.0, -0.1] }, 2).is_err());
    }

    #[test]
    fn zero_jitter_is_uniform() {
        let mode = AsyncMode::Jittered { fraction: 0.0, stream: StreamId::new(1, 2) };
        let s = async_schedule(8, 2.0, &mode, 3).unwrap();
        assert_eq!(s, uniform_schedule(8, 0.25, 3).unwrap());
        assert!(async_schedule(8, 2.0, &AsyncMode::Jittered { fraction: 0.5, stream: StreamId::new(1, 2) }, 3).is_err());
    }

    #[test]
    fn jitter_is_deterministic() {
        let mode = AsyncMode::Jittered { fraction: 0.3, stream: StreamId::new(11, 5) };
        let a = async_schedule(50, 5.0, &mode, 3).unwrap();
        let b = async_schedule(50, 5.0, &mode, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = ab();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"T":1.5,"grids":[[0.0,1.0],[0.0,0.5]]}"#);
        assert_eq!(serde_json::from_str::<SamplingSchedule>(&text).unwrap(), s);
        assert!(serde_json::from_str::<SamplingSchedule>(r#"{"T":1.0,"grids":[[0.1,0.5]]}"#).is_err());
        assert!(serde_json::from_str::<SamplingSchedule>(r#"{"T":1.0,"grids":[[0.0,0.5,0.5]]}"#).is_err());
        assert!(serde_json::from_str::<SamplingSchedule>(r#"{"T":1.0,"grids":[[0.0,1.5]]}"#).is_err());
    }

    #[test]
    fn segments_cover_horizon() {
        let s = ab();
        let mut seen = Vec::new();
        s.for_each_segment(|a, b, idx| seen.push((a, b, idx.to_vec())));
        assert_eq!(
            seen,
            vec![(0.0, 0.5, vec![0, 0]), (0.5, 1.0, vec![0, 1]), (1.0, 1.5, vec![1, 1])]
        );
    }

    proptest! {
        #[test]
        fn jittered_measures(seed in 0u64..10_000, n in 2usize..60, frac in 0.0f64..0.49, d in 2usize..5) {
            let t = 3.0;
            let s = async_schedule(n, t, &AsyncMode::Jittered { fraction: frac, stream: StreamId::new(seed, 0) }, d).unwrap();
            let mesh = s.mesh_delta();
            let dp = s.asynchrony_delta_prime();
            let step = t / n as f64;
            prop_assert!(dp <= mesh);
            prop_assert!(mesh >= (1.0 - 2.0 * frac) * step - 1e-12);
            // terminal gap can add up to frac * step
            prop_assert!(mesh <= (1.0 + 2.0 * frac) * step + 1e-12);
            prop_assert_eq!(dp == 0.0, s.is_synchronous());
        }

        #[test]
        fn last_tick_monotone_and_idempotent(seed in 0u64..1000, a in 0.0f64..3.0, b in 0.0f64..3.0) {
            let s = async_schedule(20, 3.0, &AsyncMode::Jittered { fraction: 0.4, stream: StreamId::new(seed, 1) }, 2).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for l in 0..2 {
                prop_assert!(s.last_tick(l, lo).unwrap() <= s.last_tick(l, hi).unwrap());
                let tick = s.last_tick(l, hi).unwrap();
                prop_assert_eq!(s.last_tick(l, tick).unwrap(), tick);
            }
        }
    }
}
