use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use invdens::estimators::{estimate_async, estimate_continuous, estimate_hybrid, estimate_sync};
use invdens::harness::{render_svg, run_experiment, summarize};
use invdens::rates::{
    bandwidth_continuous, bandwidth_d2, bandwidth_intermediate, classify_regime, harmonic_means, rate_exponent,
    RateOutcome, Regime, SamplingInputs,
};
use invdens::sampling::{async_schedule, uniform_schedule};
use invdens::simulate::{observe, observe_exact_ou, ou_exact_fine_path, simulate_path, DEFAULT_BURN_IN, FINE_STEPS_PER_MESH};
use invdens::{
    AsyncMode, BandwidthVector, BuiltinModelId, EstimateRequest, EstimatorMode, ExperimentConfig, FinePath, KernelSpec,
    ObservationSet, SamplingSchedule, SmoothnessSpec, StreamId,
};

#[derive(Parser)]
#[command(name = "invdens", version, about = "Invariant density estimation for discretely observed diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleKind {
    Sync,
    Phase,
    Jitter,
    Staggered,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Ou,
    HyperbolicLangevin,
}

#[derive(Subcommand)]
enum Command {
    /// Print the moments of the order-M kernel as CSV.
    KernelCheck {
        #[arg(long)]
        order: usize,
        /// Largest moment index printed (defaults to the order).
        #[arg(long)]
        max_l: Option<usize>,
    },
    /// Simulate a stationary path and write its observations as CSV.
    Simulate {
        #[arg(long, value_enum, default_value = "ou")]
        model: ModelKind,
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// OU mean reversion.
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        /// OU noise scale.
        #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
        sigma: f64,
        /// OU equicorrelation of the driving noise.
        #[arg(long)]
        rho: Option<f64>,
        /// Hyperbolic potential scale.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, value_enum, default_value = "sync")]
        schedule: ScheduleKind,
        /// Schedule JSON `{"T": .., "grids": [[..]]}`; overrides --schedule.
        #[arg(long)]
        schedule_file: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long = "T")]
        horizon: Option<f64>,
        /// Per-coordinate offsets for phase or staggered schedules.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        offsets: Option<Vec<f64>>,
        /// Jitter as a fraction of T/n.
        #[arg(long, default_value_t = 0.25)]
        fraction: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Fine simulation step (Euler–Maruyama, or the exact OU grid).
        #[arg(long)]
        fine_dt: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the fine path (for the hybrid and continuous modes).
        #[arg(long)]
        path_out: Option<PathBuf>,
        /// Also write the schedule as JSON.
        #[arg(long)]
        schedule_out: Option<PathBuf>,
    },
    /// Estimate the invariant density at a point from an observation CSV.
    Estimate {
        /// Observation CSV (`time,x1..xd`; blank cells for missing values).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Fine path CSV for the hybrid and continuous modes.
        #[arg(long)]
        path: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        bandwidth: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value = "async")]
        mode: EstimatorMode,
        /// Observation horizon (defaults to the last tick plus the last gap).
        #[arg(long = "T")]
        horizon: Option<f64>,
        /// Continuously observed coordinates for the hybrid mode (0-based).
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        continuous: Vec<usize>,
    },
    /// Classify a sampling design and print thresholds, bandwidths and rates.
    RateCheck {
        #[arg(long, value_delimiter = ',')]
        beta: Vec<f64>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long = "T")]
        horizon: f64,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        delta_prime: f64,
        #[arg(long)]
        sync: bool,
    },
    /// Run a Monte Carlo sweep.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

type CliResult<T> = Result<T, String>;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn read(path: &PathBuf) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &PathBuf, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::KernelCheck { order, max_l } => {
            if order == 0 {
                return Err("order must be at least 1".into());
            }
            let k = KernelSpec::build(order);
            println!("l,moment");
            for l in 0..=max_l.unwrap_or(order) {
                println!("{l},{}", k.moment(l));
            }
            Ok(())
        }
        Command::Simulate {
            model,
            d,
            theta,
            sigma,
            rho,
            scale,
            schedule,
            schedule_file,
            n,
            delta,
            horizon,
            offsets,
            fraction,
            seed,
            stream,
            fine_dt,
            burn_in,
            out,
            path_out,
            schedule_out,
        } => {
            let id = match model {
                ModelKind::Ou => BuiltinModelId::Ou {
                    theta: vec![theta; d],
                    sigma: vec![sigma; d],
                    correlation: rho.map(|r| (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { r }).collect()).collect()),
                },
                ModelKind::HyperbolicLangevin => BuiltinModelId::HyperbolicLangevin { scale, dimension: d },
            };
            let model = id.build().map_err(|e| e.to_string())?;
            let stream = StreamId::new(seed, stream);
            let sched = match schedule_file {
                Some(p) => serde_json::from_str::<SamplingSchedule>(&read(&p)?).map_err(|e| e.to_string())?,
                None => build_schedule(schedule, d, n, delta, horizon, offsets, fraction, stream)?,
            };
            if sched.dimension() != d {
                return Err(format!("schedule has {} coordinates, model has {d}", sched.dimension()));
            }
            let sched = Arc::new(sched);
            let t = sched.horizon();
            let default_dt = sched.mesh_delta() / FINE_STEPS_PER_MESH;
            let (obs, path) = match (model.as_ou(), fine_dt, &path_out) {
                (Some(ou), None, None) => (observe_exact_ou(ou, Arc::clone(&sched), stream).map_err(|e| e.to_string())?, None),
                (Some(ou), dt, _) => {
                    let p = ou_exact_fine_path(ou, dt.unwrap_or(default_dt), t, stream).map_err(|e| e.to_string())?;
                    (observe(&p, Arc::clone(&sched)).map_err(|e| e.to_string())?, Some(p))
                }
                (None, dt, _) => {
                    let p = simulate_path(&model, &vec![0.0; d], dt.unwrap_or(default_dt), burn_in, t, stream)
                        .map_err(|e| e.to_string())?;
                    (observe(&p, Arc::clone(&sched)).map_err(|e| e.to_string())?, Some(p))
                }
            };
            write(&out, &obs.to_csv())?;
            if let (Some(p), Some(file)) = (&path, &path_out) {
                write(file, &p.to_csv())?;
            }
            if let Some(file) = schedule_out {
                write(&file, &serde_json::to_string(&*sched).map_err(|e| e.to_string())?)?;
            }
            eprintln!("delta_n={} delta_prime_n={} T={t}", sched.mesh_delta(), sched.asynchrony_delta_prime());
            Ok(())
        }
        Command::Estimate { input, path, point, bandwidth, order, mode, horizon, continuous } => {
            let d = point.len();
            let bw = BandwidthVector::new(bandwidth).map_err(|e| e.to_string())?;
            let req = EstimateRequest::new(point, bw, KernelSpec::build(order)).map_err(|e| e.to_string())?;
            let load_obs = || -> CliResult<ObservationSet> {
                let file = input.as_ref().ok_or("--input is required for this mode")?;
                ObservationSet::from_csv(&read(file)?, horizon).map_err(|e| e.to_string())
            };
            let load_path = || -> CliResult<FinePath> {
                let file = path.as_ref().ok_or("--path is required for this mode")?;
                FinePath::from_csv(&read(file)?).map_err(|e| e.to_string())
            };
            let (value, delta_n, delta_prime_n) = match mode {
                EstimatorMode::Sync | EstimatorMode::Async => {
                    let obs = load_obs()?;
                    let v = if matches!(mode, EstimatorMode::Sync) { estimate_sync(&obs, &req) } else { estimate_async(&obs, &req) };
                    let s = obs.schedule();
                    (v.map_err(|e| e.to_string())?, s.mesh_delta(), s.asynchrony_delta_prime())
                }
                EstimatorMode::Continuous => {
                    let p = load_path()?;
                    (estimate_continuous(&p, &req).map_err(|e| e.to_string())?, p.dt(), 0.0)
                }
                EstimatorMode::Hybrid => {
                    let p = load_path()?;
                    let obs = load_obs()?;
                    let [c0, c1] = <[usize; 2]>::try_from(continuous).map_err(|_| "--continuous takes two indices")?;
                    let discrete: Vec<usize> = (0..d).filter(|l| *l != c0 && *l != c1).collect();
                    let (sched, values) = if obs.dimension() == d {
                        let s = obs.schedule();
                        let sub = SamplingSchedule::new(s.horizon(), discrete.iter().map(|&l| s.grid(l).to_vec()).collect())
                            .map_err(|e| e.to_string())?;
                        (sub, discrete.iter().map(|&l| obs.values(l).to_vec()).collect())
                    } else {
                        (obs.schedule().clone(), (0..obs.dimension()).map(|l| obs.values(l).to_vec()).collect())
                    };
                    let sub = ObservationSet::new(Arc::new(sched), values).map_err(|e| e.to_string())?;
                    let s = sub.schedule();
                    let (dn, dp) = (s.mesh_delta(), s.asynchrony_delta_prime());
                    (estimate_hybrid(&p, &sub, [c0, c1], &req).map_err(|e| e.to_string())?, dn, dp)
                }
            };
            println!("{}", pretty(&json!({ "estimate": value, "delta_n": delta_n, "delta_prime_n": delta_prime_n })));
            Ok(())
        }
        Command::RateCheck { beta, d, horizon, n, delta, delta_prime, sync } => {
            let beta = match (d, beta.len()) {
                (Some(d), 1) => vec![beta[0]; d],
                (Some(d), k) if d != k => return Err(format!("--d {d} does not match {k} beta values")),
                _ => beta,
            };
            let spec = SmoothnessSpec::new(beta.clone(), vec![1.0; beta.len()]).map_err(|e| e.to_string())?;
            let inputs = SamplingInputs { n, delta, delta_prime, horizon, synchronous: sync };
            let verdict = classify_regime(&spec, &inputs).map_err(|e| e.to_string())?;
            let m = harmonic_means(&spec);
            let mut bandwidths = serde_json::Map::new();
            if spec.dimension() >= 3 {
                if let Ok(h) = bandwidth_continuous(&spec, horizon) {
                    bandwidths.insert("continuous".into(), json!(h.as_slice()));
                }
            } else if let Ok(h) = bandwidth_d2(&spec, horizon) {
                bandwidths.insert("d2".into(), json!(h.as_slice()));
            }
            if let Ok(h) = bandwidth_intermediate(&spec, n) {
                bandwidths.insert("intermediate".into(), json!(h.as_slice()));
            }
            let rate = |r: Regime| match rate_exponent(&spec, r) {
                RateOutcome::Rate { exponent, base, log_factor } => json!({ "exponent": exponent, "base": base, "log_factor": log_factor }),
                RateOutcome::NoTheoreticalRate => json!("no theoretical rate"),
            };
            let (cont, inter) = if spec.dimension() >= 3 {
                (Regime::ContinuousRate, Regime::Intermediate)
            } else {
                (Regime::D2Continuous, Regime::D2Intermediate)
            };
            let report = json!({
                "beta": beta,
                "d": spec.dimension(),
                "harmonic_means": m,
                "verdict": verdict.regime.as_str(),
                "binding": verdict.binding,
                "thresholds": verdict.checks,
                "bandwidths": bandwidths,
                "exponents": { "continuous": rate(cont), "intermediate": rate(inter), "verdict": rate(verdict.regime) },
            });
            println!("{}", pretty(&report));
            Ok(())
        }
        Command::Experiment { config, out, summary, plot, workers } => {
            let mut cfg = ExperimentConfig::from_json(&read(&config)?).map_err(|e| e.to_string())?;
            if workers.is_some() {
                cfg.workers = workers;
            }
            let table = run_experiment(&cfg).map_err(|e| e.to_string())?;
            write(&out, &table.to_csv())?;
            let s = summarize(&table, &cfg);
            let doc = json!({
                "fitted_slope": s.fit.as_ref().map(|f| f.slope),
                "slope_stderr": s.fit.as_ref().map(|f| f.stderr_slope),
                "theoretical_exponent": s.theoretical_exponent,
                "summary": s,
            });
            write(&summary, &pretty(&doc))?;
            if let Some(p) = plot {
                write(&p, &render_svg(&table, s.fit.as_ref(), s.strip_log))?;
            }
            for r in &s.rules {
                eprintln!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn build_schedule(
    kind: ScheduleKind,
    d: usize,
    n: Option<usize>,
    delta: Option<f64>,
    horizon: Option<f64>,
    offsets: Option<Vec<f64>>,
    fraction: f64,
    stream: StreamId,
) -> CliResult<SamplingSchedule> {
    let n = n.ok_or("--n is required")?;
    let horizon = match (horizon, delta) {
        (Some(t), _) => t,
        (None, Some(dl)) => n as f64 * dl,
        (None, None) => return Err("give --delta or --T".into()),
    };
    let step = horizon / n as f64;
    let offsets = || offsets.clone().unwrap_or_else(|| (0..d).map(|l| step * l as f64 / (2 * d) as f64).collect());
    let s = match kind {
        ScheduleKind::Sync => uniform_schedule(n, step, d),
        ScheduleKind::Phase => async_schedule(n, horizon, &AsyncMode::PhaseShift { offsets: offsets() }, d),
        ScheduleKind::Staggered => async_schedule(n, horizon, &AsyncMode::Staggered { offsets: offsets() }, d),
        ScheduleKind::Jitter => {
            let mode = AsyncMode::Jittered { fraction, stream: StreamId::new(stream.seed, u64::MAX - stream.stream) };
            async_schedule(n, horizon, &mode, d)
        }
    };
    s.map_err(|e| e.to_string())
}
