//! Experiment orchestration: ensembles, g0 sweeps, validation runs and output files.
//!
//! Output files in the output directory:
//!
//! - `resolved_config.toml`: the input with every default filled in
//! - `lifetime_table.csv`: one row per g0, columns [`crate::stats::LIFETIME_COLUMNS`]
//! - `events_g0_<g0>.csv`: per-trajectory outcome, columns [`EVENT_COLUMNS`]
//! - `fit_report.txt`: both scaling fits as `key = value` lines
//! - `traj_g0_<g0>_<index>.csv`: trajectory records when `write_records` is set
//! - `classical.csv`, `lyapunov.txt`, `master_moments.csv`, `reconstruct_report.txt`
//!
//! Every trajectory draws from its own `(seed, index)` stream and results are
//! sorted by index before aggregation, so the output bytes do not depend on the
//! worker count.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use crate::classical::{
    self, chaotic_launch_point, integrate_deterministic, max_lyapunov, ClassicalState, LangevinStepper, LyapunovSettings,
    NoiseSettings, DEFAULT_DT,
};
use crate::config::{EngineKind, ExperimentConfig, InitialKind, InitialSection};
use crate::engines::{drive, Basis, Control, Trajectory};
use crate::error::{Error, Result};
use crate::fock_ops::{StateVector, C64};
use crate::master::{bootstrap_trace_distance, integrate_master, reconstruct_density, DensityMatrix, MasterOptions, MasterRun};
use crate::model::{build_hamiltonian, mode_means, PhasePoint, SystemParams};
use crate::moving_basis::{to_fixed_basis, FrameState};
use crate::record::{RecordHeader, TrajectoryRecord};
use crate::stats::{
    calibrate_thresholds, fit_report, fit_scaling, lifetime_table_header, lifetime_table_row, mean_lifetime,
    periodic_launch_point, read_lifetime_table, DetectorConfig, FitResult, LifetimeRow, OnlineDetector, ScalingModel,
    TransitionEvent,
};

pub const EVENT_COLUMNS: [&str; 7] = ["index", "status", "direction", "tau_transition", "window_start", "window_end", "tau_end"];

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "OPTOMECH_WORKERS";

pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Outcome of one ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub index: u64,
    /// Every confirmed transition, in time order.
    pub events: Vec<TransitionEvent>,
    /// Last time reached.
    pub tau_end: f64,
    /// Set when the trajectory failed; such runs are invalid, never censored.
    pub failure: Option<String>,
}

impl Member {
    pub fn first_escape(&self) -> Option<TransitionEvent> {
        self.events
            .iter()
            .copied()
            .find(|e| e.direction == crate::stats::Direction::ChaoticToRegular)
    }
}

/// Everything one ensemble needs besides the trajectory index.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub kind: EngineKind,
    pub params: SystemParams,
    pub config: ExperimentConfig,
    pub detector: DetectorConfig,
    /// Directory for per-trajectory records, if they are written.
    pub record_dir: Option<PathBuf>,
}

/// Detector thresholds from the classical attractors of `params`, unless the
/// config overrides them.
pub fn detector_for(cfg: &ExperimentConfig, params: &SystemParams) -> Result<DetectorConfig> {
    if let Some(d) = cfg.detector {
        return Ok(d);
    }
    let cal = calibrate_thresholds(params, &ClassicalState::origin(), &periodic_launch_point(), DEFAULT_DT)?;
    Ok(cal.detector)
}

pub fn initial_classical(init: &InitialSection, params: &SystemParams, dt: f64) -> Result<ClassicalState> {
    match init.kind {
        InitialKind::ChaoticLaunch => chaotic_launch_point(params, dt),
        InitialKind::Origin => Ok(ClassicalState::origin()),
        InitialKind::Periodic => Ok(periodic_launch_point()),
        InitialKind::Point => Ok(ClassicalState::new(init.q, init.p, C64::new(init.alpha_re, init.alpha_im))),
        InitialKind::Fock => Err(Error::Config {
            line: 0,
            message: "a Fock initial state has no classical counterpart".into(),
        }),
    }
}

/// Initial quantum state: a coherent state at the classical point's means, or
/// a Fock product state.
pub fn initial_frame(cfg: &ExperimentConfig, params: &SystemParams) -> Result<FrameState> {
    let hilbert = cfg.engine.hilbert()?;
    let init = &cfg.initial;
    if init.kind == InitialKind::Fock {
        let psi = StateVector::fock(hilbert, init.fock[0], init.fock[1])?;
        return Ok(FrameState::fixed(&psi));
    }
    let c = initial_classical(init, params, cfg.engine.dt)?;
    let (ma, mb) = mode_means(
        &PhasePoint {
            q: c.q,
            p: c.p,
            alpha: c.alpha,
            tau: 0.0,
        },
        params,
    );
    match cfg.engine.basis() {
        Basis::Moving { .. } => Ok(FrameState::coherent(hilbert, ma, mb)),
        Basis::Fixed => {
            let psi = StateVector::coherent(hilbert, ma, mb);
            Ok(FrameState::fixed(&psi))
        }
    }
}

fn record_path(dir: &Path, g0: f64, index: u64) -> PathBuf {
    dir.join(format!("traj_g0_{g0}_{index}.csv"))
}

fn write_record(rec: &TrajectoryRecord, path: &Path) -> Result<()> {
    let f = fs::File::create(path)?;
    rec.write_csv(std::io::BufWriter::new(f))
}

fn run_langevin_member(spec: &EnsembleSpec, index: u64) -> Result<Member> {
    let cfg = &spec.config;
    let dt = cfg.engine.dt;
    let init = initial_classical(&cfg.initial, &spec.params, dt)?;
    let noise = NoiseSettings {
        seed: cfg.run.seed,
        mechanical_noise_on: cfg.engine.noise && cfg.engine.mechanical_noise,
        optical_noise_on: cfg.engine.noise && cfg.engine.optical_noise,
    };
    let mut stepper = LangevinStepper::new(init, spec.params, noise, index, dt);
    let mut det = OnlineDetector::new(spec.detector)?;
    let mut rec = spec.record_dir.as_ref().map(|_| {
        let mut h = RecordHeader::new("langevin", spec.params, dt)
            .with("stride", cfg.run.sample_every)
            .with("mechanical_noise", noise.mechanical_noise_on)
            .with("optical_noise", noise.optical_noise_on);
        h.seed = Some(noise.seed);
        h.trajectory = index;
        TrajectoryRecord::new(h)
    });
    let total = (cfg.run.horizon / dt).round() as u64;
    let stride = cfg.run.sample_every as u64;
    let s0 = stepper.state().sample();
    det.push(s0.tau, s0.q);
    if let Some(r) = rec.as_mut() {
        r.push(s0);
    }
    let mut tau_end = 0.0;
    let mut failure = None;
    for k in 1..=total {
        match stepper.step() {
            Ok(s) => {
                tau_end = s.tau;
                if k % stride == 0 {
                    if let Some(r) = rec.as_mut() {
                        r.push(s.sample());
                    }
                    if det.push(s.tau, s.q).is_some() && cfg.run.early_stop {
                        break;
                    }
                }
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    if let (Some(r), Some(dir)) = (&rec, &spec.record_dir) {
        write_record(r, &record_path(dir, spec.params.g0, index))?;
    }
    Ok(Member {
        index,
        events: det.events().to_vec(),
        tau_end,
        failure,
    })
}

fn run_quantum_member(spec: &EnsembleSpec, index: u64) -> Result<Member> {
    let cfg = &spec.config;
    let init = initial_frame(cfg, &spec.params)?;
    let mut traj = Trajectory::new(
        init,
        spec.params,
        cfg.engine.engine_config(spec.kind),
        cfg.engine.basis(),
        cfg.run.seed,
        index,
    )?;
    let mut det = OnlineDetector::new(spec.detector)?;
    let mut rec = spec.record_dir.as_ref().map(|_| TrajectoryRecord::new(traj.header()));
    let early = cfg.run.early_stop;
    let res = drive(&mut traj, cfg.run.horizon, cfg.run.sample_every, |s| {
        if let Some(r) = rec.as_mut() {
            r.push(*s);
        }
        if det.push(s.tau, s.q).is_some() && early {
            Control::Stop
        } else {
            Control::Continue
        }
    });
    if let (Some(r), Some(dir)) = (&rec, &spec.record_dir) {
        write_record(r, &record_path(dir, spec.params.g0, index))?;
    }
    Ok(Member {
        index,
        events: det.events().to_vec(),
        tau_end: traj.tau(),
        failure: res.err().map(|e| e.to_string()),
    })
}

/// Runs one member, converting errors and panics into an invalid outcome.
pub fn run_member(spec: &EnsembleSpec, index: u64) -> Member {
    let out = catch_unwind(AssertUnwindSafe(|| match spec.kind {
        EngineKind::Langevin => run_langevin_member(spec, index),
        EngineKind::Qsd | EngineKind::Jump => run_quantum_member(spec, index),
        k => Err(Error::InvalidArgument(format!("engine '{}' has no ensemble mode", k.as_str()))),
    }));
    match out {
        Ok(Ok(m)) => m,
        Ok(Err(e)) => Member {
            index,
            events: Vec::new(),
            tau_end: 0.0,
            failure: Some(e.to_string()),
        },
        Err(p) => Member {
            index,
            events: Vec::new(),
            tau_end: 0.0,
            failure: Some(match p.downcast_ref::<&str>() {
                Some(s) => format!("panic: {s}"),
                None => match p.downcast_ref::<String>() {
                    Some(s) => format!("panic: {s}"),
                    None => "panic".into(),
                },
            }),
        },
    }
}

/// Maps `f` over `0..n` on at most `workers` threads, results in index order.
pub fn par_map<T: Send, F: Fn(u64) -> T + Sync + Send>(n: u64, workers: usize, f: F) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if workers > 1 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                return pool.install(|| (0..n).into_par_iter().map(&f).collect());
            }
        }
    }
    let _ = workers;
    (0..n).map(f).collect()
}

pub fn run_ensemble(spec: &EnsembleSpec, workers: usize) -> Vec<Member> {
    let mut out = par_map(spec.config.run.ensemble_size as u64, workers, |k| run_member(spec, k));
    out.sort_by_key(|m| m.index);
    out
}

/// Lifetime row from an ensemble; invalid runs are excluded and counted.
pub fn lifetime_row(g0: f64, members: &[Member], horizon_tau: f64) -> Result<LifetimeRow> {
    let valid: Vec<Option<TransitionEvent>> = members
        .iter()
        .filter(|m| m.failure.is_none())
        .map(|m| m.first_escape())
        .collect();
    let n_invalid = members.len() - valid.len();
    if valid.is_empty() {
        return Err(Error::NumericalAbort {
            tau: 0.0,
            reason: format!("every trajectory at g0 = {g0} failed"),
        });
    }
    Ok(LifetimeRow {
        g0,
        estimate: mean_lifetime(&valid, horizon_tau)?,
        n_invalid,
    })
}

pub fn events_csv(members: &[Member]) -> String {
    let mut s = EVENT_COLUMNS.join(",");
    s.push('\n');
    for m in members {
        let status = if m.failure.is_some() { "invalid" } else { "ok" };
        if m.events.is_empty() {
            let _ = writeln!(s, "{},{status},,,,,{:?}", m.index, m.tau_end);
        }
        for e in &m.events {
            let _ = writeln!(
                s,
                "{},{status},{},{:?},{:?},{:?},{:?}",
                m.index,
                e.direction.as_str(),
                e.tau_transition,
                e.confidence_window.0,
                e.confidence_window.1,
                m.tau_end
            );
        }
    }
    s
}

fn failures_log(members: &[Member]) -> String {
    let mut s = String::new();
    for m in members {
        if let Some(f) = &m.failure {
            let _ = writeln!(s, "trajectory {}: {f}", m.index);
        }
    }
    s
}

/// Results of a sweep over g0.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<LifetimeRow>,
    pub fits: Vec<FitResult>,
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn parse_numeric_rows(text: &str) -> Vec<(f64, String)> {
    text.lines()
        .skip(1)
        .filter_map(|l| {
            let g = l.split(',').next()?.parse::<f64>().ok()?;
            Some((g, l.to_string()))
        })
        .collect()
}

/// Runs one ensemble per g0, flushing the lifetime table after each, then fits
/// both scaling models. A directory holding a table from the same resolved
/// config resumes where it stopped.
pub fn run_sweep(cfg: &ExperimentConfig, kind: EngineKind, workers: usize, out_dir: &Path) -> Result<SweepReport> {
    if !matches!(kind, EngineKind::Langevin | EngineKind::Qsd | EngineKind::Jump) {
        return Err(Error::Config {
            line: 0,
            message: format!("sweeps need engine langevin, qsd or jump, got '{}'", kind.as_str()),
        });
    }
    fs::create_dir_all(out_dir)?;
    let resolved = cfg.resolved_toml()?;
    let echo = out_dir.join("resolved_config.toml");
    let table_path = out_dir.join("lifetime_table.csv");
    let resumable = fs::read_to_string(&echo).map_or(false, |old| old == resolved);
    let mut done: Vec<(f64, String)> = if resumable {
        fs::read_to_string(&table_path).map(|t| parse_numeric_rows(&t)).unwrap_or_default()
    } else {
        Vec::new()
    };
    write_atomic(&echo, &resolved)?;
    let all = cfg.resolved_params()?;
    let detector = detector_for(cfg, &all[0])?;
    let mut rows_text: Vec<(f64, String)> = Vec::new();
    let mut rows = Vec::new();
    for params in &all {
        let g0 = params.g0;
        if let Some(pos) = done.iter().position(|(g, _)| *g == g0) {
            let (_, line) = done.remove(pos);
            log::info!("g0 = {g0}: reusing flushed row");
            rows_text.push((g0, line));
            continue;
        }
        log::info!("g0 = {g0}: {} {} trajectories", cfg.run.ensemble_size, kind.as_str());
        let record_dir = cfg.run.write_records.then(|| out_dir.to_path_buf());
        let spec = EnsembleSpec {
            kind,
            params: *params,
            config: cfg.clone(),
            detector,
            record_dir,
        };
        let members = run_ensemble(&spec, workers);
        write_atomic(&out_dir.join(format!("events_g0_{g0}.csv")), &events_csv(&members))?;
        let fails = failures_log(&members);
        if !fails.is_empty() {
            log::warn!("g0 = {g0}: {} invalid trajectories", fails.lines().count());
            write_atomic(&out_dir.join(format!("failures_g0_{g0}.log")), &fails)?;
        }
        let row = lifetime_row(g0, &members, cfg.run.horizon)?;
        rows.push(row);
        rows_text.push((g0, lifetime_table_row(&row)));
        let mut table = lifetime_table_header();
        table.push('\n');
        for (_, l) in &rows_text {
            table.push_str(l);
            table.push('\n');
        }
        write_atomic(&table_path, &table)?;
    }
    let table = fs::read_to_string(&table_path)?;
    let points: Vec<(f64, f64)> = read_lifetime_table(&table)?.into_iter().map(|(g, t, _)| (g, t)).collect();
    let mut fits = Vec::new();
    if points.len() >= 3 {
        for model in [ScalingModel::Superpersistent, ScalingModel::Powerlaw] {
            match fit_scaling(&points, model) {
                Ok(f) => fits.push(f),
                Err(e) => log::warn!("{} fit failed: {e}", model.as_str()),
            }
        }
        write_atomic(&out_dir.join("fit_report.txt"), &fit_report(&fits, &points))?;
    }
    Ok(SweepReport { rows, fits })
}

/// Deterministic trajectory plus the Lyapunov exponent from the same start.
pub fn run_classical(cfg: &ExperimentConfig, out_dir: &Path) -> Result<String> {
    fs::create_dir_all(out_dir)?;
    write_atomic(&out_dir.join("resolved_config.toml"), &cfg.resolved_toml()?)?;
    let mut report = String::new();
    for params in cfg.resolved_params()? {
        let dt = cfg.engine.dt;
        let init = initial_classical(&cfg.initial, &params, dt)?;
        let rec = integrate_deterministic(&init, &params, cfg.run.horizon, dt, cfg.run.sample_every)?;
        let name = if cfg.run.sweep.is_some() {
            format!("classical_g0_{}.csv", params.g0)
        } else {
            "classical.csv".to_string()
        };
        write_record(&rec, &out_dir.join(name))?;
        let ly = max_lyapunov(
            &params,
            &init,
            &LyapunovSettings {
                dt,
                ..LyapunovSettings::default()
            },
        )?;
        let _ = writeln!(report, "g0 = {:?}", params.g0);
        let _ = writeln!(report, "lyapunov.exponent = {:?}", ly.exponent);
        let _ = writeln!(report, "lyapunov.stderr = {:?}", ly.stderr);
        let _ = writeln!(report, "lyapunov.blocks = {}", ly.blocks);
        let _ = writeln!(report, "q_rms = {:?}", classical::rms(&rec.qs()));
    }
    write_atomic(&out_dir.join("lyapunov.txt"), &report)?;
    Ok(report)
}

/// Initial density matrix for master-equation and reconstruction runs.
pub fn initial_density_state(cfg: &ExperimentConfig, params: &SystemParams) -> Result<StateVector> {
    let hilbert = cfg.engine.hilbert()?;
    let fs = initial_frame(cfg, params)?;
    to_fixed_basis(&fs, hilbert, f64::INFINITY)
}

pub fn run_master(cfg: &ExperimentConfig, out_dir: &Path) -> Result<MasterRun> {
    fs::create_dir_all(out_dir)?;
    write_atomic(&out_dir.join("resolved_config.toml"), &cfg.resolved_toml()?)?;
    let params = cfg.resolved_params()?[0];
    let hilbert = cfg.engine.hilbert()?;
    let h = build_hamiltonian(&params, &hilbert, None)?;
    let psi = initial_density_state(cfg, &params)?;
    let run = integrate_master(
        &DensityMatrix::pure(&psi),
        &params,
        &hilbert,
        &h,
        cfg.run.horizon,
        cfg.engine.dt,
        MasterOptions {
            sample_every: cfg.run.sample_every,
            keep_states: false,
        },
    )?;
    let mut buf = Vec::new();
    run.write_csv(&mut buf)?;
    fs::write(out_dir.join("master_moments.csv"), buf)?;
    Ok(run)
}

/// Fixed-basis states of each ensemble member at the requested times.
pub fn ensemble_states(
    cfg: &ExperimentConfig,
    kind: EngineKind,
    params: &SystemParams,
    times: &[f64],
    workers: usize,
) -> Result<Vec<Vec<StateVector>>> {
    let hilbert = cfg.engine.hilbert()?;
    let dt = cfg.engine.dt;
    let marks: Vec<u64> = times.iter().map(|t| (t / dt).round() as u64).collect();
    let per: Vec<Result<Vec<StateVector>>> = par_map(cfg.run.ensemble_size as u64, workers, |k| {
        let init = initial_frame(cfg, params)?;
        let mut traj = Trajectory::new(init, *params, cfg.engine.engine_config(kind), cfg.engine.basis(), cfg.run.seed, k)?;
        let mut out = Vec::with_capacity(marks.len());
        for &m in &marks {
            while traj.steps() < m {
                traj.step()?;
            }
            let mut psi = to_fixed_basis(traj.frame(), hilbert, f64::INFINITY)?;
            psi.normalize();
            out.push(psi);
        }
        Ok(out)
    });
    let mut by_time = vec![Vec::with_capacity(per.len()); times.len()];
    for r in per {
        for (slot, psi) in by_time.iter_mut().zip(r?) {
            slot.push(psi);
        }
    }
    Ok(by_time)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionCheck {
    pub tau: f64,
    pub trace_distance: f64,
    pub monte_carlo_scale: f64,
}

impl ReconstructionCheck {
    /// Agreement within five Monte Carlo scales.
    pub fn passes(&self) -> bool {
        self.trace_distance < 5.0 * self.monte_carlo_scale
    }
}

/// Ensemble density matrices against the master equation at each time.
pub fn run_reconstruct(cfg: &ExperimentConfig, kind: EngineKind, workers: usize, out_dir: &Path) -> Result<Vec<ReconstructionCheck>> {
    let rc = cfg.reconstruct.clone().ok_or_else(|| Error::Config {
        line: 0,
        message: "missing required table [reconstruct]".into(),
    })?;
    fs::create_dir_all(out_dir)?;
    write_atomic(&out_dir.join("resolved_config.toml"), &cfg.resolved_toml()?)?;
    let params = cfg.resolved_params()?[0];
    let hilbert = cfg.engine.hilbert()?;
    let h = build_hamiltonian(&params, &hilbert, None)?;
    let psi0 = initial_density_state(cfg, &params)?;
    let dt = cfg.engine.dt;
    let horizon = rc.times.iter().cloned().fold(0.0, f64::max);
    let master = integrate_master(
        &DensityMatrix::pure(&psi0),
        &params,
        &hilbert,
        &h,
        horizon,
        dt,
        MasterOptions {
            sample_every: 1,
            keep_states: true,
        },
    )?;
    let states = ensemble_states(cfg, kind, &params, &rc.times, workers)?;
    let mut checks = Vec::new();
    let mut report = String::new();
    for (t, ens) in rc.times.iter().zip(&states) {
        let rho = reconstruct_density(ens)?;
        let exact = master.state_at(*t).ok_or(Error::EmptyEnsemble)?;
        let c = ReconstructionCheck {
            tau: *t,
            trace_distance: rho.trace_distance(exact)?,
            monte_carlo_scale: bootstrap_trace_distance(ens, rc.bootstrap_resamples, cfg.run.seed)?,
        };
        let _ = writeln!(report, "tau.{t:?}.trace_distance = {:?}", c.trace_distance);
        let _ = writeln!(report, "tau.{t:?}.monte_carlo_scale = {:?}", c.monte_carlo_scale);
        let _ = writeln!(report, "tau.{t:?}.pass = {}", c.passes());
        checks.push(c);
    }
    write_atomic(&out_dir.join("reconstruct_report.txt"), &report)?;
    Ok(checks)
}

/// Fit report for an existing lifetime table.
pub fn run_fit(table: &Path, out_dir: &Path) -> Result<Vec<FitResult>> {
    let text = fs::read_to_string(table).map_err(|e| Error::Config {
        line: 0,
        message: format!("cannot read {}: {e}", table.display()),
    })?;
    let points: Vec<(f64, f64)> = read_lifetime_table(&text)?.into_iter().map(|(g, t, _)| (g, t)).collect();
    let fits = vec![
        fit_scaling(&points, ScalingModel::Superpersistent)?,
        fit_scaling(&points, ScalingModel::Powerlaw)?,
    ];
    fs::create_dir_all(out_dir)?;
    let mut f = fs::File::create(out_dir.join("fit_report.txt"))?;
    f.write_all(fit_report(&fits, &points).as_bytes())?;
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn failures_are_invalid_not_censored() {
        let members = vec![
            Member {
                index: 0,
                events: Vec::new(),
                tau_end: 10.0,
                failure: None,
            },
            Member {
                index: 1,
                events: Vec::new(),
                tau_end: 3.0,
                failure: Some("boom".into()),
            },
        ];
        let row = lifetime_row(0.1, &members, 10.0).unwrap();
        assert!(lifetime_row(0.1, &members[1..], 10.0).is_err());
        assert_eq!(row.n_invalid, 1);
        assert_eq!(row.estimate.n_censored, 1);
        assert_eq!(row.estimate.n_observed, 0);
    }

    #[test]
    fn bad_truncation_becomes_an_invalid_member() {
        let c = cfg("[system]\npreset = \"bakemeier_chaos\"\ng0 = 0.1\n[engine]\ntruncation = [2, 2]\ntruncation_alarm = 1e-9\n[run]\nhorizon = 1.0\nseed = 1\n");
        let spec = EnsembleSpec {
            kind: EngineKind::Qsd,
            params: c.resolved_params().unwrap()[0],
            detector: DetectorConfig::from_attractors(0.9, 1.9).unwrap(),
            config: c,
            record_dir: None,
        };
        let m = run_member(&spec, 0);
        assert!(m.failure.is_some());
    }
}
