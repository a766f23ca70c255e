//! `optomech`: runs classical, Langevin, quantum-trajectory and master-equation
//! experiments from a TOML config.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 config error, 3 numerical
//! abort, 4 oracle mismatch in `--self-test`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use optomech::config::{EngineKind, ExperimentConfig};
use optomech::runner::{self, WORKERS_ENV};
use optomech::Error;

#[derive(Parser, Debug)]
#[command(name = "optomech", version, about = "Transient chaos in a driven optomechanical cavity")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for ensembles.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Overrides `run.output_dir` (default `out`).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Run the built-in oracle checks first; exit 4 if any fails.
    #[arg(long, global = true)]
    self_test: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Deterministic mean-field trajectory and Lyapunov exponent.
    Classical,
    /// Langevin ensemble and lifetime table.
    Langevin,
    /// Quantum state diffusion ensemble and lifetime table.
    Qsd,
    /// Quantum-jump ensemble and lifetime table.
    Jump,
    /// Master-equation moments on a small truncation.
    Master,
    /// Lifetime sweep over `run.sweep` with the engine in `engine.kind`.
    Sweep,
    /// Scaling fits of an existing lifetime table.
    Fit {
        /// Lifetime table CSV; defaults to `<output-dir>/lifetime_table.csv`.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Ensemble density matrices against the master equation.
    Reconstruct,
}

enum Failure {
    Io(String),
    Config(String),
    Numerical(String),
    Oracle(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Oracle(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Io(m) | Failure::Config(m) | Failure::Numerical(m) | Failure::Oracle(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::NumericalAbort { .. } | Error::TruncationAlarm { .. } | Error::InvariantViolation { .. } => {
                Failure::Numerical(m)
            }
            Error::Io(_) => Failure::Io(m),
            _ => Failure::Config(m),
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config is required for this command".into()))?;
    let mut cfg = ExperimentConfig::load(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    Ok(cfg)
}

fn output_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.output_dir
        .clone()
        .or_else(|| cfg.and_then(|c| c.run.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn self_test() -> Result<(), Failure> {
    let checks = optomech::selftest::run_all();
    let mut failed = Vec::new();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        if !c.passed {
            failed.push(c.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Oracle(format!("self-test failed: {}", failed.join(", "))))
    }
}

fn ensemble(cli: &Cli, kind: EngineKind, workers: usize) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let kind = cfg.engine_kind(Some(kind))?;
    let out = output_dir(cli, Some(&cfg));
    let report = runner::run_sweep(&cfg, kind, workers, &out)?;
    for row in &report.rows {
        let e = &row.estimate;
        println!(
            "g0 = {}: <T> = {:.4} ± {:.4} periods ({}, {} observed, {} censored, {} invalid)",
            row.g0,
            e.mean,
            e.stderr,
            e.estimator.as_str(),
            e.n_observed,
            e.n_censored,
            row.n_invalid
        );
    }
    for f in &report.fits {
        println!("{} slope = {:.4}, residual_sum = {:.4e}", f.model.as_str(), f.slope, f.residual_sum);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.self_test {
        self_test()?;
    }
    let workers = cli.workers.filter(|&w| w > 0).unwrap_or_else(runner::default_workers);
    let Some(cmd) = &cli.command else {
        if cli.self_test {
            return Ok(());
        }
        return Err(Failure::Config("no command given; see --help".into()));
    };
    match cmd {
        Command::Classical => {
            let cfg = load_config(cli)?;
            cfg.engine_kind(Some(EngineKind::Classical))?;
            let out = output_dir(cli, Some(&cfg));
            print!("{}", runner::run_classical(&cfg, &out)?);
            println!("wrote {}", out.display());
        }
        Command::Langevin => ensemble(cli, EngineKind::Langevin, workers)?,
        Command::Qsd => ensemble(cli, EngineKind::Qsd, workers)?,
        Command::Jump => ensemble(cli, EngineKind::Jump, workers)?,
        Command::Sweep => {
            let cfg = load_config(cli)?;
            let kind = cfg.engine_kind(None)?;
            ensemble(cli, kind, workers)?;
        }
        Command::Master => {
            let cfg = load_config(cli)?;
            cfg.engine_kind(Some(EngineKind::Master))?;
            let out = output_dir(cli, Some(&cfg));
            let run = runner::run_master(&cfg, &out)?;
            if let Some(m) = run.moments.last() {
                println!(
                    "tau = {:.4}: <a†a> = {:.6}, <b†b> = {:.6}, purity = {:.6}",
                    m.tau, m.n_a, m.n_b, m.purity
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Reconstruct => {
            let cfg = load_config(cli)?;
            let kind = match cfg.engine.kind {
                Some(k @ (EngineKind::Qsd | EngineKind::Jump)) => k,
                None => EngineKind::Qsd,
                Some(k) => return Err(Failure::Config(format!("reconstruct needs engine qsd or jump, got '{}'", k.as_str()))),
            };
            let out = output_dir(cli, Some(&cfg));
            for c in runner::run_reconstruct(&cfg, kind, workers, &out)? {
                println!(
                    "tau = {}: trace distance {:.4e}, Monte Carlo scale {:.4e} ({})",
                    c.tau,
                    c.trace_distance,
                    c.monte_carlo_scale,
                    if c.passes() { "agree" } else { "disagree" }
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Fit { table } => {
            let cfg = cli.config.as_ref().map(|_| load_config(cli)).transpose()?;
            let out = output_dir(cli, cfg.as_ref());
            let table = table.clone().unwrap_or_else(|| out.join("lifetime_table.csv"));
            if !Path::new(&table).exists() {
                return Err(Failure::Config(format!("lifetime table {} not found", table.display())));
            }
            for f in runner::run_fit(&table, &out)? {
                println!("{} slope = {:.4}, residual_sum = {:.4e}", f.model.as_str(), f.slope, f.residual_sum);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
