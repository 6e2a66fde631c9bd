mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use config::{parse_seeds, ConfigError, DomainSpec, RunConfig};
use mcl_core::domain::Moduli;
use mcl_core::error::Error;
use mcl_core::field::{BilateralField, ChordalField};
use mcl_core::loewner::trace_forward;
use mcl_core::sle::{sample_path, Drift, DriftSpec, SamplePath};
use mcl_core::stats::{mean, variance};
use mcl_core::verify::{
    gating_hull, lhopital_identity, locality_experiment, locality_suite, reduction_suite,
    scaling_suite, vertical_slit_hull, LocalityConfig, StochasticScaling, SuiteReport,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

/// Loewner evolutions in multiply connected slit domains.
#[derive(Parser)]
#[command(name = "mcl", version)]
struct Cli {
    /// Worker threads; MCL_THREADS caps this. Never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; every written file goes below it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the vector field, k and the pole-normalized field at points as JSON.
    Field {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Evaluation point such as 1+2i; repeatable.
        #[arg(long = "z", required = true, allow_hyphen_values = true)]
        points: Vec<Complex64>,
        /// Driving point (an angle on bilateral domains).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        xi: f64,
    },
    /// Sample driving functions and write one moduli CSV per seed plus a summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Inclusive seed range a..b; overrides the config.
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Sample driving functions and write the traces as CSV.
    Trace {
        #[arg(long)]
        config: PathBuf,
        /// Inclusive seed range a..b; overrides the config.
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Run a verification suite and write its report as JSON.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Reduction,
    Scaling,
    Locality,
    Lhopital,
    /// Reported only; the exit code ignores its outcome.
    Stretch,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Reduction => "reduction",
            Suite::Scaling => "scaling",
            Suite::Locality => "locality",
            Suite::Lhopital => "lhopital",
            Suite::Stretch => "stretch",
        }
    }
}

enum Failure {
    Config(ConfigError),
    Run(String),
    Checks,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_count(cli.threads).and_then(|n| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = n {
            b = b.num_threads(n);
        }
        let pool = b.build().map_err(|e| Failure::Run(e.to_string()))?;
        pool.install(|| run(&cli))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
    }
}

/// The smaller of `--threads` and `MCL_THREADS`, if either is set.
fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    let env = match std::env::var("MCL_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| {
                    ConfigError::new(format!("MCL_THREADS='{v}' is not a positive integer"))
                })?,
        ),
        Err(_) => None,
    };
    if flag == Some(0) {
        return Err(ConfigError::new("--threads must be positive").into());
    }
    Ok(match (flag, env) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    })
}

fn load(path: Option<&Path>, fallback: RunConfig) -> Result<RunConfig, ConfigError> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(fallback),
    }
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Run(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Field { config, points, xi } => field(config.as_deref(), points, *xi),
        Command::Simulate { config, seeds } => {
            let cfg = RunConfig::load(config)?;
            simulate(cli, &cfg, seeds.as_deref())
        }
        Command::Trace { config, seeds } => {
            let cfg = RunConfig::load(config)?;
            trace(cli, &cfg, seeds.as_deref())
        }
        Command::Verify { suite, config } => verify(cli, *suite, config.as_deref()),
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn field(config: Option<&Path>, points: &[Complex64], xi: f64) -> Result<(), Failure> {
    let cfg = load(config, RunConfig::default())?;
    let moduli = cfg.moduli().map_err(ConfigError::new)?;
    let report = match &moduli {
        Moduli::Chordal(m) => {
            let f = ChordalField::with_config(m, cfg.field())?;
            let kern = f.kernel(xi)?;
            let k = kern.k();
            let rows = points
                .iter()
                .map(|&z| {
                    let psi = kern.psi(z)?;
                    Ok(json!({ "z": pair(z), "psi": pair(psi), "psi0": pair(psi - k) }))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            json!({ "domain": moduli, "xi": xi, "k": k, "points": rows })
        }
        Moduli::Bilateral(m) => {
            let f = BilateralField::with_config(m, cfg.field())?;
            let rows = points
                .iter()
                .map(|&z| Ok(json!({ "z": pair(z), "psi": pair(f.psi(z, xi)?) })))
                .collect::<Result<Vec<_>, Error>>()?;
            json!({ "domain": moduli, "xi": xi, "points": rows })
        }
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Run(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn seeds_of(cfg: &RunConfig, flag: Option<&str>) -> Result<Vec<u64>, ConfigError> {
    let spec = match flag {
        Some(s) => s.to_string(),
        None => cfg.sde()?.seeds.clone(),
    };
    parse_seeds(&spec).map_err(ConfigError::new)
}

/// Samples every seed in parallel; results come back in seed order.
fn ensemble(cfg: &RunConfig, seeds: &[u64]) -> Result<Vec<SamplePath>, Failure> {
    let m0 = cfg.chordal()?;
    let drift = Drift::register(cfg.sde()?.drift.clone(), &m0)
        .map_err(|e| ConfigError::new(format!("drift rejected: {e}")))?;
    let cfgs = seeds
        .iter()
        .map(|&s| cfg.sde_config(s))
        .collect::<Result<Vec<_>, _>>()?;
    for c in &cfgs {
        c.validate().map_err(|e| ConfigError::new(e.to_string()))?;
    }
    Ok(cfgs
        .par_iter()
        .map(|c| sample_path(&m0, &drift, c))
        .collect::<Result<Vec<_>, Error>>()?)
}

fn summary(
    cfg: &RunConfig,
    command: &str,
    runs: Vec<serde_json::Value>,
    ends: &[f64],
) -> Result<serde_json::Value, Failure> {
    let sde = cfg.sde()?;
    Ok(json!({
        "version": config::VERSION,
        "command": command,
        "domain": cfg.moduli().map_err(ConfigError::new)?,
        "kappa": sde.kappa,
        "drift": sde.drift,
        "dt": cfg.solver.dt,
        "horizon": sde.horizon,
        "runs": runs,
        "xi_end_mean": mean(ends),
        "xi_end_variance": if ends.len() > 1 { variance(ends) } else { 0.0 },
    }))
}

fn simulate(cli: &Cli, cfg: &RunConfig, seeds: Option<&str>) -> Result<(), Failure> {
    let seeds = seeds_of(cfg, seeds)?;
    let samples = ensemble(cfg, &seeds)?;
    let dir = out_dir(cli, cfg)?;
    let mut runs = Vec::new();
    let mut ends = Vec::new();
    for (seed, s) in seeds.iter().zip(&samples) {
        let name = format!("path_{seed}.csv");
        let mut buf = Vec::new();
        s.path.write_csv(&mut buf)?;
        fs::write(dir.join(&name), buf)?;
        let end = *s.path.xi.last().unwrap_or(&0.0);
        ends.push(end);
        runs.push(json!({
            "seed": seed,
            "file": name,
            "snapshots": s.path.len(),
            "stop_time": s.path.stop_time,
            "xi_end": end,
        }));
    }
    write_json(
        &dir.join("summary.json"),
        &summary(cfg, "simulate", runs, &ends)?,
    )?;
    println!("wrote {} paths to {}", seeds.len(), dir.display());
    Ok(())
}

fn trace(cli: &Cli, cfg: &RunConfig, seeds: Option<&str>) -> Result<(), Failure> {
    let seeds = seeds_of(cfg, seeds)?;
    let samples = ensemble(cfg, &seeds)?;
    let flow = cfg.flow();
    let dt = cfg.solver.trace_dt;
    let traces = samples
        .par_iter()
        .map(|s| trace_forward(&s.to_field_gauge(), dt, flow))
        .collect::<Result<Vec<_>, Error>>()?;
    let dir = out_dir(cli, cfg)?;
    let mut runs = Vec::new();
    let mut ends = Vec::new();
    for ((seed, s), tr) in seeds.iter().zip(&samples).zip(&traces) {
        let name = format!("trace_{seed}.csv");
        let mut buf = Vec::new();
        tr.write_csv(&mut buf)?;
        fs::write(dir.join(&name), buf)?;
        ends.push(*s.path.xi.last().unwrap_or(&0.0));
        runs.push(json!({
            "seed": seed,
            "file": name,
            "points": tr.len(),
            "swallowed": tr.escaped.len(),
            "unresolved": tr.unresolved.len(),
            "stop_time": s.path.stop_time,
        }));
    }
    write_json(
        &dir.join("summary.json"),
        &summary(cfg, "trace", runs, &ends)?,
    )?;
    println!("wrote {} traces to {}", seeds.len(), dir.display());
    Ok(())
}

fn verify(cli: &Cli, suite: Suite, config: Option<&Path>) -> Result<(), Failure> {
    let fallback = RunConfig {
        domain: DomainSpec::Fixture("m1".into()),
        ..RunConfig::default()
    };
    let cfg = load(config, fallback)?;
    let rep = match suite {
        Suite::Reduction => reduction_suite(cfg.field())?,
        Suite::Lhopital => {
            let mut rep = SuiteReport::new("lhopital");
            rep.within("h = z^2", lhopital_identity(|z| z * z, 1.0, 1.0)?, 1e-6);
            rep.within(
                "h = z/(1+z)",
                lhopital_identity(|z| z / (1.0 + z), 1.0, 1.0)?,
                1e-6,
            );
            rep.within(
                "h affine",
                lhopital_identity(|z| 3.0 * z + 1.0, 0.2, 1.0)?,
                1e-6,
            );
            rep
        }
        Suite::Scaling => {
            let m0 = cfg.chordal()?;
            let mut drifts = vec![
                ("zero gauge".to_string(), DriftSpec::ZeroGauge),
                ("locality".to_string(), DriftSpec::Locality),
            ];
            let mut rejected = None;
            let stochastic = match &cfg.sde {
                Some(s) => {
                    if !matches!(s.drift, DriftSpec::ZeroGauge | DriftSpec::Locality) {
                        match Drift::register(s.drift.clone(), &m0) {
                            Ok(_) => drifts.push(("configured".to_string(), s.drift.clone())),
                            Err(e) => rejected = Some(e.to_string()),
                        }
                    }
                    Some(StochasticScaling {
                        kappa: s.kappa,
                        c: 2.0,
                        seeds: parse_seeds(&s.seeds).map_err(ConfigError::new)?.len(),
                        horizon: s.horizon,
                        dt: cfg.solver.dt,
                        alpha: 0.01,
                    })
                }
                None => None,
            };
            let mut rep = scaling_suite(&m0, &[0.5, 2.0, 4.0], &drifts, 100, stochastic)?;
            if let Some(msg) = rejected {
                eprintln!("configured drift rejected: {msg}");
                rep.record("configured drift registration", f64::NAN, 0.0, false);
            }
            rep
        }
        Suite::Locality => locality_suite(
            &mcl_core::domain::ChordalModuli::half_plane(),
            &gating_hull()?,
            &LocalityConfig::gating(6.0),
            2.0,
        )?,
        Suite::Stretch => {
            let m0 = cfg.chordal()?;
            let x0 = m0.slits.iter().map(|s| s.xp).fold(0.0, f64::max) + 2.0;
            let hull = vertical_slit_hull(&m0, x0, 0.25, 400)?;
            let lc = LocalityConfig {
                seeds: 100,
                fresh: 400,
                ..LocalityConfig::stretch(6.0)
            };
            let (_, o) = locality_experiment(&m0, &hull, &lc)?;
            let mut rep = SuiteReport::new("stretch");
            rep.seeds = Some(lc.seeds);
            rep.dt = Some(lc.dt);
            rep.record(
                "kappa=6 accepted",
                o.ks.statistic,
                o.ks.critical,
                o.ks.accepts(),
            );
            rep
        }
    };
    let dir = out_dir(cli, &cfg)?;
    let path = dir.join(format!("{}.json", suite.name()));
    write_json(&path, &rep)?;
    let mut stdout = std::io::stdout().lock();
    for c in &rep.checks {
        writeln!(
            stdout,
            "{} {}: {:.3e} (tolerance {:.3e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance
        )?;
    }
    writeln!(stdout, "report written to {}", path.display())?;
    if rep.pass || matches!(suite, Suite::Stretch) {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}
