//! Command line front end: configured estimation runs, bound audits, path dumps,
//! reference tables and the acceptance suite.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fkbridge::config::{parse_config_as, ExperimentConfig};
use fkbridge::estimators::map_paths;
use fkbridge::reference::ReferenceKernel;
use fkbridge::run::{audit_bounds, run, RunOptions};
use fkbridge::stochastic::{PathMode, RngStream};
use fkbridge::validation::{standard_bound_reports, validate, Suite};
use fkbridge::Error;

#[derive(Parser)]
#[command(name = "fkbridge", version, about = "Feynman-Kac kernels and gradients by semi-classical bridges")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    EstimateKernel(RunArgs),
    /// Kernel gradient, or the semigroup gradient when the config asks for it.
    EstimateGradient(RunArgs),
    EstimateLogGradient(RunArgs),
    /// Semigroup value, or its gradient when the config asks for it.
    EstimateSemigroup(RunArgs),
    /// JSON array of bound reports for the config, or the standard set without one.
    AuditBounds {
        #[arg(long, default_value_t = 4000)]
        paths: usize,
    },
    /// CSV of simulated paths.
    SamplePaths {
        #[arg(long, default_value_t = 10)]
        paths: usize,
    },
    /// CSV table of the reference kernel for the configured geometry and horizon.
    Reference {
        #[arg(long, default_value_t = 5.0)]
        r_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Runs the acceptance suite.
    Validate {
        #[arg(long, value_enum, default_value_t = SuiteArg::Quick)]
        suite: SuiteArg,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Include wall-clock time in the document.
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Quick,
    Full,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn load(cli: &Cli, choose: impl FnOnce(&str) -> Option<String>) -> Result<ExperimentConfig, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| usage("--config is required for this command"))?;
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut config =
        parse_config_as(&text, choose).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn emit(cli: &Cli, fallback: Option<&str>, body: &str) -> Result<(), Failure> {
    let target = cli.output.clone().or_else(|| fallback.map(PathBuf::from));
    match target {
        Some(path) => write_file(&path, body),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).map_err(|e| usage(e.to_string()))
        }
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| usage(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn estimate(cli: &Cli, timing: bool, choose: impl FnOnce(&str) -> Option<String>) -> Result<(), Failure> {
    let config = load(cli, choose)?;
    let options = RunOptions { workers: cli.workers, timing };
    let document = run(&config, options)?;
    emit(cli, config.output.as_deref(), &to_json(&document)?)
}

fn pick(allowed: &'static [&'static str], default: &'static str) -> impl FnOnce(&str) -> Option<String> {
    move |name| (!allowed.contains(&name)).then(|| default.to_string())
}

fn sample_paths(cli: &Cli, paths: usize) -> Result<(), Failure> {
    let config = load(cli, |_| None)?;
    let problem = config.to_problem()?;
    let forward = config.estimator.name.starts_with("semigroup");
    let sim = problem.simulator();
    let x0 = problem.start();
    let records = map_paths(paths, cli.workers, |i| {
        let mut rng = RngStream::new(problem.seed, i as u64);
        if forward {
            sim.forward(&x0, &[], &mut rng)
        } else {
            sim.bridge(&x0, &[], problem.mode, &mut rng)
        }
    })?;
    let n = problem.geometry.dim();
    let mut csv = String::from("path,step,t,r");
    let full = problem.mode == PathMode::FullPolar || forward;
    if full {
        for j in 0..n {
            let _ = write!(csv, ",x{j}");
        }
    }
    csv.push('\n');
    let nodes = problem.grid.nodes();
    for (i, path) in records.iter().enumerate() {
        for (k, (&t, &r)) in nodes.iter().zip(&path.radii).enumerate() {
            let _ = write!(csv, "{i},{k},{t},{r}");
            if let Some(x) = path.position(k).filter(|_| full) {
                for v in x {
                    let _ = write!(csv, ",{v}");
                }
            }
            csv.push('\n');
        }
    }
    emit(cli, None, &csv)
}

fn reference_table(cli: &Cli, r_max: f64, points: usize) -> Result<(), Failure> {
    let config = load(cli, |_| None)?;
    let problem = config.to_problem()?;
    let kernel = ReferenceKernel::for_geometry(&problem.geometry)
        .ok_or_else(|| usage("no reference kernel exists for this geometry (Euclidean, H² and H³ with h = 0 only)"))?;
    if points < 2 || !(r_max > 0.0) {
        return Err(usage("--points must be at least 2 and --r-max positive"));
    }
    let t = problem.horizon();
    let mut csv = String::from("r,t,kernel,d_r,d_log_r\n");
    for i in 0..points {
        let r = r_max * i as f64 / (points - 1) as f64;
        // Adding zero folds the signed zero at the pole.
        let (d, dl) = (kernel.d_r(r, t)? + 0.0, kernel.d_log_r(r, t)? + 0.0);
        let _ = writeln!(csv, "{r},{t},{},{d},{dl}", kernel.value(r, t)?);
    }
    emit(cli, None, &csv)
}

fn audit(cli: &Cli, paths: usize) -> Result<(), Failure> {
    let reports = match &cli.config {
        Some(_) => {
            let config = load(cli, |_| None)?;
            audit_bounds(&config, RunOptions { workers: cli.workers, timing: false })?
        }
        None => standard_bound_reports(paths, cli.seed.unwrap_or(0))?,
    };
    emit(cli, None, &to_json(&reports)?)
}

fn run_validate(cli: &Cli, suite: SuiteArg) -> Result<bool, Failure> {
    let suite = match suite {
        SuiteArg::Quick => Suite::Quick,
        SuiteArg::Full => Suite::Full,
    };
    let report = validate(suite);
    for c in &report.criteria {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        eprintln!("{verdict} criterion {:>2}: {} ({:.1} s)", c.id, c.title, c.seconds);
        for check in c.checks.iter().filter(|k| !k.passed) {
            eprintln!("    {}: {}", check.label, check.detail);
        }
    }
    emit(cli, None, &to_json(&report)?)?;
    Ok(report.passed)
}

fn dispatch(cli: &Cli) -> Result<bool, Failure> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(usage("--workers must be at least 1"));
        }
    }
    match &cli.command {
        Command::EstimateKernel(a) => estimate(cli, a.timing, pick(&["kernel"], "kernel"))?,
        Command::EstimateGradient(a) => {
            estimate(cli, a.timing, pick(&["kernel-gradient", "semigroup-gradient"], "kernel-gradient"))?
        }
        Command::EstimateLogGradient(a) => estimate(cli, a.timing, pick(&["log-gradient"], "log-gradient"))?,
        Command::EstimateSemigroup(a) => {
            estimate(cli, a.timing, pick(&["semigroup", "semigroup-gradient"], "semigroup"))?
        }
        Command::AuditBounds { paths } => audit(cli, *paths)?,
        Command::SamplePaths { paths } => sample_paths(cli, *paths)?,
        Command::Reference { r_max, points } => reference_table(cli, *r_max, *points)?,
        Command::Validate { suite } => return run_validate(cli, *suite),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
