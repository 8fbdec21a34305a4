use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use zerobound::bounds::BoundConfig;
use zerobound::harness::{
    demo_report, derive_report, gen_random, parse_system, sweep, sweep_csv, verify_report, RunOptions,
    RunReport, SweepOptions,
};
use zerobound::polyring::{parse_ratio, Ratio};
use zerobound::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "zerobound", version, about = "Derive scalar equations from parameterized linear ODE systems, certify them, and bound zero counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive the scalar equation for the first component.
    Derive {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derive, then check the verdict, membership certificates and residuals.
    Verify {
        input: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Zero counts and bounds over a grid of parameter values, as CSV.
    Sweep {
        input: PathBuf,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Comma-separated parameter values, e.g. `-1/2,-1/4,1/4,1/2`.
        #[arg(long = "eps-grid", value_delimiter = ',', allow_hyphen_values = true)]
        eps_grid: Option<Vec<String>>,
        /// A single parameter value, appended to the grid.
        #[arg(long, allow_hyphen_values = true)]
        epsilon: Option<String>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Comma-separated initial state (default e_2).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        init: Option<Vec<f64>>,
        /// Zero-based state component whose zeros are counted.
        #[arg(long, default_value_t = 0)]
        component: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random system document.
    Random {
        #[arg(long = "n", default_value_t = 2)]
        n: usize,
        #[arg(long = "d", default_value_t = 1)]
        d: u32,
        #[arg(long = "M", default_value_t = 1)]
        m: u64,
        #[arg(long = "q", default_value_t = 1)]
        q: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run `verify` on the built-in two-dimensional example.
    Demo {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long = "E", default_value_t = 1.0)]
    e_radius: f64,
    #[arg(long = "R", default_value_t = 2.0)]
    r: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
}

impl BoundArgs {
    fn config(&self) -> BoundConfig {
        BoundConfig {
            c: self.c,
            sigma: self.sigma,
            mu: self.mu,
            e_radius: self.e_radius,
            r: self.r,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    bounds: BoundArgs,
    /// Comma-separated parameter samples.
    #[arg(long = "epsilon-samples", value_delimiter = ',', allow_hyphen_values = true)]
    epsilon_samples: Option<Vec<String>>,
    /// A single parameter sample, added to the others.
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Degree cap for effective division (default 2D - 1).
    #[arg(long)]
    cap: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated initial state (default: seeded random).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    init: Option<Vec<f64>>,
    #[arg(long = "residual-max", default_value_t = 1e-6)]
    residual_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Accepts integers, fractions (`-3/4`) and decimals (`0.25`), exactly.
fn parse_rational(s: &str) -> Result<Ratio, Error> {
    let bad = || Error::Usage(format!("not a rational number: {s:?}"));
    if let Some(r) = parse_ratio(s) {
        return Ok(r);
    }
    let s = s.trim();
    let (int, frac) = s.split_once('.').ok_or_else(bad)?;
    if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    parse_ratio(&format!("{int}{frac}/1{}", "0".repeat(frac.len()))).ok_or_else(bad)
}

fn rationals(list: &Option<Vec<String>>, single: &Option<String>) -> Result<Option<Vec<Ratio>>, Error> {
    let mut out: Option<Vec<Ratio>> = None;
    for s in list.iter().flatten().chain(single) {
        out.get_or_insert_with(Vec::new).push(parse_rational(s)?);
    }
    Ok(out)
}

impl RunArgs {
    fn options(&self) -> Result<RunOptions, Error> {
        Ok(RunOptions {
            bounds: self.bounds.config(),
            tol: self.tol,
            cap: self.cap,
            epsilon_samples: rationals(&self.epsilon_samples, &self.epsilon)?,
            init: self.init.clone(),
            seed: self.seed,
            residual_max: self.residual_max,
        })
    }
}

enum Failure {
    Error(Error),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, Error> {
    std::fs::read(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_report(report: &RunReport, out: &Option<PathBuf>) -> Result<(), Failure> {
    write_output(out, &report.to_json())?;
    if report.passed {
        Ok(())
    } else {
        for c in report.failed_checks() {
            eprintln!("FAILED {}: {}", c.name, c.detail);
        }
        Err(Failure::Verification)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Derive { input, out } => {
            let (doc, sys) = parse_system(&read_input(&input)?)?;
            let report = derive_report(&doc, &sys)?;
            write_output(&out, &report.to_json())?;
        }
        Command::Verify { input, run } => {
            let opts = run.options()?;
            let (doc, sys) = parse_system(&read_input(&input)?)?;
            emit_report(&verify_report(&doc, &sys, &opts)?, &run.out)?;
        }
        Command::Demo { run } => {
            emit_report(&demo_report(&run.options()?)?, &run.out)?;
        }
        Command::Sweep {
            input,
            bounds,
            eps_grid,
            epsilon,
            tol,
            init,
            component,
            out,
        } => {
            let (_, sys) = parse_system(&read_input(&input)?)?;
            let opts = SweepOptions {
                bounds: bounds.config(),
                tol,
                grid: rationals(&eps_grid, &epsilon)?,
                init,
                component,
            };
            let rows = sweep(&sys, &opts)?;
            let stamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            write_output(&out, &format!("# generated at unix time {stamp}\n{}", sweep_csv(&rows)))?;
            for r in rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("eps = {}: {}", r.epsilon, r.error.as_deref().unwrap_or(""));
            }
        }
        Command::Random { n, d, m, q, seed, out } => {
            write_output(&out, &gen_random(n, d, m, q, seed)?.render())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(EXIT_VERIFY),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Parse { .. } | Error::Usage(_) | Error::UnsupportedParameterCount { .. } => EXIT_USAGE,
                _ => EXIT_INTERNAL,
            })
        }
    }
}
