//! Command line driver for the space-time experiments.
//!
//! Exit status: 0 success, 1 usage error, 2 numerical failure, 3 resource cap
//! (the partial report is still written and ends with a `# truncated` line).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stpg::constants::{NormChoice, DEFAULT_MAX_DOFS};
use stpg::experiments::{
    run_convergence, run_infsup, run_moments, run_solve, ConvergenceConfig, InfsupConfig, MomentsConfig, RunOptions,
    SolveConfig,
};
use stpg::stochastic::{Case, Sampling};
use stpg::Error;

const USAGE: u8 = 1;
const NUMERICAL: u8 = 2;
const RESOURCE_CAP: u8 = 3;

// away from the singular points of the uniform laws
const DEFAULT_SOLVE_OMEGA: f64 = 0.25;

#[derive(Parser, Debug)]
#[command(
    name = "stpg",
    version,
    about = "Space-time Petrov-Galerkin experiments for parabolic problems with random coefficients"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// L^p(Ω;Y) moment ladders of the pathwise solution norms.
    Moments(Flags),
    /// Mean Y-error along h = 2^-j, k = 2^-2j.
    Convergence(Flags),
    /// Inf-sup, continuity and CFL constants over a grid of discretizations.
    Infsup(Flags),
    /// One pathwise solve, dumped interval by interval.
    Solve(Flags),
}

#[derive(Args, Debug)]
struct Flags {
    /// Coefficient law: a, b, c, d, lognormal or custom.
    #[arg(long, value_parser = parse_case_name)]
    case: String,
    /// Spatial dimension (1 or 2).
    #[arg(long)]
    dim: Option<usize>,
    /// Spatial polynomial degree (1: hats, 2: quadratic B-splines).
    #[arg(long, default_value_t = 1)]
    degree: usize,
    /// Cells per axis (comma separated for infsup).
    #[arg(long, value_delimiter = ',')]
    cells: Vec<usize>,
    /// Time steps (comma separated for infsup).
    #[arg(long, value_delimiter = ',')]
    steps: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    j_min: u32,
    #[arg(long, default_value_t = 5)]
    j_max: u32,
    /// Moment orders.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0])]
    p: Vec<f64>,
    /// Quadrature sizes; the first entry is used by convergence.
    #[arg(long, value_delimiter = ',')]
    n_quad_ladder: Vec<usize>,
    #[arg(long, value_enum, default_value_t = SamplingArg::Midpoint)]
    sampling: SamplingArg,
    /// Seed for monte-carlo sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parameter values (infsup: list, solve: single value, default 0.25).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    omega: Vec<f64>,
    /// Diffusion value for the custom case.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    a_value: f64,
    /// Forcing amplitude for the custom case.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    c0_value: f64,
    /// Norms for infsup.
    #[arg(long, value_enum, default_value_t = NormsArg::Weighted)]
    norms: NormsArg,
    /// Cap on the dimension of any dense matrix factorization.
    #[arg(long, default_value_t = DEFAULT_MAX_DOFS)]
    max_dofs: usize,
    /// Worker threads (0: all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SamplingArg {
    Midpoint,
    Gauss,
    MonteCarlo,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum NormsArg {
    Weighted,
    Unweighted,
}

fn parse_case_name(s: &str) -> Result<String, String> {
    if s == "custom" || Case::parse(s).is_some() {
        Ok(s.to_string())
    } else {
        Err(format!("unknown case '{s}' (expected a, b, c, d, lognormal or custom)"))
    }
}

impl Flags {
    fn case(&self) -> Case {
        match self.case.as_str() {
            "custom" => Case::Custom { a: self.a_value, c0: self.c0_value },
            name => Case::parse(name).expect("validated by the argument parser"),
        }
    }

    fn sampling(&self) -> Sampling {
        match self.sampling {
            SamplingArg::Midpoint => Sampling::Midpoint,
            SamplingArg::Gauss => Sampling::GaussLegendre,
            SamplingArg::MonteCarlo => Sampling::MonteCarlo { seed: self.seed },
        }
    }

    fn options(&self) -> RunOptions {
        RunOptions { jobs: self.jobs, max_dofs: self.max_dofs }
    }

    fn single(list: &[usize], default: usize, name: &str) -> Result<usize, Error> {
        match list {
            [] => Ok(default),
            [x] => Ok(*x),
            _ => Err(Error::InvalidArgument(format!("--{name} takes a single value for this command"))),
        }
    }
}

/// Whether the written report is complete.
enum Outcome {
    Complete,
    Truncated,
}

fn run(cmd: Command) -> Result<Outcome, Error> {
    let mut buf = Vec::new();
    let (flags, outcome) = match cmd {
        Command::Moments(f) => {
            let mut cfg = MomentsConfig::new(f.case());
            cfg.dim = f.dim.unwrap_or(cfg.dim);
            cfg.degree = f.degree;
            cfg.n_cells = Flags::single(&f.cells, cfg.n_cells, "cells")?;
            cfg.n_steps = Flags::single(&f.steps, cfg.n_steps, "steps")?;
            cfg.p = f.p.clone();
            if !f.n_quad_ladder.is_empty() {
                cfg.ladder = f.n_quad_ladder.clone();
            }
            cfg.sampling = f.sampling();
            run_moments(&cfg, &f.options())?.write_csv(&mut buf)?;
            (f, Outcome::Complete)
        }
        Command::Convergence(f) => {
            let mut cfg = ConvergenceConfig::new(f.case());
            cfg.dim = f.dim.unwrap_or(cfg.dim);
            cfg.degree = f.degree;
            cfg.j_min = f.j_min;
            cfg.j_max = f.j_max;
            cfg.n_quad = f.n_quad_ladder.first().copied().unwrap_or(cfg.n_quad);
            cfg.sampling = f.sampling();
            let report = run_convergence(&cfg, &f.options())?;
            report.write_csv(&mut buf)?;
            let outcome = if report.truncated.is_some() { Outcome::Truncated } else { Outcome::Complete };
            (f, outcome)
        }
        Command::Infsup(f) => {
            let mut cfg = InfsupConfig::new(f.case());
            cfg.dim = f.dim.unwrap_or(cfg.dim);
            cfg.degree = f.degree;
            if !f.cells.is_empty() {
                cfg.cells = f.cells.clone();
            }
            if !f.steps.is_empty() {
                cfg.steps = f.steps.clone();
            }
            cfg.omegas = f.omega.clone();
            cfg.norms = match f.norms {
                NormsArg::Weighted => NormChoice::Weighted,
                NormsArg::Unweighted => NormChoice::Unweighted,
            };
            let report = run_infsup(&cfg, &f.options())?;
            report.write_csv(&mut buf)?;
            let outcome = if report.truncated.is_some() { Outcome::Truncated } else { Outcome::Complete };
            (f, outcome)
        }
        Command::Solve(f) => {
            let omega = match f.omega.as_slice() {
                [] => DEFAULT_SOLVE_OMEGA,
                [w] => *w,
                _ => return Err(Error::InvalidArgument("--omega takes a single value for solve".into())),
            };
            let cfg = SolveConfig {
                case: f.case(),
                dim: f.dim.unwrap_or(1),
                degree: f.degree,
                n_cells: Flags::single(&f.cells, 8, "cells")?,
                n_steps: Flags::single(&f.steps, 32, "steps")?,
                omega,
            };
            run_solve(&cfg, &f.options())?.write_csv(&mut buf)?;
            (f, Outcome::Complete)
        }
    };
    match &flags.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(&buf)?;
            w.flush()?;
        }
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(outcome)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Unsupported(_) => USAGE,
        Error::ResourceCap { .. } => RESOURCE_CAP,
        _ => NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Truncated) => {
            eprintln!("stpg: report truncated at the size cap");
            ExitCode::from(RESOURCE_CAP)
        }
        Err(e) => {
            eprintln!("stpg: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
