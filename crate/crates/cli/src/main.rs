//! `sdeg`: command-line runner for the sphere-degree estimators.

mod commands;
mod config;
mod record;
mod suite;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use config::Params;
use record::Record;

/// Degrees of sphere maps and Toeplitz indices from cyclic cocycle integrals.
///
/// Exit codes: 0 resolved, 2 UNRESOLVED or inconclusive, 1 error or failed
/// check. SDEG_WORKERS caps the number of worker threads.
#[derive(Parser, Debug)]
#[command(name = "sdeg", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Flat TOML config; command-line flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: Params,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Chern-Simons pairing of a spin symbol over S^{2n-1}.
    CsCheck,
    /// Index of a Toeplitz operator from the cocycle integral (and the truncated oracle).
    Index,
    /// Degree of a map S^{2n-1} -> S^{2n-1} by both evaluation paths.
    Degree,
    /// Degree of a map S^1 -> S^1 by grid quadrature.
    DegreeCircle,
    /// Singular values of the commutator [P, a].
    Schatten,
    /// tr(K1...Km) against the product integral for mollified Szego kernels.
    TraceCheck,
    /// The invariant battery.
    VerifySuite,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::CsCheck => "cs-check",
            Command::Index => "index",
            Command::Degree => "degree",
            Command::DegreeCircle => "degree-circle",
            Command::Schatten => "schatten",
            Command::TraceCheck => "trace-check",
            Command::VerifySuite => "verify-suite",
        }
    }

    fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "cs-check" => Command::CsCheck,
            "index" => Command::Index,
            "degree" => Command::Degree,
            "degree-circle" => Command::DegreeCircle,
            "schatten" => Command::Schatten,
            "trace-check" => Command::TraceCheck,
            "verify-suite" => Command::VerifySuite,
            other => bail!("subcommand: unknown subcommand {other}"),
        })
    }
}

fn configure_workers() -> Result<()> {
    if let Ok(v) = std::env::var("SDEG_WORKERS") {
        let n: usize = v.parse().with_context(|| format!("SDEG_WORKERS: not a number: {v}"))?;
        if n == 0 {
            bail!("SDEG_WORKERS: must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    configure_workers()?;
    let file = match &cli.config {
        Some(path) => Params::from_file(path)?,
        None => Params::default(),
    };
    let mut params = file.overlay(&cli.params)?;
    let command = match (cli.command, params.subcommand.as_deref()) {
        (Some(c), Some(s)) if c.name() != s => {
            bail!("subcommand: config says {s} but {} was requested", c.name())
        }
        (Some(c), _) => c,
        (None, Some(s)) => Command::parse(s)?,
        (None, None) => bail!("subcommand: none given on the command line or in the config"),
    };
    params.subcommand = Some(command.name().into());
    params.validate()?;
    if params.seed.is_none() {
        params.seed = Some(commands::DEFAULT_SEED);
    }

    let start = Instant::now();
    let mut rec = Record::new(command.name(), params.clone());
    match command {
        Command::CsCheck => commands::cs_check(&params, &mut rec)?,
        Command::Index => commands::index(&params, &mut rec)?,
        Command::Degree => commands::degree(&params, &mut rec)?,
        Command::DegreeCircle => commands::degree_circle_cmd(&params, &mut rec)?,
        Command::Schatten => commands::schatten(&params, &mut rec)?,
        Command::TraceCheck => commands::trace_check(&params, &mut rec)?,
        Command::VerifySuite => suite::verify_suite(&params, &mut rec)?,
    }
    rec.wall_clock_s = start.elapsed().as_secs_f64();

    let format = params.format.as_deref().unwrap_or("json");
    match &params.out {
        Some(path) => {
            let mut f = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .with_context(|| format!("out: cannot open {path}"))?;
            rec.write(format, &mut f)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            rec.write(format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(rec.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
