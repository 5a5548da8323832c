//! `bosemix`: scattering lengths, mixture energies, lattice sums and
//! convexity scans from JSON configs.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver or regime failure,
//! 4 miscibility violation, 1 anything else.

mod commands;
mod config;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use bosemix::Error;
use clap::{Args, Parser, Subcommand};

use crate::commands::Regime;
use crate::config::{read_json, ScatterConfig};
use crate::table::{Format, Table};

#[derive(Debug, Parser)]
#[command(name = "bosemix", version, about = "Energetics of dilute two-species Bose gases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Seed for randomized restarts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Error-budget exponent η.
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Particle-number window K_z of the convexity scan.
    #[arg(long, global = true)]
    kz: Option<f64>,
    /// Generic constant C of the error budget and of the occupation region.
    #[arg(long, global = true, default_value_t = 1.0)]
    c: f64,
    /// Softness constant ν of the potential checks.
    #[arg(long, global = true)]
    nu: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the zero-energy scattering problem of one potential.
    Scatter {
        /// Write the full solution as JSON.
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Write the (r, φ, ω, g) profile as CSV.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Mean-field and LHY energy densities of one mixture.
    Energy,
    /// Phase table over a density grid, or a convexity scan.
    Scan,
    /// Lattice sum against its integral over a sequence of box sizes.
    Boxsum,
    /// Per-mode numerical minimization against the explicit minimizers.
    Minimize,
    /// Check the standing assumptions on a potential triple.
    Validate,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Validation(_) | Error::Parameter(_) | Error::Domain(_) => 2,
                Error::Numerical(_) | Error::Regime(_) | Error::Consistency(_) => 3,
                Error::Miscibility(_) => 4,
            };
        }
        if cause.is::<serde_json::Error>() || cause.is::<io::Error>() {
            return 2;
        }
    }
    1
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("BOSEMIX_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Validation(format!("BOSEMIX_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot configure the thread pool")?;
    Ok(())
}

fn emit(table: &Table, common: &Common) -> Result<()> {
    match &common.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut w = BufWriter::new(f);
            table.write(common.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write(common.format, &mut w)?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    let c = &cli.common;
    let path = c.config.as_deref().ok_or_else(|| Error::Validation("--config is required".into()))?;
    let reg = Regime { eta: c.eta, c: c.c, k_z: c.kz, nu: c.nu, seed: c.seed };
    if !(c.c > 0.0) || reg.eta.is_some_and(|e| !(e >= 0.0)) || reg.k_z.is_some_and(|k| !(k > 0.0)) || reg.nu.is_some_and(|n| !(n > 0.0)) {
        return Err(Error::Validation("C, K_z and ν must be positive and η non-negative".into()).into());
    }
    let table = match &cli.command {
        Command::Scatter { solution, profile } => commands::scatter(&ScatterConfig::read(path)?, solution.as_deref(), profile.as_deref())?,
        Command::Energy => commands::energy(&read_json(path)?, &reg)?,
        Command::Scan => commands::scan(&read_json(path)?, &reg)?,
        Command::Boxsum => {
            let (t, order) = commands::boxsum(&read_json(path)?)?;
            match order {
                Some(o) => eprintln!("fitted order: {}", table::sci(o)),
                None => eprintln!("fitted order: undefined (a gap vanishes)"),
            }
            t
        }
        Command::Minimize => commands::minimize(&read_json(path)?, &reg)?,
        Command::Validate => commands::validate(&read_json(path)?, &reg)?,
    };
    emit(&table, c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
