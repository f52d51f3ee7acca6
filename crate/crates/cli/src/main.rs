// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod axes;
mod commands;
mod output;

use axes::{Axis, Observable};

/// Exact steady states of pair-driven, lossy bosonic lattices with a global
/// Hubbard interaction.
#[derive(Parser, Debug)]
#[command(name = "kerrlattice", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Model description (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Series tolerance
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,

    /// Largest accepted series cutoff (pairs)
    #[arg(long, global = true)]
    max_terms: Option<usize>,

    /// Worker threads for grids
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Also solve the truncated master equation and report it alongside
    #[arg(long, global = true)]
    oracle: bool,

    /// Report energies in the config's absolute units instead of units of U
    #[arg(long, global = true)]
    si: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Steady-state observables at one parameter point (JSON)
    Observables {
        /// Displacements for the correlators; 0..=L/2 by default
        #[arg(long, value_delimiter = ',')]
        displacements: Option<Vec<usize>>,
    },
    /// Grid over one or more parameters (CSV)
    Sweep {
        /// `name=start:stop:count[:log]`, repeatable; the last axis varies fastest
        #[arg(long = "axis", required = true)]
        axes: Vec<Axis>,
        #[arg(long, value_delimiter = ',', default_value = "nbar,g2-far")]
        observables: Vec<Observable>,
        /// Displacement used for the one-particle and pairing columns
        #[arg(long, default_value_t = 1)]
        displacement: usize,
    },
    /// Susceptibility maxima, critical loss and exponent of the all-to-all model
    Critical {
        #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000")]
        sizes: Vec<usize>,
        /// Loss rates; multiples of the mean-field critical loss when absent
        #[arg(long, value_delimiter = ',')]
        kappas: Option<Vec<f64>>,
        /// Detuning grid `start:stop:count`
        #[arg(long, default_value = "0:8:81")]
        detunings: String,
    },
    /// Exact pipeline against the truncated master equation over random draws
    OracleCheck {
        #[arg(long, default_value_t = 20)]
        draws: usize,
        #[arg(long, default_value_t = 0.01)]
        kappa_min: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa_max: f64,
    },
    /// Classical fixed points and their stability (JSON)
    Semiclassics,
    /// Wigner and Husimi functions on a square grid in one mode (CSV)
    WignerGrid {
        #[arg(long, default_value_t = 3.0)]
        radius: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// Mode whose phase plane is scanned; the others sit at the origin
        #[arg(long, default_value_t = 0)]
        mode: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match &cli.command {
        Command::Observables { displacements } => commands::observables(&cli, displacements.clone()),
        Command::Sweep { axes, observables, displacement } => commands::sweep(&cli, axes, observables, *displacement),
        Command::Critical { sizes, kappas, detunings } => commands::critical(&cli, sizes, kappas.as_deref(), detunings),
        Command::OracleCheck { draws, kappa_min, kappa_max } => commands::oracle_check(&cli, *draws, *kappa_min, *kappa_max),
        Command::Semiclassics => commands::semiclassics(&cli),
        Command::WignerGrid { radius, points, mode } => commands::wigner_grid(&cli, *radius, *points, *mode),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
