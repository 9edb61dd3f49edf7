//! Command-line front end for two-step transport solves, structure-condition
//! checks, and mean-field fixed-point runs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use twostep::cli::{run, Command, RunConfig, SolverKind};

#[derive(Parser)]
#[command(
    name = "twostep",
    about = "Two-step optimal transport with an intermediate-time kick: solver, condition checks, mean-field fixed point",
    version
)]
struct Cli {
    /// Worker-pool size (overrides TWOSTEP_THREADS; 0 = automatic).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a two-step problem and write plan/potential/map artifacts.
    Solve {
        /// Source measure (CSV path or generator spec).
        #[arg(long)]
        source: String,
        /// Target measure (CSV path or generator spec).
        #[arg(long)]
        target: String,
        /// Catalog potential, e.g. quadratic, ex61-Q, coulomb:3, poly:file.json.
        #[arg(long)]
        potential: String,
        /// Time horizon.
        #[arg(long = "T", default_value_t = 1.0)]
        t: f64,
        #[arg(long, value_parser = ["exact", "entropic"], default_value = "exact")]
        solver: String,
        #[arg(long, value_parser = ["dominant", "barycentric"], default_value = "dominant")]
        map_mode: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Cells per axis for the determinant-equation residual (0 = skip).
        #[arg(long, default_value_t = 0)]
        ma_cells: usize,
    },
    /// Scan structure conditions of a potential on a sampling region.
    Check {
        #[arg(long)]
        potential: String,
        /// Region spec: default | ball:c=0;0;0,r=1 | box:lo=...,hi=...
        #[arg(long = "box", default_value = "default")]
        region: String,
        /// Comma-separated list from H0,H1,H2,H2w,H2c.
        #[arg(long, value_delimiter = ',', default_value = "H1,H2w")]
        conditions: Vec<String>,
        #[arg(long, default_value_t = 48)]
        points: usize,
        /// Random direction pairs per point (on top of the deterministic set).
        #[arg(long, default_value_t = 64)]
        directions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report file (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Domain q-convexity and mean-field boundary conditions.
    CheckDomains {
        /// Domain spec: ball:d=2,c=0;0,r=1 | kidney:b=1.05,c=1
        #[arg(long)]
        omega0: String,
        #[arg(long = "omegaT")]
        omega_t: String,
        /// Potential for the q-convexity check.
        #[arg(long)]
        potential: Option<String>,
        /// Kernel for the mean-field boundary conditions.
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long = "T", default_value_t = 1.0)]
        t: f64,
        /// Total mass entering the mean-field conditions.
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Damped fixed-point iteration for the self-interacting problem.
    Meanfield {
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: String,
        /// Kernel: quadratic, quartic, coulomb:3, poly:file.json, ...
        #[arg(long)]
        kernel: String,
        #[arg(long = "T", default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 0.5)]
        damping: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iterations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Squared Wasserstein-2 distance (1/2-factor convention) of two measures.
    W2 {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Discrete Legendre transform of a potential sampled on a box.
    Legendre {
        #[arg(long)]
        potential: String,
        /// Box lower corner, `;`-separated.
        #[arg(long, value_delimiter = ';')]
        lo: Vec<f64>,
        /// Box upper corner, `;`-separated.
        #[arg(long, value_delimiter = ';')]
        hi: Vec<f64>,
        #[arg(long, default_value_t = 65)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Solve {
            source,
            target,
            potential,
            t,
            solver,
            map_mode,
            out,
            ma_cells,
        } => Command::Solve {
            source,
            target,
            potential,
            t,
            solver: if solver == "exact" {
                SolverKind::Exact
            } else {
                SolverKind::Entropic
            },
            map_mode,
            out,
            ma_cells,
        },
        Cmd::Check {
            potential,
            region,
            conditions,
            points,
            directions,
            seed,
            out,
        } => Command::Check {
            potential,
            region,
            conditions,
            points,
            directions,
            seed,
            out,
        },
        Cmd::CheckDomains {
            omega0,
            omega_t,
            potential,
            kernel,
            t,
            mass,
            seed,
            out,
        } => Command::CheckDomains {
            omega0,
            omega_t,
            potential,
            kernel,
            t,
            mass,
            seed,
            out,
        },
        Cmd::Meanfield {
            source,
            target,
            kernel,
            t,
            damping,
            tol,
            max_iterations,
            out,
        } => Command::Meanfield {
            source,
            target,
            kernel,
            t,
            damping,
            tol,
            max_iterations,
            out,
        },
        Cmd::W2 { a, b } => Command::W2 { a, b },
        Cmd::Legendre {
            potential,
            lo,
            hi,
            resolution,
            out,
        } => Command::Legendre {
            potential,
            lo,
            hi,
            resolution,
            out,
        },
    };
    let config = RunConfig {
        command,
        threads: cli.threads,
    };
    ExitCode::from(run(&config) as u8)
}
