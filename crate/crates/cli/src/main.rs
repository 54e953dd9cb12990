//! `cavity`: solve, sample and validate cavity scattering scenarios from
//! JSON spec files.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "cavity", version, about = "Scattering by layered rectangular cavities in a ground plane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Record wall time in the manifest (makes the manifest run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the aperture system and write the coefficients.
    Solve(Common),
    /// Sample the interior field on a grid and along each cavity diagonal.
    Field {
        #[command(flatten)]
        common: Common,
        /// Grid points per cavity in x and y.
        #[arg(long, num_args = 2, value_names = ["NX", "NY"], default_values_t = [41, 41])]
        grid: Vec<usize>,
        /// Samples along each cavity diagonal.
        #[arg(long, default_value_t = 200)]
        diagonal: usize,
    },
    /// Backscatter radar cross section (TM only).
    Rcs {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 181)]
        angles: usize,
        /// Smallest observation angle (radians).
        #[arg(long, default_value_t = std::f64::consts::PI / 360.0)]
        phi_min: f64,
        /// Largest observation angle (radians).
        #[arg(long, default_value_t = std::f64::consts::PI * 359.0 / 360.0)]
        phi_max: f64,
    },
    /// Enhancement factor spectrum over a wavenumber sweep.
    Enhance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kappa_min: f64,
        #[arg(long)]
        kappa_max: f64,
        #[arg(long, default_value_t = 201)]
        kappa_steps: usize,
        /// Report only this cavity (numbered from 1).
        #[arg(long)]
        cavity: Option<usize>,
    },
    /// Panel-refinement self-convergence table starting from the scenario's panel count.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        levels: usize,
    },
    /// Run the oracle suites and write their reports.
    Validate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Profile::Default)]
        tolerance_profile: Profile,
        #[arg(long)]
        timing: bool,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Reduced case grids.
    Default,
    /// Full case grids.
    Strict,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(c) => commands::solve(&c),
        Command::Field { common, grid, diagonal } => commands::field(&common, grid[0], grid[1], diagonal),
        Command::Rcs { common, angles, phi_min, phi_max } => commands::rcs(&common, angles, phi_min, phi_max),
        Command::Enhance { common, kappa_min, kappa_max, kappa_steps, cavity } => {
            commands::enhance(&common, kappa_min, kappa_max, kappa_steps, cavity)
        }
        Command::Convergence { common, levels } => commands::convergence(&common, levels),
        Command::Validate { out, tolerance_profile, timing } => commands::validate(&out, tolerance_profile, timing),
    };
    match result {
        Ok(commands::Outcome::Success) => ExitCode::SUCCESS,
        Ok(commands::Outcome::ValidationFailed) => {
            eprintln!("error: validation failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
