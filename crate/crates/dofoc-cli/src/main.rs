use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dofoc_cli::commands::{cmd_probe, cmd_solve, cmd_validate, ProbeKind};
use dofoc_cli::spec_file::SolverOverrides;

/// Distributed-order fractional optimal control: solve, validate, probe.
#[derive(Parser)]
#[command(name = "dofoc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: OverrideArgs,
}

/// Solver settings; each flag overrides both the built-in default and the
/// spec file's `[solver]` section.
#[derive(Args)]
struct OverrideArgs {
    /// Number of uniform time steps
    #[arg(long, global = true)]
    n_steps: Option<usize>,
    /// Gauss-Legendre nodes for the order quadrature
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    /// Sweep convergence tolerance on the control update
    #[arg(long, global = true)]
    sweep_tol: Option<f64>,
    /// Inner Newton tolerance for implicit steps
    #[arg(long, global = true)]
    newton_tol: Option<f64>,
    /// Iteration cap for the inner Newton solves
    #[arg(long, global = true)]
    max_inner_iters: Option<usize>,
    /// Sweep budget before giving up
    #[arg(long, global = true)]
    max_sweeps: Option<usize>,
    /// Points per control component in the Hamiltonian line search
    #[arg(long, global = true)]
    control_grid: Option<usize>,
    /// Threshold for the extrapolated needle quotients
    #[arg(long, global = true)]
    needle_tol: Option<f64>,
    /// Initial control relaxation factor in (0, 1]
    #[arg(long, global = true)]
    gamma: Option<f64>,
}

impl OverrideArgs {
    fn into_overrides(self) -> SolverOverrides {
        SolverOverrides {
            n_steps: self.n_steps,
            quad_order: self.quad_order,
            sweep_tol: self.sweep_tol,
            newton_tol: self.newton_tol,
            max_inner_iters: self.max_inner_iters,
            max_sweeps: self.max_sweeps,
            control_grid: self.control_grid,
            needle_tol: self.needle_tol,
            gamma: self.gamma,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem in a spec file and write trajectory artifacts
    Solve {
        /// Path to the TOML problem spec
        spec: PathBuf,
        /// Directory for state.csv, control.csv, adjoint.csv, report.json
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a solved artifact directory with randomized needle variations
    Validate {
        /// Path to the TOML problem spec
        spec: PathBuf,
        /// Directory holding the solve artifacts
        #[arg(long, default_value = "out")]
        sol: PathBuf,
        /// How many random needles to draw
        #[arg(long, default_value_t = 16)]
        needles: usize,
        /// RNG seed for the needle draws
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a numerical diagnostic ladder for a spec file's problem
    Probe {
        /// Path to the TOML problem spec
        spec: PathBuf,
        /// Which diagnostic to run
        #[arg(long, value_enum)]
        kind: ProbeKind,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ov = cli.overrides.into_overrides();
    let result = match cli.command {
        Command::Solve { spec, out } => cmd_solve(&spec, &out, &ov),
        Command::Validate {
            spec,
            sol,
            needles,
            seed,
        } => cmd_validate(&spec, &sol, needles, seed, &ov),
        Command::Probe { spec, kind } => cmd_probe(&spec, kind, &ov),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.diagnostic_line());
            ExitCode::from(e.exit_code())
        }
    }
}
