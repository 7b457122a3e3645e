//! Machine-readable run reports. Serialization is deliberately boring:
//! fixed field order (struct declaration order), no timestamps, no
//! environment capture — identical inputs must serialize identically.

use std::path::Path;

use dofoc_core::pmp::{ControlProblem, NeedleReport, PMPSolution};
use dofoc_core::SolverConfig;
use serde::Serialize;

use crate::csv_io::write_atomic;
use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct SolverEcho {
    pub n_steps: usize,
    pub quad_order: usize,
    pub sweep_tol: f64,
    pub newton_tol: f64,
    pub max_inner_iters: usize,
    pub max_sweeps: usize,
    pub control_grid: usize,
    pub needle_tol: f64,
    pub gamma: f64,
}

impl SolverEcho {
    pub fn from_config(c: &SolverConfig) -> Self {
        SolverEcho {
            n_steps: c.n_steps,
            quad_order: c.quad_order,
            sweep_tol: c.sweep_tol,
            newton_tol: c.newton_tol,
            max_inner_iters: c.max_inner_iters,
            max_sweeps: c.max_sweeps,
            control_grid: c.control_grid,
            needle_tol: c.needle_tol,
            gamma: c.gamma,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ProblemEcho {
    pub horizon: [f64; 2],
    pub state_dim: usize,
    pub control_dim: usize,
    pub psi_kind: String,
    pub psi_mass: f64,
    pub control_affine: bool,
    pub omega: Vec<[f64; 2]>,
}

impl ProblemEcho {
    pub fn from_problem(p: &ControlProblem, psi_kind: &str) -> Self {
        ProblemEcho {
            horizon: [p.horizon.0, p.horizon.1],
            state_dim: p.state_dim(),
            control_dim: p.control_dim(),
            psi_kind: psi_kind.to_string(),
            psi_mass: p.dist.mass(),
            control_affine: p.control_affine,
            omega: (0..p.control_dim())
                .map(|k| [p.omega.lo(k), p.omega.hi(k)])
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Artifacts {
    pub state: String,
    pub control: String,
    pub adjoint: String,
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub command: String,
    pub spec_path: String,
    pub problem: ProblemEcho,
    pub solver: SolverEcho,
    pub converged: bool,
    pub objective: f64,
    pub sweeps: usize,
    pub hamiltonian_residual: f64,
    pub transversality_residual: f64,
    pub switch_times: Vec<f64>,
    pub artifacts: Artifacts,
}

impl SolveReport {
    pub fn new(
        spec_path: &Path,
        problem: &ControlProblem,
        psi_kind: &str,
        config: &SolverConfig,
        sol: &PMPSolution,
        switch_times: Vec<f64>,
    ) -> Self {
        SolveReport {
            command: "solve".into(),
            spec_path: spec_path.display().to_string(),
            problem: ProblemEcho::from_problem(problem, psi_kind),
            solver: SolverEcho::from_config(config),
            converged: sol.converged,
            objective: sol.cost_value,
            sweeps: sol.sweep_iterations,
            hamiltonian_residual: sol.hamiltonian_residual,
            transversality_residual: sol.transversality_residual,
            switch_times,
            artifacts: Artifacts {
                state: "state.csv".into(),
                control: "control.csv".into(),
                adjoint: "adjoint.csv".into(),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct NeedleEcho {
    pub tau: f64,
    pub v: Vec<f64>,
    pub theta: f64,
    /// `[θ, ΔJ/θ]` rows along the width ladder, widest first.
    pub quotients: Vec<[f64; 2]>,
    pub extrapolated: Option<f64>,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ValidateReport {
    pub command: String,
    pub spec_path: String,
    pub solution_dir: String,
    pub seed: u64,
    pub needle_count: usize,
    pub warning: Option<String>,
    pub tolerance: f64,
    pub solver: SolverEcho,
    pub needles: Vec<NeedleEcho>,
    pub pass: bool,
}

impl ValidateReport {
    pub fn from_needles(
        spec_path: &Path,
        solution_dir: &Path,
        seed: u64,
        needle_count: usize,
        config: &SolverConfig,
        report: &NeedleReport,
        warning: Option<String>,
    ) -> Self {
        ValidateReport {
            command: "validate".into(),
            spec_path: spec_path.display().to_string(),
            solution_dir: solution_dir.display().to_string(),
            seed,
            needle_count,
            warning,
            tolerance: report.tolerance,
            solver: SolverEcho::from_config(config),
            needles: report
                .outcomes
                .iter()
                .map(|o| NeedleEcho {
                    tau: o.spec.tau,
                    v: o.spec.v.clone(),
                    theta: o.spec.theta,
                    quotients: o.quotients.iter().map(|&(t, q)| [t, q]).collect(),
                    extrapolated: o.extrapolated,
                    pass: o.pass,
                    note: o.note.clone(),
                })
                .collect(),
            pass: report.pass,
        }
    }
}

/// Serializes a report as pretty JSON with a trailing newline and writes it
/// atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
