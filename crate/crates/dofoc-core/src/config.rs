//! Solver configuration knobs with library-wide defaults.

use crate::error::{Error, Result};

/// Tunable parameters shared by the grid operators, the marching solvers, and
/// the control-optimization layer. Construct with [`SolverConfig::default`]
/// and override individual fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Number of uniform time steps (grid has `n_steps + 1` nodes).
    pub n_steps: usize,
    /// Gauss–Legendre order for the order-distribution quadrature.
    pub quad_order: usize,
    /// Stop threshold for the forward–backward sweep: max-norm control change.
    pub sweep_tol: f64,
    /// Stop threshold for the per-step fixed-point iteration, applied in the
    /// mixed sense `|Δ| ≤ newton_tol · (1 + |x|)`.
    pub newton_tol: f64,
    /// Iteration budget of the per-step fixed-point solve.
    pub max_inner_iters: usize,
    /// Sweep budget of the forward–backward iteration.
    pub max_sweeps: usize,
    /// Points per control dimension for the argmax grid scan.
    pub control_grid: usize,
    /// Acceptance threshold for extrapolated needle quotients ΔJ/θ.
    pub needle_tol: f64,
    /// Initial relaxation factor of the sweep update `u ← (1−γ)u + γu_new`.
    pub gamma: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_steps: 2000,
            quad_order: 20,
            sweep_tol: 1e-6,
            newton_tol: 1e-10,
            max_inner_iters: 200,
            max_sweeps: 500,
            control_grid: 101,
            needle_tol: 1e-3,
            gamma: 0.5,
        }
    }
}

impl SolverConfig {
    /// Checks the structural invariants (everything positive, grid usable).
    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 2 {
            return Err(Error::InvalidInput(format!(
                "n_steps must be at least 2, got {}",
                self.n_steps
            )));
        }
        if self.quad_order < 2 {
            return Err(Error::InvalidInput(format!(
                "quad_order must be at least 2, got {}",
                self.quad_order
            )));
        }
        if self.control_grid < 2 {
            return Err(Error::InvalidInput(format!(
                "control_grid must be at least 2, got {}",
                self.control_grid
            )));
        }
        if self.max_inner_iters == 0 || self.max_sweeps == 0 {
            return Err(Error::InvalidInput(
                "iteration budgets must be positive".into(),
            ));
        }
        for (name, v) in [
            ("sweep_tol", self.sweep_tol),
            ("newton_tol", self.newton_tol),
            ("needle_tol", self.needle_tol),
            ("gamma", self.gamma),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be a positive finite number, got {v}"
                )));
            }
        }
        if self.gamma > 1.0 {
            return Err(Error::InvalidInput(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}
