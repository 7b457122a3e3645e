//! Optimal-control layer: problem model, Hamiltonian machinery, a
//! forward–backward sweep that enforces the pointwise maximum condition, and
//! first-order optimality diagnostics built from needle-shaped control
//! perturbations.

mod needle;
mod sweep;
mod variational;

pub use needle::{
    apply_needle, continuity_rate_probe, needle_optimality_check, ContinuityReport,
    GronwallBound, NeedleOutcome, NeedleReport,
};
pub use sweep::{maximize_hamiltonian, solve_pmp};
pub use variational::variational_trajectory;

use std::sync::Arc;

use crate::config::SolverConfig;
use crate::distribution::OrderDistribution;
use crate::error::{Error, Result};
use crate::grid::{TimeGrid, Trajectory};
use crate::operators::trapezoid;
use crate::solvers::{
    solve_adjoint, solve_forward, AdjointProblem, AdjointSolution, ForwardProblem, StateRhs,
};

/// Running cost integrand: (t, x, u) ↦ L.
pub type RunningCostFn = dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync;

/// Gradient of the running cost in the state: (t, x, u) ↦ ∂L/∂x ∈ ℝⁿ.
pub type CostGradientFn = dyn Fn(f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync;

/// Jacobian of the dynamics in the state: (t, x, u) ↦ ∂f/∂x, row-major with
/// entry i·n + j = ∂f_i/∂x_j.
pub type JacobianFn = dyn Fn(f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync;

/// Central finite-difference step used when derivative maps are absent,
/// scaled by the magnitude of the differentiated component.
const FD_STEP: f64 = 1e-6;

/// Admissible control set: a closed box, one interval per component.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBox {
    bounds: Vec<(f64, f64)>,
}

impl ControlBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidInput("control box needs at least one component".into()));
        }
        for &(lo, hi) in &bounds {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidInput(format!(
                    "control bounds must satisfy finite lo <= hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(ControlBox { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn lo(&self, k: usize) -> f64 {
        self.bounds[k].0
    }

    pub fn hi(&self, k: usize) -> f64 {
        self.bounds[k].1
    }

    pub fn width(&self, k: usize) -> f64 {
        self.bounds[k].1 - self.bounds[k].0
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    /// Membership with a small absolute slack for round-off at the faces.
    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| *v >= lo - 1e-12 && *v <= hi + 1e-12)
    }

    pub fn clamp(&self, u: &mut [f64]) {
        for (v, (lo, hi)) in u.iter_mut().zip(&self.bounds) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// A distributed-order optimal control problem: maximize the integral of the
/// running cost subject to the distributed-order Caputo state equation, a
/// fixed initial state, and box control constraints.
#[derive(Clone)]
pub struct ControlProblem {
    pub dynamics: Arc<StateRhs>,
    /// Exact state Jacobian of the dynamics; replaced by central finite
    /// differences when absent.
    pub dynamics_dx: Option<Arc<JacobianFn>>,
    pub cost: Arc<RunningCostFn>,
    /// Exact state gradient of the running cost; replaced by central finite
    /// differences when absent.
    pub cost_dx: Option<Arc<CostGradientFn>>,
    /// Declares the Hamiltonian affine in the control, which switches the
    /// pointwise maximization to the exact bang-bang rule.
    pub control_affine: bool,
    pub omega: ControlBox,
    pub x0: Vec<f64>,
    pub horizon: (f64, f64),
    pub dist: OrderDistribution,
}

impl ControlProblem {
    pub fn state_dim(&self) -> usize {
        self.x0.len()
    }

    pub fn control_dim(&self) -> usize {
        self.omega.dim()
    }

    /// True when any derivative map falls back to finite differences.
    pub fn derivatives_are_approximate(&self) -> bool {
        self.dynamics_dx.is_none() || self.cost_dx.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x0.is_empty() {
            return Err(Error::InvalidInput("empty initial state".into()));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("initial state contains non-finite values".into()));
        }
        let (a, b) = self.horizon;
        if !a.is_finite() || !b.is_finite() || !(a < b) {
            return Err(Error::InvalidInput(format!(
                "horizon needs finite a < b, got ({a}, {b})"
            )));
        }
        Ok(())
    }

    /// The time grid a solve of this problem runs on under `cfg`.
    pub fn grid_for(&self, cfg: &SolverConfig) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon.0, self.horizon.1, cfg.n_steps)
    }

    /// H(t, x, u, λ) = L(t, x, u) + λ · f(t, x, u).
    pub fn hamiltonian(&self, t: f64, x: &[f64], u: &[f64], lam: &[f64]) -> Result<f64> {
        let f = (self.dynamics)(t, x, u);
        let l = (self.cost)(t, x, u);
        let h = l + lam.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>();
        if !h.is_finite() {
            return Err(Error::Domain(format!(
                "Hamiltonian evaluated to a non-finite value at t={t}"
            )));
        }
        Ok(h)
    }

    /// ∂f/∂x at a point: the user-supplied map, or a scaled central
    /// difference per column.
    pub fn dynamics_jacobian(&self, t: f64, x: &[f64], u: &[f64]) -> Vec<f64> {
        if let Some(jac) = &self.dynamics_dx {
            return jac(t, x, u);
        }
        let n = self.state_dim();
        let mut out = vec![0.0; n * n];
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        for j in 0..n {
            let step = FD_STEP * (1.0 + x[j].abs());
            xp[j] = x[j] + step;
            xm[j] = x[j] - step;
            let fp = (self.dynamics)(t, &xp, u);
            let fm = (self.dynamics)(t, &xm, u);
            for i in 0..n {
                out[i * n + j] = (fp[i] - fm[i]) / (2.0 * step);
            }
            xp[j] = x[j];
            xm[j] = x[j];
        }
        out
    }

    /// ∂L/∂x at a point: the user-supplied map, or a scaled central
    /// difference per component.
    pub fn cost_gradient(&self, t: f64, x: &[f64], u: &[f64]) -> Vec<f64> {
        if let Some(grad) = &self.cost_dx {
            return grad(t, x, u);
        }
        let n = self.state_dim();
        let mut out = vec![0.0; n];
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        for j in 0..n {
            let step = FD_STEP * (1.0 + x[j].abs());
            xp[j] = x[j] + step;
            xm[j] = x[j] - step;
            out[j] = ((self.cost)(t, &xp, u) - (self.cost)(t, &xm, u)) / (2.0 * step);
            xp[j] = x[j];
            xm[j] = x[j];
        }
        out
    }

    /// Right-hand side of the adjoint equation: ∂H/∂x = ∂L/∂x + λᵀ·∂f/∂x.
    pub fn adjoint_rhs(&self, t: f64, x: &[f64], u: &[f64], lam: &[f64]) -> Vec<f64> {
        let n = self.state_dim();
        let jac = self.dynamics_jacobian(t, x, u);
        let mut g = self.cost_gradient(t, x, u);
        for (j, gj) in g.iter_mut().enumerate() {
            for (i, li) in lam.iter().enumerate() {
                *gj += li * jac[i * n + j];
            }
        }
        g
    }

    /// Forward state solve under a given control (on the control's grid).
    pub fn solve_state(&self, control: &Trajectory, cfg: &SolverConfig) -> Result<Trajectory> {
        let problem = ForwardProblem {
            rhs: Arc::clone(&self.dynamics),
            control: control.clone(),
            x0: self.x0.clone(),
            dist: self.dist.clone(),
            grid: *control.grid(),
        };
        solve_forward(&problem, cfg)
    }

    /// Adjoint solve along frozen state and control trajectories.
    pub fn solve_costate(
        &self,
        state: &Trajectory,
        control: &Trajectory,
        cfg: &SolverConfig,
    ) -> Result<AdjointSolution> {
        let me = self.clone();
        let problem = AdjointProblem {
            rhs: Arc::new(move |t, x, u, lam| me.adjoint_rhs(t, x, u, lam)),
            state: state.clone(),
            control: control.clone(),
            dist: self.dist.clone(),
            grid: *state.grid(),
        };
        solve_adjoint(&problem, cfg)
    }

    /// Objective value: trapezoid rule over the running-cost samples.
    pub fn running_cost(&self, state: &Trajectory, control: &Trajectory) -> Result<f64> {
        if state.grid() != control.grid() {
            return Err(Error::InvalidInput(
                "state and control are sampled on different grids".into(),
            ));
        }
        let grid = state.grid();
        let samples: Vec<f64> = (0..grid.len())
            .map(|i| (self.cost)(grid.node(i), state.row(i), control.row(i)))
            .collect();
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("running cost evaluated to a non-finite value".into()));
        }
        Ok(trapezoid(&samples, grid.h()))
    }
}

/// Output of the forward–backward sweep.
#[derive(Debug, Clone)]
pub struct PMPSolution {
    pub state: Trajectory,
    pub control: Trajectory,
    pub adjoint: Trajectory,
    pub cost_value: f64,
    pub sweep_iterations: usize,
    /// False when the sweep budget ran out before the control settled; the
    /// fields then hold the last iterate.
    pub converged: bool,
    /// Max over nodes and check-grid controls ω of
    /// (H(ω) − H(u*)) / (1 + |H(u*)|): at a pointwise maximizer this is ≈ 0
    /// from below, and a positive value bounds how much some admissible
    /// control beats the returned one, relative to the local Hamiltonian
    /// scale.
    pub hamiltonian_residual: f64,
    /// |I^{1−ψ} λ| near the terminal time (natural boundary condition in
    /// integral form).
    pub transversality_residual: f64,
}

/// A needle-shaped control perturbation: replace the control by `v` on the
/// window [τ−θ, τ).
#[derive(Debug, Clone, PartialEq)]
pub struct NeedleSpec {
    pub tau: f64,
    pub v: Vec<f64>,
    pub theta: f64,
}

impl NeedleSpec {
    pub fn new(tau: f64, v: Vec<f64>, theta: f64) -> Self {
        NeedleSpec { tau, v, theta }
    }

    /// The same needle with a different width.
    pub fn with_theta(&self, theta: f64) -> Self {
        NeedleSpec {
            tau: self.tau,
            v: self.v.clone(),
            theta,
        }
    }

    pub fn validate(&self, prob: &ControlProblem) -> Result<()> {
        let (a, b) = prob.horizon;
        if !self.tau.is_finite() || self.tau < a || self.tau >= b {
            return Err(Error::InvalidInput(format!(
                "needle time {} outside [{a}, {b})",
                self.tau
            )));
        }
        if !(self.theta > 0.0) || self.tau - self.theta < a - 1e-12 {
            return Err(Error::InvalidInput(format!(
                "needle width {} must be positive with tau - theta >= {a}",
                self.theta
            )));
        }
        if !prob.omega.contains(&self.v) {
            return Err(Error::InvalidInput(
                "needle control value lies outside the admissible box".into(),
            ));
        }
        Ok(())
    }
}

/// Times where any control component jumps by more than half its admissible
/// width between adjacent nodes; each reported time is the midpoint of the
/// straddling node pair.
pub fn switch_times(control: &Trajectory, omega: &ControlBox) -> Vec<f64> {
    let grid = control.grid();
    let mut times = Vec::new();
    for i in 1..grid.len() {
        let jumped = (0..control.dim()).any(|k| {
            let w = omega.width(k);
            w > 0.0 && (control.get(i, k) - control.get(i - 1, k)).abs() > 0.5 * w
        });
        if jumped {
            times.push(0.5 * (grid.node(i - 1) + grid.node(i)));
        }
    }
    times
}
