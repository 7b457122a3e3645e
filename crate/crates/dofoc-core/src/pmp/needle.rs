//! Needle-shaped control perturbations and the diagnostics built on them:
//! the first-order optimality check (the difference quotient of the
//! objective must not be positive in the vanishing-width limit) and the
//! state-continuity rate probe.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::Trajectory;
use crate::pmp::{ControlProblem, NeedleSpec, PMPSolution};
use crate::special_functions::{gamma_fn, mittag_leffler, MLParams};

/// Replaces the control by `spec.v` on grid nodes inside [τ−θ, τ). Errors
/// when the window contains no node, since the perturbation would silently
/// vanish.
pub fn apply_needle(u: &Trajectory, spec: &NeedleSpec) -> Result<Trajectory> {
    if spec.v.len() != u.dim() {
        return Err(Error::InvalidInput(format!(
            "needle value has {} components, control has {}",
            spec.v.len(),
            u.dim()
        )));
    }
    if !(spec.theta > 0.0) {
        return Err(Error::InvalidInput("needle width must be positive".into()));
    }
    let grid = *u.grid();
    let mut out = u.clone();
    let mut hits = 0usize;
    for i in 0..grid.len() {
        let t = grid.node(i);
        if t >= spec.tau - spec.theta - 1e-12 && t < spec.tau - 1e-12 {
            out.row_mut(i).copy_from_slice(&spec.v);
            hits += 1;
        }
    }
    if hits == 0 {
        return Err(Error::InvalidInput(format!(
            "needle window [{:.6}, {:.6}) contains no grid node; refine the grid or widen theta",
            spec.tau - spec.theta,
            spec.tau
        )));
    }
    Ok(out)
}

/// Outcome of the optimality check for one needle.
#[derive(Debug, Clone)]
pub struct NeedleOutcome {
    pub spec: NeedleSpec,
    /// (θ, ΔJ/θ) along the width ladder, widest first.
    pub quotients: Vec<(f64, f64)>,
    /// Extrapolated θ → 0⁺ limit of ΔJ/θ; absent when the spec was skipped.
    pub extrapolated: Option<f64>,
    pub pass: bool,
    /// Populated when the spec could not be evaluated (e.g. unresolvable
    /// window) and was skipped.
    pub note: Option<String>,
}

/// Aggregate report over a batch of needle specs.
#[derive(Debug, Clone)]
pub struct NeedleReport {
    pub outcomes: Vec<NeedleOutcome>,
    /// True when every evaluated needle passed.
    pub pass: bool,
    /// The threshold the extrapolated quotients were compared against.
    pub tolerance: f64,
}

/// Extrapolates the θ → 0⁺ limit from quotients on a halving ladder. When
/// the successive differences decay geometrically a one-step Richardson
/// correction is applied; otherwise the finest quotient is the estimate.
fn extrapolate_limit(values: &[f64]) -> f64 {
    let k = values.len();
    if k == 0 {
        return 0.0;
    }
    if k < 3 {
        return values[k - 1];
    }
    let d1 = values[k - 3] - values[k - 2];
    let d2 = values[k - 2] - values[k - 1];
    if d2 == 0.0 {
        return values[k - 1];
    }
    let ratio = d1 / d2;
    if ratio <= 1.0 {
        // Sign flip or no decay: extrapolation would be unstable.
        return values[k - 1];
    }
    let p = ratio.log2();
    if p <= 0.05 {
        return values[k - 1];
    }
    values[k - 1] + (values[k - 1] - values[k - 2]) / (2f64.powf(p) - 1.0)
}

/// First-order optimality check: for each spec, re-solves the state under
/// needles of width θ, θ/2, θ/4, θ/8, forms the objective difference
/// quotients ΔJ/θ, and extrapolates to θ → 0⁺. A converged maximizer must
/// not admit a positive limit, so each needle passes when its extrapolated
/// quotient is at most `cfg.needle_tol`.
pub fn needle_optimality_check(
    prob: &ControlProblem,
    sol: &PMPSolution,
    specs: &[NeedleSpec],
    cfg: &SolverConfig,
) -> Result<NeedleReport> {
    let base_cost = prob.running_cost(&sol.state, &sol.control)?;
    let mut outcomes = Vec::with_capacity(specs.len());
    for spec in specs {
        spec.validate(prob)?;
        let mut quotients = Vec::with_capacity(4);
        let mut note = None;
        for level in 0..4 {
            let theta = spec.theta / 2f64.powi(level);
            let trial = spec.with_theta(theta);
            let perturbed = match apply_needle(&sol.control, &trial) {
                Ok(u) => u,
                Err(e) => {
                    note = Some(format!("width {theta:.6} skipped: {e}"));
                    break;
                }
            };
            let state = prob.solve_state(&perturbed, cfg)?;
            let cost = prob.running_cost(&state, &perturbed)?;
            quotients.push((theta, (cost - base_cost) / theta));
        }
        let outcome = if quotients.is_empty() {
            NeedleOutcome {
                spec: spec.clone(),
                quotients,
                extrapolated: None,
                pass: true,
                note,
            }
        } else {
            let values: Vec<f64> = quotients.iter().map(|q| q.1).collect();
            let limit = extrapolate_limit(&values);
            NeedleOutcome {
                spec: spec.clone(),
                quotients,
                extrapolated: Some(limit),
                pass: limit <= cfg.needle_tol,
                note,
            }
        };
        outcomes.push(outcome);
    }
    let pass = outcomes.iter().all(|o| o.pass);
    Ok(NeedleReport {
        outcomes,
        pass,
        tolerance: cfg.needle_tol,
    })
}

/// Upper-bound line attached to the continuity probe: the constant in the
/// Grönwall-type estimate d(θ) ≤ ϖ·θ^p, assembled from a state Lipschitz
/// constant and a control-jump bound through the one-parameter
/// Mittag-Leffler function.
#[derive(Debug, Clone)]
pub struct GronwallBound {
    pub constant: f64,
    /// Whether every measured deviation sits below the bound line.
    pub holds: bool,
    /// Lipschitz constant of the dynamics in the state used in the bound.
    pub lipschitz: f64,
    /// Bound on the dynamics jump induced by the control replacement.
    pub control_jump: f64,
}

/// Result of the state-continuity rate probe.
#[derive(Debug, Clone)]
pub struct ContinuityReport {
    /// (θ, max-norm state deviation), widest first.
    pub deviations: Vec<(f64, f64)>,
    /// Least-squares slope of log d vs log θ (the empirical Hölder rate).
    pub exponent: f64,
    /// Least-squares intercept: log of the empirical deviation constant.
    pub log_intercept: f64,
    /// Deviations shrink monotonically with θ.
    pub monotone: bool,
    /// All deviations were zero (needle equals the optimal control); no fit
    /// is possible.
    pub degenerate: bool,
    pub bound: Option<GronwallBound>,
}

/// Measures how fast the perturbed state returns to the reference state as
/// the needle width shrinks: solves the state under the needle at each
/// ladder width, fits log-deviation against log-width, and reports the
/// fitted exponent together with an upper-bound sanity line evaluated at
/// the fitted rate. `constants` optionally supplies (Lipschitz, jump-bound)
/// values; otherwise both are estimated by sampling the reference solution.
pub fn continuity_rate_probe(
    prob: &ControlProblem,
    sol: &PMPSolution,
    spec: &NeedleSpec,
    theta_ladder: &[f64],
    constants: Option<(f64, f64)>,
    cfg: &SolverConfig,
) -> Result<ContinuityReport> {
    if theta_ladder.len() < 2 {
        return Err(Error::InvalidInput("theta ladder needs at least two widths".into()));
    }
    if theta_ladder.windows(2).any(|w| !(w[1] < w[0])) || theta_ladder.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidInput(
            "theta ladder must be strictly decreasing and positive".into(),
        ));
    }
    spec.validate(prob)?;

    let mut deviations = Vec::with_capacity(theta_ladder.len());
    for &theta in theta_ladder {
        let perturbed = apply_needle(&sol.control, &spec.with_theta(theta))?;
        let state = prob.solve_state(&perturbed, cfg)?;
        deviations.push((theta, state.max_abs_diff(&sol.state)?));
    }
    let monotone = deviations.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12));

    let positive: Vec<(f64, f64)> = deviations
        .iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|&(t, d)| (t.ln(), d.ln()))
        .collect();
    if positive.len() < 2 {
        return Ok(ContinuityReport {
            deviations,
            exponent: 0.0,
            log_intercept: f64::NEG_INFINITY,
            monotone,
            degenerate: true,
            bound: None,
        });
    }

    // Least-squares line through (ln θ, ln d).
    let n = positive.len() as f64;
    let sx: f64 = positive.iter().map(|p| p.0).sum();
    let sy: f64 = positive.iter().map(|p| p.1).sum();
    let sxx: f64 = positive.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = positive.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let exponent = (n * sxy - sx * sy) / denom;
    let log_intercept = (sy - exponent * sx) / n;

    let bound = gronwall_bound(prob, sol, spec, &deviations, exponent, constants);
    Ok(ContinuityReport {
        deviations,
        exponent,
        log_intercept,
        monotone,
        degenerate: false,
        bound,
    })
}

/// Evaluates the Grönwall-type upper-bound line at the fitted rate. Returns
/// None when the rate leaves the admissible order range or the special
/// functions refuse the evaluation.
fn gronwall_bound(
    prob: &ControlProblem,
    sol: &PMPSolution,
    spec: &NeedleSpec,
    deviations: &[(f64, f64)],
    exponent: f64,
    constants: Option<(f64, f64)>,
) -> Option<GronwallBound> {
    if !(exponent > 0.0) || exponent > 1.0 + 1e-9 {
        return None;
    }
    let p = exponent.min(1.0);
    let (k, m_jump) = match constants {
        Some(pair) => pair,
        None => estimate_constants(prob, sol, spec),
    };
    let mass = prob.dist.mass();
    let (a, b) = prob.horizon;
    let gamma_p1 = gamma_fn(p + 1.0).ok()?;
    let ml = mittag_leffler(&MLParams::new(p).ok()?, k * (b - a).powf(p)).ok()?;
    let constant = 2.0 * m_jump / (mass * gamma_p1) * ml;
    if !constant.is_finite() {
        return None;
    }
    let holds = deviations
        .iter()
        .all(|&(t, d)| d <= constant * t.powf(p) * (1.0 + 1e-9));
    Some(GronwallBound {
        constant,
        holds,
        lipschitz: k,
        control_jump: m_jump,
    })
}

/// Samples the reference solution to estimate the state Lipschitz constant
/// of the dynamics (max ∞-norm of the Jacobian) and the dynamics jump
/// caused by swapping the control for the needle value.
fn estimate_constants(prob: &ControlProblem, sol: &PMPSolution, spec: &NeedleSpec) -> (f64, f64) {
    let grid = sol.state.grid();
    let n = grid.n_steps();
    let stride = (n / 16).max(1);
    let dim = prob.state_dim();
    let mut k = 0.0f64;
    let mut m_jump = 0.0f64;
    let mut i = 0;
    while i <= n {
        let t = grid.node(i);
        let x = sol.state.row(i);
        let u = sol.control.row(i);
        let jac = prob.dynamics_jacobian(t, x, u);
        for r in 0..dim {
            let row_sum: f64 = jac[r * dim..(r + 1) * dim].iter().map(|v| v.abs()).sum();
            k = k.max(row_sum);
        }
        let f_ref = (prob.dynamics)(t, x, u);
        let f_swap = (prob.dynamics)(t, x, &spec.v);
        for (a, b) in f_ref.iter().zip(&f_swap) {
            m_jump = m_jump.max((a - b).abs());
        }
        i += stride;
    }
    (k, m_jump)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{build_bump_distribution, build_distribution};
    use crate::grid::TimeGrid;
    use crate::pmp::{solve_pmp, ControlBox};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn quadratic_penalty_problem() -> ControlProblem {
        // No dynamics, cost −u² (to be maximized): the optimum is u ≡ 0.
        ControlProblem {
            dynamics: Arc::new(|_, _, _| vec![0.0]),
            dynamics_dx: None,
            cost: Arc::new(|_, _, u: &[f64]| -u[0] * u[0]),
            cost_dx: None,
            control_affine: false,
            omega: ControlBox::new(vec![(-1.0, 1.0)]).unwrap(),
            x0: vec![0.0],
            horizon: (0.0, 1.0),
            dist: build_distribution(|_| 1.0, 10).unwrap(),
        }
    }

    #[test]
    fn needle_replaces_exactly_the_window_nodes() {
        let grid = TimeGrid::new(1.0, 5.0, 40).unwrap();
        let u = Trajectory::constant(grid, &[2.0]).unwrap();
        let spec = NeedleSpec::new(3.0, vec![0.0], 0.5);
        let out = apply_needle(&u, &spec).unwrap();
        for i in 0..grid.len() {
            let t = grid.node(i);
            let expected = if (2.5..3.0).contains(&t) { 0.0 } else { 2.0 };
            assert_eq!(out.scalar(i), expected, "node {i} at t={t}");
        }
    }

    #[test]
    fn unresolvable_window_is_an_error() {
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let u = Trajectory::constant(grid, &[0.0]).unwrap();
        // Window (0.51, 0.55): strictly between adjacent nodes 0.5 and 0.6.
        let spec = NeedleSpec::new(0.55, vec![1.0], 0.04);
        assert!(apply_needle(&u, &spec).is_err());
    }

    #[test]
    fn matching_value_leaves_control_identical() {
        let grid = TimeGrid::new(0.0, 1.0, 20).unwrap();
        let u = Trajectory::constant(grid, &[0.7]).unwrap();
        let out = apply_needle(&u, &NeedleSpec::new(0.5, vec![0.7], 0.2)).unwrap();
        assert_eq!(out, u);
    }

    #[test]
    fn optimality_check_passes_at_the_optimum_and_zero_perturbation() {
        let p = quadratic_penalty_problem();
        let mut cfg = SolverConfig::default();
        cfg.n_steps = 100;
        let sol = solve_pmp(&p, &cfg).unwrap();
        let specs = vec![
            NeedleSpec::new(0.5, vec![0.7], 0.2),
            // Same value as the optimal control: zero perturbation.
            NeedleSpec::new(0.5, vec![0.0], 0.2),
        ];
        let report = needle_optimality_check(&p, &sol, &specs, &cfg).unwrap();
        assert!(report.pass);
        // Replacing u = 0 by 0.7 on the window lowers the objective by
        // 0.49·θ, so the quotient sits near −0.49.
        let q = report.outcomes[0].extrapolated.unwrap();
        assert!(q < -0.3, "quotient {q}");
        // The zero perturbation yields exactly zero quotients.
        for (_, v) in &report.outcomes[1].quotients {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn optimality_check_flags_a_suboptimal_control() {
        let p = quadratic_penalty_problem();
        let mut cfg = SolverConfig::default();
        cfg.n_steps = 100;
        let grid = p.grid_for(&cfg).unwrap();
        // Hand-built suboptimal candidate u ≡ 0.9.
        let control = Trajectory::constant(grid, &[0.9]).unwrap();
        let state = p.solve_state(&control, &cfg).unwrap();
        let cost_value = p.running_cost(&state, &control).unwrap();
        let fake = PMPSolution {
            adjoint: Trajectory::zeros(grid, 1).unwrap(),
            state,
            control,
            cost_value,
            sweep_iterations: 0,
            converged: true,
            hamiltonian_residual: 0.0,
            transversality_residual: 0.0,
        };
        // Swapping to u = 0 on the window raises the objective: positive
        // quotient, so the check must fail.
        let specs = vec![NeedleSpec::new(0.5, vec![0.0], 0.2)];
        let report = needle_optimality_check(&p, &fake, &specs, &cfg).unwrap();
        assert!(!report.pass);
        assert!(report.outcomes[0].extrapolated.unwrap() > 0.5);
    }

    #[test]
    fn extrapolation_guards_fall_back_to_finest_quotient() {
        // Geometric decay toward 1.0 extrapolates past the finest entry.
        let v = [2.0, 1.5, 1.25, 1.125];
        assert_relative_eq!(extrapolate_limit(&v), 1.0, epsilon = 1e-12);
        // Non-decaying differences: keep the finest value.
        let flat = [1.0, 1.2, 1.0, 1.2];
        assert_eq!(extrapolate_limit(&flat), 1.2);
        assert_eq!(extrapolate_limit(&[3.0, 3.0, 3.0, 3.0]), 3.0);
        assert_eq!(extrapolate_limit(&[0.5]), 0.5);
    }

    #[test]
    fn continuity_probe_classical_limit_has_unit_rate() {
        // Order weight concentrated at α = 1: classical ODE perturbation
        // theory applies and the deviation is linear in the needle width.
        let p = ControlProblem {
            dynamics: Arc::new(|_, x: &[f64], u: &[f64]| vec![-x[0] + u[0]]),
            dynamics_dx: Some(Arc::new(|_, _, _| vec![-1.0])),
            cost: Arc::new(|_, _, _| 0.0),
            cost_dx: Some(Arc::new(|_, _, _| vec![0.0])),
            control_affine: true,
            omega: ControlBox::new(vec![(0.0, 1.0)]).unwrap(),
            x0: vec![1.0],
            horizon: (0.0, 1.0),
            dist: build_bump_distribution(1.0, 1e-3, 20).unwrap(),
        };
        let mut cfg = SolverConfig::default();
        cfg.n_steps = 500;
        let grid = p.grid_for(&cfg).unwrap();
        let control = Trajectory::constant(grid, &[0.2]).unwrap();
        let state = p.solve_state(&control, &cfg).unwrap();
        let cost_value = p.running_cost(&state, &control).unwrap();
        let sol = PMPSolution {
            adjoint: Trajectory::zeros(grid, 1).unwrap(),
            state,
            control,
            cost_value,
            sweep_iterations: 0,
            converged: true,
            hamiltonian_residual: 0.0,
            transversality_residual: 0.0,
        };
        let spec = NeedleSpec::new(0.5, vec![0.8], 0.2);
        let ladder = [0.2, 0.1, 0.05, 0.025];
        let report = continuity_rate_probe(&p, &sol, &spec, &ladder, None, &cfg).unwrap();
        assert!(report.monotone);
        assert!(!report.degenerate);
        assert!(
            (report.exponent - 1.0).abs() <= 0.15,
            "fitted rate {} should be close to 1",
            report.exponent
        );
        let bound = report.bound.expect("bound line should evaluate");
        assert!(bound.holds, "deviations must sit below the bound line");
    }

    #[test]
    fn continuity_probe_degenerates_on_zero_perturbation() {
        let p = quadratic_penalty_problem();
        let mut cfg = SolverConfig::default();
        cfg.n_steps = 60;
        let sol = solve_pmp(&p, &cfg).unwrap();
        let spec = NeedleSpec::new(0.5, vec![0.0], 0.2);
        let report =
            continuity_rate_probe(&p, &sol, &spec, &[0.2, 0.1], None, &cfg).unwrap();
        assert!(report.degenerate);
        assert!(report.monotone);
        assert!(report.bound.is_none());
    }

    #[test]
    fn continuity_probe_rejects_bad_ladders() {
        let p = quadratic_penalty_problem();
        let mut cfg = SolverConfig::default();
        cfg.n_steps = 60;
        let sol = solve_pmp(&p, &cfg).unwrap();
        let spec = NeedleSpec::new(0.5, vec![0.3], 0.2);
        assert!(continuity_rate_probe(&p, &sol, &spec, &[0.2], None, &cfg).is_err());
        assert!(continuity_rate_probe(&p, &sol, &spec, &[0.1, 0.2], None, &cfg).is_err());
    }
}
