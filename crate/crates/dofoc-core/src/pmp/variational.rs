//! First-order variational response to a needle perturbation: the linear
//! distributed-order system the scaled state deviation (x^θ − x*)/θ
//! approaches as the needle width shrinks to zero.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::{TimeGrid, Trajectory};
use crate::pmp::{ControlProblem, NeedleSpec, PMPSolution};
use crate::solvers::{combined_lag_weights, march};

/// Solves the variational equation on [τ, b]: the distributed-order
/// derivative of η equals ∂f/∂x(t, x*, u*)·η, driven by the dynamics jump
/// f(τ, x*, v) − f(τ, x*, u*) that the needle injects at τ.
///
/// The jump enters as a one-cell impulse in the first step (magnitude
/// jump/h), which is the discrete realization of the fractional initial
/// condition: the complementary integral of η immediately after τ picks up
/// jump/mass in the single-order limit, and each quadrature order receives
/// its proportional share under a general distribution.
///
/// τ is snapped to the nearest grid node of the reference solution; the
/// returned trajectory lives on the sub-grid [snapped τ, b] with the same
/// step size.
pub fn variational_trajectory(
    prob: &ControlProblem,
    sol: &PMPSolution,
    spec: &NeedleSpec,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    spec.validate(prob)?;
    let grid = *sol.state.grid();
    let n = grid.n_steps();
    let h = grid.h();
    let i_tau = ((spec.tau - grid.a()) / h).round() as usize;
    if i_tau + 2 > n {
        return Err(Error::InvalidInput(format!(
            "needle time {:.6} is too close to the horizon end for a variational solve",
            spec.tau
        )));
    }
    let t0 = grid.node(i_tau);
    let n_sub = n - i_tau;
    let sub = TimeGrid::new(t0, grid.b(), n_sub)?;

    let x_tau = sol.state.row(i_tau);
    let u_tau = sol.control.row(i_tau);
    let f_needle = (prob.dynamics)(t0, x_tau, &spec.v);
    let f_ref = (prob.dynamics)(t0, x_tau, u_tau);
    let jump: Vec<f64> = f_needle.iter().zip(&f_ref).map(|(a, b)| a - b).collect();

    let dim = prob.state_dim();
    let c = combined_lag_weights(&prob.dist, n_sub, h);
    let zero = vec![0.0; dim];
    let values = march(&c, &zero, n_sub, cfg, |i, eta| {
        let gi = i_tau + i;
        let t = grid.node(gi);
        let jac = prob.dynamics_jacobian(t, sol.state.row(gi), sol.control.row(gi));
        let mut out = vec![0.0; dim];
        for r in 0..dim {
            for (cidx, e) in eta.iter().enumerate() {
                out[r] += jac[r * dim + cidx] * e;
            }
        }
        if i == 1 {
            for (o, j) in out.iter_mut().zip(&jump) {
                *o += j / h;
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::DynamicsEvaluation { step: i });
        }
        Ok(out)
    })?;
    Trajectory::from_flat(sub, dim, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::build_distribution;
    use crate::pmp::{apply_needle, ControlBox};
    use std::sync::Arc;

    fn control_only_problem() -> ControlProblem {
        // Dynamics depend on the control alone, so the variational system
        // after the impulse is the distributed-order analogue of η' = 0.
        ControlProblem {
            dynamics: Arc::new(|_, _, u: &[f64]| vec![u[0]]),
            dynamics_dx: Some(Arc::new(|_, _, _| vec![0.0])),
            cost: Arc::new(|_, x: &[f64], _| x[0]),
            cost_dx: Some(Arc::new(|_, _, _| vec![1.0])),
            control_affine: true,
            omega: ControlBox::new(vec![(0.0, 2.0)]).unwrap(),
            x0: vec![0.0],
            horizon: (0.0, 1.0),
            dist: build_distribution(|_| 1.0, 12).unwrap(),
        }
    }

    fn reference_solution(p: &ControlProblem, cfg: &SolverConfig, u_val: f64) -> PMPSolution {
        let grid = p.grid_for(cfg).unwrap();
        let control = Trajectory::constant(grid, &[u_val]).unwrap();
        let state = p.solve_state(&control, cfg).unwrap();
        let cost_value = p.running_cost(&state, &control).unwrap();
        PMPSolution {
            adjoint: Trajectory::zeros(grid, 1).unwrap(),
            state,
            control,
            cost_value,
            sweep_iterations: 0,
            converged: true,
            hamiltonian_residual: 0.0,
            transversality_residual: 0.0,
        }
    }

    #[test]
    fn zero_jump_gives_identically_zero_response() {
        let p = control_only_problem();
        let mut cfg = SolverConfig::default();
        cfg.n_steps = 80;
        let sol = reference_solution(&p, &cfg, 0.5);
        let spec = NeedleSpec::new(0.5, vec![0.5], 0.1);
        let eta = variational_trajectory(&p, &sol, &spec, &cfg).unwrap();
        assert_eq!(eta.max_abs(), 0.0);
    }

    #[test]
    fn response_matches_difference_quotient_increasingly_well() {
        // The scaled deviation (x^θ − x*)/θ must approach η as θ shrinks,
        // measured away from the needle time where the impulse layer sits.
        let p = control_only_problem();
        let mut cfg = SolverConfig::default();
        cfg.n_steps = 400;
        let sol = reference_solution(&p, &cfg, 0.5);
        let spec = NeedleSpec::new(0.5, vec![1.5], 0.1);
        let eta = variational_trajectory(&p, &sol, &spec, &cfg).unwrap();
        let grid = *sol.state.grid();
        let sub = *eta.grid();

        let gap_for = |theta: f64| -> f64 {
            let perturbed = apply_needle(&sol.control, &spec.with_theta(theta)).unwrap();
            let x_theta = p.solve_state(&perturbed, &cfg).unwrap();
            // Compare on [0.7, 1.0], bounded away from τ = 0.5.
            let mut worst = 0.0f64;
            for j in 0..sub.len() {
                let t = sub.node(j);
                if t < 0.7 {
                    continue;
                }
                let gi = grid.index_at(t + 1e-9);
                let quotient = (x_theta.scalar(gi) - sol.state.scalar(gi)) / theta;
                worst = worst.max((quotient - eta.scalar(j)).abs());
            }
            worst
        };

        let coarse = gap_for(0.1);
        let fine = gap_for(0.05);
        assert!(
            fine < coarse,
            "difference-quotient gap should shrink with theta: {fine:.3e} vs {coarse:.3e}"
        );
        assert!(eta.max_abs() > 0.0);
    }

    #[test]
    fn rejects_needle_times_at_the_horizon_end() {
        let p = control_only_problem();
        let mut cfg = SolverConfig::default();
        cfg.n_steps = 40;
        let sol = reference_solution(&p, &cfg, 0.5);
        // Valid for the problem, but snapping leaves no room to march.
        let spec = NeedleSpec::new(0.999, vec![1.5], 0.5);
        assert!(variational_trajectory(&p, &sol, &spec, &cfg).is_err());
    }
}
