//! Pointwise Hamiltonian maximization over the control box and the
//! forward–backward sweep that drives the control toward the maximum
//! condition.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::Trajectory;
use crate::pmp::{ControlProblem, PMPSolution};

/// Hard cap on the number of check-grid points per node, to keep
/// multi-dimensional scans bounded.
const MAX_GRID_POINTS: u64 = 2_000_000;

/// Smallest relaxation factor the oscillation guard may reach.
const MIN_RELAXATION: f64 = 1e-3;

fn grid_point(lo: f64, hi: f64, idx: usize, count: usize) -> f64 {
    if count == 1 || hi == lo {
        lo
    } else {
        lo + (hi - lo) * idx as f64 / (count - 1) as f64
    }
}

/// Visits every point of the per-component check grid (`count` points per
/// control dimension, endpoints included) in a fixed deterministic order.
fn visit_control_grid(
    prob: &ControlProblem,
    t: f64,
    x: &[f64],
    lam: &[f64],
    count: usize,
    mut visit: impl FnMut(&[f64], f64),
) -> Result<()> {
    let m = prob.control_dim();
    let total = (count as u64).checked_pow(m as u32);
    if total.is_none() || total.unwrap() > MAX_GRID_POINTS {
        return Err(Error::InvalidInput(format!(
            "control grid of {count} points per dimension over {m} dimensions is too large"
        )));
    }
    let mut idx = vec![0usize; m];
    let mut u = vec![0.0; m];
    loop {
        for k in 0..m {
            u[k] = grid_point(prob.omega.lo(k), prob.omega.hi(k), idx[k], count);
        }
        let h = prob.hamiltonian(t, x, &u, lam)?;
        visit(&u, h);
        let mut k = 0;
        while k < m {
            idx[k] += 1;
            if idx[k] < count {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == m {
            return Ok(());
        }
    }
}

/// Golden-section maximization of a scalar slice of the Hamiltonian.
fn golden_max(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    if !(b > a) {
        return Ok(a);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        if b - a < 1e-12 * (1.0 + a.abs() + b.abs()) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Argmax of ω ↦ H(t, x, ω, λ) over the control box.
///
/// For a control-affine Hamiltonian each component's switching coefficient
/// is read off by one symmetric difference across the box, and the argmax is
/// bang-bang: the upper bound for a positive coefficient, the lower bound
/// for a negative one, and the lower bound on an exact zero so ties resolve
/// deterministically. Otherwise a scan over `cfg.control_grid` points per
/// dimension is refined by coordinate-wise golden-section passes.
pub fn maximize_hamiltonian(
    prob: &ControlProblem,
    t: f64,
    x: &[f64],
    lam: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let m = prob.control_dim();
    if prob.control_affine {
        let base = prob.omega.midpoint();
        let mut best = base.clone();
        let mut probe = base;
        for k in 0..m {
            let (lo, hi) = (prob.omega.lo(k), prob.omega.hi(k));
            if hi == lo {
                best[k] = lo;
                continue;
            }
            let step = 0.25 * (hi - lo);
            let mid = 0.5 * (lo + hi);
            probe[k] = mid + step;
            let h_plus = prob.hamiltonian(t, x, &probe, lam)?;
            probe[k] = mid - step;
            let h_minus = prob.hamiltonian(t, x, &probe, lam)?;
            probe[k] = mid;
            best[k] = if h_plus > h_minus { hi } else { lo };
        }
        return Ok(best);
    }

    let mut best_u = prob.omega.midpoint();
    let mut best_h = f64::NEG_INFINITY;
    visit_control_grid(prob, t, x, lam, cfg.control_grid, |u, h| {
        if h > best_h {
            best_h = h;
            best_u.copy_from_slice(u);
        }
    })?;
    // Local refinement: golden-section along each coordinate inside the grid
    // cell around the best point, two passes.
    for _ in 0..2 {
        for k in 0..m {
            let (lo, hi) = (prob.omega.lo(k), prob.omega.hi(k));
            if hi == lo {
                continue;
            }
            let cell = (hi - lo) / (cfg.control_grid - 1) as f64;
            let a = (best_u[k] - cell).max(lo);
            let b = (best_u[k] + cell).min(hi);
            let mut candidate = best_u.clone();
            let refined = golden_max(
                |v| {
                    candidate[k] = v;
                    prob.hamiltonian(t, x, &candidate, lam)
                },
                a,
                b,
            )?;
            candidate[k] = refined;
            let h = prob.hamiltonian(t, x, &candidate, lam)?;
            if h > best_h {
                best_h = h;
                best_u = candidate;
            }
        }
    }
    Ok(best_u)
}

/// Max over nodes and check-grid controls of the normalized Hamiltonian
/// deficiency (H(ω) − H(u)) / (1 + |H(u)|).
fn hamiltonian_deficiency(
    prob: &ControlProblem,
    state: &Trajectory,
    control: &Trajectory,
    adjoint: &Trajectory,
    cfg: &SolverConfig,
) -> Result<f64> {
    let grid = state.grid();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..grid.len() {
        let t = grid.node(i);
        let h_star = prob.hamiltonian(t, state.row(i), control.row(i), adjoint.row(i))?;
        let mut h_best = f64::NEG_INFINITY;
        visit_control_grid(prob, t, state.row(i), adjoint.row(i), cfg.control_grid, |_, h| {
            h_best = h_best.max(h);
        })?;
        worst = worst.max((h_best - h_star) / (1.0 + h_star.abs()));
    }
    Ok(worst)
}

/// Forward–backward sweep: alternate a forward state solve, an adjoint
/// solve, and the pointwise Hamiltonian argmax, relaxing the control update
/// by a factor γ that is halved whenever the objective materially decreases
/// on two consecutive sweeps. Stops when the unrelaxed control change drops below
/// `cfg.sweep_tol`; if the sweep budget runs out first the last iterate is
/// returned with `converged = false`.
pub fn solve_pmp(prob: &ControlProblem, cfg: &SolverConfig) -> Result<PMPSolution> {
    cfg.validate()?;
    prob.validate()?;
    let grid = prob.grid_for(cfg)?;
    let mut u = Trajectory::constant(grid, &prob.omega.midpoint())?;
    let mut gamma = cfg.gamma;
    let mut previous_cost = f64::NEG_INFINITY;
    let mut decreases_in_row = 0usize;
    let mut converged = false;
    let mut sweeps = 0usize;

    for sweep in 1..=cfg.max_sweeps {
        sweeps = sweep;
        let x = prob.solve_state(&u, cfg)?;
        let costate = prob.solve_costate(&x, &u, cfg)?;
        let mut u_new = Trajectory::zeros(grid, prob.control_dim())?;
        for i in 0..grid.len() {
            let best =
                maximize_hamiltonian(prob, grid.node(i), x.row(i), costate.lambda.row(i), cfg)?;
            u_new.row_mut(i).copy_from_slice(&best);
        }
        let delta = u.max_abs_diff(&u_new)?;

        // Count only decreases that exceed the convergence tolerance, in
        // relative terms: near the fixed point the objective is flat and
        // drifts by rounding-scale amounts, which must not shrink the step.
        let cost_now = prob.running_cost(&x, &u)?;
        if cost_now < previous_cost - cfg.sweep_tol * (1.0 + previous_cost.abs()) {
            decreases_in_row += 1;
            if decreases_in_row >= 2 {
                gamma = (0.5 * gamma).max(MIN_RELAXATION);
                decreases_in_row = 0;
            }
        } else {
            decreases_in_row = 0;
        }
        previous_cost = cost_now;

        if delta < cfg.sweep_tol {
            u = u_new;
            converged = true;
            break;
        }
        for i in 0..grid.len() {
            for k in 0..prob.control_dim() {
                let blended = (1.0 - gamma) * u.get(i, k) + gamma * u_new.get(i, k);
                u.set(i, k, blended);
            }
        }
    }

    // One final consistent pass so state, adjoint, and diagnostics all
    // belong to the returned control.
    let state = prob.solve_state(&u, cfg)?;
    let costate = prob.solve_costate(&state, &u, cfg)?;
    let cost_value = prob.running_cost(&state, &u)?;
    let hamiltonian_residual = hamiltonian_deficiency(prob, &state, &u, &costate.lambda, cfg)?;
    Ok(PMPSolution {
        state,
        control: u,
        adjoint: costate.lambda,
        cost_value,
        sweep_iterations: sweeps,
        converged,
        hamiltonian_residual,
        transversality_residual: costate.transversality_residual,
    })
}
