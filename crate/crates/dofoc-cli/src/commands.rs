//! The three CLI commands: solve a spec into trajectory artifacts, validate
//! an artifact directory with randomized needle variations, and run
//! numerical diagnostic ladders.

use std::fs;
use std::path::Path;

use dofoc_core::operators::integration_by_parts_residual;
use dofoc_core::pmp::{
    apply_needle, continuity_rate_probe, needle_optimality_check, solve_pmp, switch_times,
    variational_trajectory, ControlProblem, NeedleSpec, PMPSolution,
};
use dofoc_core::{TimeGrid, Trajectory};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::csv_io::{read_trajectory, write_trajectory};
use crate::error::CliError;
use crate::report::{write_json, SolveReport, ValidateReport};
use crate::spec_file::{load_spec_file, BuiltProblem, SolverOverrides};

/// Which diagnostic `probe` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProbeKind {
    /// Duality-pairing residual across a grid-refinement ladder.
    Operators,
    /// State-deviation scaling of a shrinking needle (Hölder-rate fit).
    Continuity,
    /// Difference quotients of the state against the variational response.
    Variational,
}

fn solver_err(e: dofoc_core::Error) -> CliError {
    CliError::Solver(e.to_string())
}

/// Solves the problem spec and writes `state.csv`, `control.csv`, `adjoint.csv`,
/// and `report.json` into `out_dir`. Exit 0 on convergence, 3 when the
/// sweep budget ran out (the best iterate is still written).
pub fn cmd_solve(spec_path: &Path, out_dir: &Path, ov: &SolverOverrides) -> Result<u8, CliError> {
    let built = load_spec_file(spec_path)?.build(ov)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let sol = solve_pmp(&built.problem, &built.config).map_err(solver_err)?;
    let switches = switch_times(&sol.control, &built.problem.omega);

    write_trajectory(&out_dir.join("state.csv"), &sol.state, "x")?;
    write_trajectory(&out_dir.join("control.csv"), &sol.control, "u")?;
    write_trajectory(&out_dir.join("adjoint.csv"), &sol.adjoint, "l")?;
    let report = SolveReport::new(
        spec_path,
        &built.problem,
        &built.psi_kind,
        &built.config,
        &sol,
        switches.clone(),
    );
    write_json(&out_dir.join("report.json"), &report)?;

    println!(
        "solve: converged={} sweeps={} objective={:.6e}",
        sol.converged, sol.sweep_iterations, sol.cost_value
    );
    println!(
        "solve: hamiltonian_residual={:.3e} transversality_residual={:.3e}",
        sol.hamiltonian_residual, sol.transversality_residual
    );
    let switch_list = switches
        .iter()
        .map(|t| format!("{t:.6}"))
        .collect::<Vec<_>>()
        .join(", ");
    println!("solve: switch_times=[{switch_list}]");
    println!("solve: artifacts={}", out_dir.display());
    Ok(if sol.converged { 0 } else { 3 })
}

/// Reads one artifact and checks it against the expected grid and dimension.
fn read_checked(
    dir: &Path,
    file: &str,
    grid: TimeGrid,
    expect_dim: usize,
) -> Result<Trajectory, CliError> {
    let path = dir.join(file);
    let (times, dim, values) = read_trajectory(&path)?;
    if dim != expect_dim {
        return Err(CliError::Mismatch(format!(
            "{file}: has {dim} components, spec expects {expect_dim}"
        )));
    }
    if times.len() != grid.len() {
        return Err(CliError::Mismatch(format!(
            "{file}: has {} rows, spec grid has {} nodes",
            times.len(),
            grid.len()
        )));
    }
    let tol = 1e-9 * (1.0 + grid.b().abs());
    for (i, t) in times.iter().enumerate() {
        if (t - grid.node(i)).abs() > tol {
            return Err(CliError::Mismatch(format!(
                "{file}: node {i} at t={t}, spec grid has t={}",
                grid.node(i)
            )));
        }
    }
    Trajectory::from_flat(grid, expect_dim, values)
        .map_err(|e| CliError::Mismatch(format!("{file}: {e}")))
}

/// Draws `count` random needle specs: τ uniform over interior nodes far
/// enough from the left end, v uniform over the control box, θ uniform over
/// [4 grid steps, (τ−a)/2].
fn draw_needles(
    prob: &ControlProblem,
    grid: TimeGrid,
    count: usize,
    seed: u64,
) -> Result<Vec<NeedleSpec>, CliError> {
    let n = grid.n_steps();
    if n < 9 {
        return Err(CliError::Parse(format!(
            "needle drawing needs at least 9 time steps, grid has {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = grid.h();
    let a = grid.a();
    let mut specs = Vec::with_capacity(count);
    for _ in 0..count {
        let i = rng.random_range(8..n);
        let tau = grid.node(i);
        let theta = rng.random_range(4.0 * h..=(tau - a) / 2.0);
        let v: Vec<f64> = (0..prob.control_dim())
            .map(|k| rng.random_range(prob.omega.lo(k)..=prob.omega.hi(k)))
            .collect();
        specs.push(NeedleSpec::new(tau, v, theta));
    }
    Ok(specs)
}

/// Re-checks a solved artifact directory with randomized needle variations.
/// Exit 0 when every needle passes, 3 on a failed check, 2 on grid mismatch.
pub fn cmd_validate(
    spec_path: &Path,
    sol_dir: &Path,
    needles: usize,
    seed: u64,
    ov: &SolverOverrides,
) -> Result<u8, CliError> {
    let built = load_spec_file(spec_path)?.build(ov)?;
    let BuiltProblem {
        problem, config, ..
    } = &built;
    let grid = problem.grid_for(config).map_err(solver_err)?;
    let state = read_checked(sol_dir, "state.csv", grid, problem.state_dim())?;
    let control = read_checked(sol_dir, "control.csv", grid, problem.control_dim())?;
    let adjoint = read_checked(sol_dir, "adjoint.csv", grid, problem.state_dim())?;
    let cost_value = problem.running_cost(&state, &control).map_err(solver_err)?;
    let sol = PMPSolution {
        state,
        control,
        adjoint,
        cost_value,
        sweep_iterations: 0,
        converged: true,
        hamiltonian_residual: 0.0,
        transversality_residual: 0.0,
    };

    if needles == 0 {
        let warning = "needle count is 0; nothing was checked".to_string();
        eprintln!("dofoc: warning: {warning}");
        let empty = dofoc_core::pmp::NeedleReport {
            outcomes: Vec::new(),
            pass: true,
            tolerance: config.needle_tol,
        };
        let report =
            ValidateReport::from_needles(spec_path, sol_dir, seed, 0, config, &empty, Some(warning));
        write_json(&sol_dir.join("validate_report.json"), &report)?;
        println!("validate: needles=0 seed={seed} pass=true");
        return Ok(0);
    }

    let specs = draw_needles(problem, grid, needles, seed)?;
    let needle_report = needle_optimality_check(problem, &sol, &specs, config).map_err(solver_err)?;
    for (k, o) in needle_report.outcomes.iter().enumerate() {
        let v = o
            .spec
            .v
            .iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
            .join(",");
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        match (o.extrapolated, &o.note) {
            (Some(limit), _) => println!(
                "needle {:02}: tau={:.4} theta={:.4} v=[{v}] limit={limit:+.4e} {verdict}",
                k + 1,
                o.spec.tau,
                o.spec.theta,
            ),
            (None, note) => println!(
                "needle {:02}: tau={:.4} theta={:.4} v=[{v}] skipped ({}) {verdict}",
                k + 1,
                o.spec.tau,
                o.spec.theta,
                note.as_deref().unwrap_or("no data"),
            ),
        }
    }
    let report = ValidateReport::from_needles(
        spec_path,
        sol_dir,
        seed,
        needles,
        config,
        &needle_report,
        None,
    );
    write_json(&sol_dir.join("validate_report.json"), &report)?;
    println!(
        "validate: needles={needles} seed={seed} pass={}",
        needle_report.pass
    );
    Ok(if needle_report.pass { 0 } else { 3 })
}

/// Runs one diagnostic ladder and prints a table plus a final summary line
/// `probe: kind=... pass=...`. Exit 0 on pass, 3 on fail.
pub fn cmd_probe(spec_path: &Path, kind: ProbeKind, ov: &SolverOverrides) -> Result<u8, CliError> {
    let built = load_spec_file(spec_path)?.build(ov)?;
    match kind {
        ProbeKind::Operators => probe_operators(&built),
        ProbeKind::Continuity => probe_continuity(&built),
        ProbeKind::Variational => probe_variational(&built),
    }
}

const PROBE_LADDER_STEPS: [usize; 4] = [500, 1000, 2000, 4000];

fn probe_operators(built: &BuiltProblem) -> Result<u8, CliError> {
    let (a, b) = built.problem.horizon;
    let mut residuals = Vec::with_capacity(PROBE_LADDER_STEPS.len());
    println!("probe kind=operators (duality pairing of sin(t-a) against (t-a)^2)");
    println!("{:>8}  {:>14}", "n_steps", "residual");
    for n in PROBE_LADDER_STEPS {
        let grid = TimeGrid::new(a, b, n).map_err(solver_err)?;
        let x = Trajectory::from_fn(grid, 1, |t| vec![(t - a).sin()]).map_err(solver_err)?;
        let y = Trajectory::from_fn(grid, 1, |t| vec![(t - a) * (t - a)]).map_err(solver_err)?;
        let r = integration_by_parts_residual(&x, &y, &built.problem.dist).map_err(solver_err)?;
        println!("{n:>8}  {r:>14.6e}");
        residuals.push(r);
    }
    let pass = residuals.windows(2).all(|w| w[1] < w[0]);
    let list = residuals
        .iter()
        .map(|r| format!("{r:.6e}"))
        .collect::<Vec<_>>()
        .join(",");
    println!("probe: kind=operators residuals=[{list}] pass={pass}");
    Ok(if pass { 0 } else { 3 })
}

/// Midpoint needle against the lower corner of the control box: the default
/// perturbation the scaling probes use.
fn midpoint_needle(built: &BuiltProblem, theta: f64) -> NeedleSpec {
    let (a, b) = built.problem.horizon;
    let v: Vec<f64> = (0..built.problem.control_dim())
        .map(|k| built.problem.omega.lo(k))
        .collect();
    NeedleSpec::new(a + 0.5 * (b - a), v, theta)
}

fn probe_continuity(built: &BuiltProblem) -> Result<u8, CliError> {
    let (a, b) = built.problem.horizon;
    let sol = solve_pmp(&built.problem, &built.config).map_err(solver_err)?;
    let ladder: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|r| r * (b - a))
        .collect();
    let spec = midpoint_needle(built, ladder[0]);
    let rep = continuity_rate_probe(&built.problem, &sol, &spec, &ladder, None, &built.config)
        .map_err(solver_err)?;
    println!(
        "probe kind=continuity (needle at tau={:.4}, v at the box lower corner)",
        spec.tau
    );
    println!("{:>12}  {:>14}", "theta", "deviation");
    for (theta, dev) in &rep.deviations {
        println!("{theta:>12.6}  {dev:>14.6e}");
    }
    if rep.degenerate {
        println!("deviations are all zero: the needle does not change the control");
        println!("probe: kind=continuity exponent=0.0e0 monotone=true degenerate=true pass=true");
        return Ok(0);
    }
    match &rep.bound {
        Some(bound) => println!(
            "growth-envelope constant {:.6e} (holds={})",
            bound.constant, bound.holds
        ),
        None => println!("growth-envelope constant not representable for this problem"),
    }
    let pass = rep.monotone && rep.exponent > 0.0 && rep.exponent <= 1.2;
    println!(
        "probe: kind=continuity exponent={:.6e} monotone={} degenerate=false pass={pass}",
        rep.exponent, rep.monotone
    );
    Ok(if pass { 0 } else { 3 })
}

fn probe_variational(built: &BuiltProblem) -> Result<u8, CliError> {
    let (a, b) = built.problem.horizon;
    let sol = solve_pmp(&built.problem, &built.config).map_err(solver_err)?;
    let thetas: Vec<f64> = [0.016, 0.008, 0.004, 0.002]
        .iter()
        .map(|r| r * (b - a))
        .collect();
    let spec = midpoint_needle(built, thetas[0]);
    let eta = variational_trajectory(&built.problem, &sol, &spec, &built.config)
        .map_err(solver_err)?;
    let grid = *sol.state.grid();
    let sub = *eta.grid();
    let window_start = a + 0.625 * (b - a);

    let mut gaps = Vec::with_capacity(thetas.len());
    for &theta in &thetas {
        let perturbed = apply_needle(&sol.control, &spec.with_theta(theta)).map_err(solver_err)?;
        let x_theta = built
            .problem
            .solve_state(&perturbed, &built.config)
            .map_err(solver_err)?;
        let mut worst = 0.0f64;
        for j in 0..sub.len() {
            let t = sub.node(j);
            if t < window_start {
                continue;
            }
            let gi = grid.index_at(t + 1e-9);
            for d in 0..built.problem.state_dim() {
                let quotient = (x_theta.get(gi, d) - sol.state.get(gi, d)) / theta;
                worst = worst.max((quotient - eta.get(j, d)).abs());
            }
        }
        gaps.push(worst);
    }
    println!(
        "probe kind=variational (needle at tau={:.4}, window [{window_start:.4}, {b:.4}])",
        spec.tau
    );
    println!("{:>12}  {:>14}", "theta", "gap");
    for (theta, gap) in thetas.iter().zip(&gaps) {
        println!("{theta:>12.6}  {gap:>14.6e}");
    }
    if gaps.iter().all(|g| *g == 0.0) {
        println!("gaps are all zero: the needle does not change the control");
        println!("probe: kind=variational ratios=[] degenerate=true pass=true");
        return Ok(0);
    }
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[1] / w[0]).collect();
    let pass = ratios.iter().all(|r| (0.35..=0.8).contains(r));
    let list = ratios
        .iter()
        .map(|r| format!("{r:.6}"))
        .collect::<Vec<_>>()
        .join(",");
    println!("probe: kind=variational ratios=[{list}] degenerate=false pass={pass}");
    Ok(if pass { 0 } else { 3 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dofoc_core::distribution::build_distribution;
    use dofoc_core::pmp::ControlBox;
    use std::sync::Arc;

    fn toy_problem() -> ControlProblem {
        ControlProblem {
            dynamics: Arc::new(|_t, x: &[f64], _u: &[f64]| vec![0.0; x.len()]),
            dynamics_dx: None,
            cost: Arc::new(|_t, _x: &[f64], u: &[f64]| -u[0] * u[0]),
            cost_dx: None,
            control_affine: false,
            omega: ControlBox::new(vec![(-1.0, 2.0)]).unwrap(),
            x0: vec![1.0],
            horizon: (0.0, 1.0),
            dist: build_distribution(|_| 1.0, 10).unwrap(),
        }
    }

    #[test]
    fn needle_draws_are_deterministic_per_seed_and_respect_bounds() {
        let p = toy_problem();
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let first = draw_needles(&p, grid, 32, 7).unwrap();
        let second = draw_needles(&p, grid, 32, 7).unwrap();
        let other = draw_needles(&p, grid, 32, 8).unwrap();
        for (a, b) in first.iter().zip(&second) {
            assert_eq!(a.tau, b.tau);
            assert_eq!(a.theta, b.theta);
            assert_eq!(a.v, b.v);
        }
        assert!(first
            .iter()
            .zip(&other)
            .any(|(a, b)| a.tau != b.tau || a.theta != b.theta || a.v != b.v));
        let h = grid.h();
        for s in &first {
            assert!(s.tau >= 8.0 * h - 1e-15 && s.tau < 1.0);
            assert!(s.theta >= 4.0 * h - 1e-15 && s.theta <= (s.tau - 0.0) / 2.0 + 1e-15);
            assert!(s.v[0] >= -1.0 && s.v[0] <= 2.0);
            s.validate(&p).unwrap();
        }
    }

    #[test]
    fn needle_drawing_rejects_tiny_grids() {
        let p = toy_problem();
        let grid = TimeGrid::new(0.0, 1.0, 8).unwrap();
        let err = draw_needles(&p, grid, 4, 0).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
