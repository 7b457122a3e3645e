//! On-disk problem definitions: a strict TOML schema that builds into a
//! `ControlProblem` plus a `SolverConfig`. Unknown keys are rejected, and
//! every field that does not apply to the chosen `kind` of a section is
//! rejected too, so a typo cannot silently change the problem.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use dofoc_core::distribution::{build_bump_distribution, build_distribution, OrderDistribution};
use dofoc_core::pmp::{ControlBox, ControlProblem};
use dofoc_core::SolverConfig;
use serde::Deserialize;

use crate::builtins::{builtin_cost, builtin_dynamics, BUILTIN_NAMES};
use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpecFile {
    /// Initial state x(a); its length fixes the state dimension.
    pub initial_state: Vec<f64>,
    pub horizon: HorizonSection,
    pub psi: PsiSection,
    pub dynamics: DynamicsSection,
    pub cost: CostSection,
    /// One `{lo, hi}` entry per control component; the count fixes the
    /// control dimension.
    pub omega: Vec<BoundsSection>,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSection {
    pub a: f64,
    pub b: f64,
}

/// Order-weight section. `kind` selects which of the remaining fields apply:
/// `"polynomial"` uses `coefficients` (low degree first), `"constant"` uses
/// `value`, `"bump"` uses `center` and `width`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiSection {
    pub kind: String,
    pub coefficients: Option<Vec<f64>>,
    pub value: Option<f64>,
    pub center: Option<f64>,
    pub width: Option<f64>,
}

/// Dynamics section. `kind = "builtin"` uses `name`; `kind = "affine"` uses
/// the tables of f(t, x, u) = A·x + B·u + d: `a` is state×state, `b` is
/// state×control, `d` (optional, default zero) is a constant drift.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub kind: String,
    pub name: Option<String>,
    pub a: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<Vec<f64>>>,
    pub d: Option<Vec<f64>>,
}

/// Running-cost section. `kind = "builtin"` uses `name`; `kind = "affine"`
/// uses the tables of L(t, x, u) = q·x + r·u + c.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub kind: String,
    pub name: Option<String>,
    pub q: Option<Vec<f64>>,
    pub r: Option<Vec<f64>>,
    pub c: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub lo: f64,
    pub hi: f64,
}

/// Solver overrides allowed in the file; anything omitted keeps the library
/// default. The per-step iteration budget is fixed by the library and is
/// only reachable through the command-line override.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub n_steps: Option<usize>,
    pub quad_order: Option<usize>,
    pub sweep_tol: Option<f64>,
    pub newton_tol: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub control_grid: Option<usize>,
    pub needle_tol: Option<f64>,
    pub gamma: Option<f64>,
}

/// Command-line overrides; applied after the file's solver section.
#[derive(Debug, Default, Clone)]
pub struct SolverOverrides {
    pub n_steps: Option<usize>,
    pub quad_order: Option<usize>,
    pub sweep_tol: Option<f64>,
    pub newton_tol: Option<f64>,
    pub max_inner_iters: Option<usize>,
    pub max_sweeps: Option<usize>,
    pub control_grid: Option<usize>,
    pub needle_tol: Option<f64>,
    pub gamma: Option<f64>,
}

/// A fully assembled problem ready to hand to the solver, plus the echo
/// data reports need.
pub struct BuiltProblem {
    pub problem: ControlProblem,
    pub config: SolverConfig,
    pub psi_kind: String,
}

impl std::fmt::Debug for BuiltProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BuiltProblem")
            .field("state_dim", &self.problem.state_dim())
            .field("control_dim", &self.problem.control_dim())
            .field("horizon", &self.problem.horizon)
            .field("psi_kind", &self.psi_kind)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

/// Reads and parses a spec file; all failures are parse-class.
pub fn load_spec_file(path: &Path) -> Result<ProblemSpecFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read spec {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Parse(format!("spec parse error: {e}")))
}

fn require<T>(field: Option<T>, section: &str, name: &str, kind: &str) -> Result<T, CliError> {
    field.ok_or_else(|| {
        CliError::Parse(format!(
            "{section}: field `{name}` is required for kind = \"{kind}\""
        ))
    })
}

fn forbid<T>(field: &Option<T>, section: &str, name: &str, kind: &str) -> Result<(), CliError> {
    if field.is_some() {
        return Err(CliError::Parse(format!(
            "{section}: field `{name}` does not apply to kind = \"{kind}\""
        )));
    }
    Ok(())
}

fn all_finite(values: &[f64], what: &str) -> Result<(), CliError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Parse(format!("{what} must be finite")));
    }
    Ok(())
}

impl ProblemSpecFile {
    /// Resolves the effective solver configuration: library defaults, then
    /// the file's solver section, then command-line overrides.
    pub fn resolve_config(&self, overrides: &SolverOverrides) -> Result<SolverConfig, CliError> {
        let mut cfg = SolverConfig::default();
        let s = &self.solver;
        if let Some(v) = s.n_steps {
            cfg.n_steps = v;
        }
        if let Some(v) = s.quad_order {
            cfg.quad_order = v;
        }
        if let Some(v) = s.sweep_tol {
            cfg.sweep_tol = v;
        }
        if let Some(v) = s.newton_tol {
            cfg.newton_tol = v;
        }
        if let Some(v) = s.max_sweeps {
            cfg.max_sweeps = v;
        }
        if let Some(v) = s.control_grid {
            cfg.control_grid = v;
        }
        if let Some(v) = s.needle_tol {
            cfg.needle_tol = v;
        }
        if let Some(v) = s.gamma {
            cfg.gamma = v;
        }
        let o = overrides;
        if let Some(v) = o.n_steps {
            cfg.n_steps = v;
        }
        if let Some(v) = o.quad_order {
            cfg.quad_order = v;
        }
        if let Some(v) = o.sweep_tol {
            cfg.sweep_tol = v;
        }
        if let Some(v) = o.newton_tol {
            cfg.newton_tol = v;
        }
        if let Some(v) = o.max_inner_iters {
            cfg.max_inner_iters = v;
        }
        if let Some(v) = o.max_sweeps {
            cfg.max_sweeps = v;
        }
        if let Some(v) = o.control_grid {
            cfg.control_grid = v;
        }
        if let Some(v) = o.needle_tol {
            cfg.needle_tol = v;
        }
        if let Some(v) = o.gamma {
            cfg.gamma = v;
        }
        cfg.validate()
            .map_err(|e| CliError::Parse(format!("solver: {e}")))?;
        Ok(cfg)
    }

    fn build_distribution(&self, quad_order: usize) -> Result<(OrderDistribution, String), CliError> {
        let p = &self.psi;
        let dist = match p.kind.as_str() {
            "polynomial" => {
                forbid(&p.value, "psi", "value", "polynomial")?;
                forbid(&p.center, "psi", "center", "polynomial")?;
                forbid(&p.width, "psi", "width", "polynomial")?;
                let coeffs =
                    require(p.coefficients.clone(), "psi", "coefficients", "polynomial")?;
                if coeffs.is_empty() {
                    return Err(CliError::Parse(
                        "psi: coefficients must not be empty".into(),
                    ));
                }
                all_finite(&coeffs, "psi: coefficients")?;
                let eval = move |alpha: f64| {
                    coeffs.iter().rev().fold(0.0, |acc, c| acc * alpha + c)
                };
                // The quadrature only sees its own nodes; check sign on a
                // dense sample so a weight that dips negative between nodes
                // is caught here with a parse-class error.
                for k in 0..=2000 {
                    let alpha = k as f64 / 2000.0;
                    if eval(alpha) < -1e-12 {
                        return Err(CliError::Parse(format!(
                            "psi: weight is negative at alpha = {alpha}"
                        )));
                    }
                }
                build_distribution(eval, quad_order)
            }
            "constant" => {
                forbid(&p.coefficients, "psi", "coefficients", "constant")?;
                forbid(&p.center, "psi", "center", "constant")?;
                forbid(&p.width, "psi", "width", "constant")?;
                let value = require(p.value, "psi", "value", "constant")?;
                if !(value > 0.0) || !value.is_finite() {
                    return Err(CliError::Parse(format!(
                        "psi: constant value must be positive and finite, got {value}"
                    )));
                }
                build_distribution(move |_| value, quad_order)
            }
            "bump" => {
                forbid(&p.coefficients, "psi", "coefficients", "bump")?;
                forbid(&p.value, "psi", "value", "bump")?;
                let center = require(p.center, "psi", "center", "bump")?;
                let width = require(p.width, "psi", "width", "bump")?;
                build_bump_distribution(center, width, quad_order)
            }
            other => {
                return Err(CliError::Parse(format!(
                    "psi: unknown kind \"{other}\", expected \"polynomial\", \"constant\", or \"bump\""
                )))
            }
        }
        .map_err(|e| CliError::Parse(format!("psi: {e}")))?;
        Ok((dist, p.kind.clone()))
    }

    /// Builds the runnable problem. All inconsistencies are parse-class
    /// errors that name the offending section.
    pub fn build(&self, overrides: &SolverOverrides) -> Result<BuiltProblem, CliError> {
        let (a, b) = (self.horizon.a, self.horizon.b);
        if !a.is_finite() || !b.is_finite() || !(a < b) {
            return Err(CliError::Parse(format!(
                "horizon: need finite a < b, got a = {a}, b = {b}"
            )));
        }
        if self.initial_state.is_empty() {
            return Err(CliError::Parse("initial_state: must not be empty".into()));
        }
        all_finite(&self.initial_state, "initial_state")?;
        let n = self.initial_state.len();
        if self.omega.is_empty() {
            return Err(CliError::Parse("omega: need at least one component".into()));
        }
        let m = self.omega.len();
        let bounds: Vec<(f64, f64)> = self.omega.iter().map(|w| (w.lo, w.hi)).collect();
        let omega = ControlBox::new(bounds).map_err(|e| CliError::Parse(format!("omega: {e}")))?;

        let config = self.resolve_config(overrides)?;
        let (dist, psi_kind) = self.build_distribution(config.quad_order)?;

        let dyn_part = self.build_dynamics(n, m)?;
        let cost_part = self.build_cost(n, m)?;

        let problem = ControlProblem {
            dynamics: dyn_part.f,
            dynamics_dx: Some(dyn_part.jacobian),
            cost: cost_part.l,
            cost_dx: Some(cost_part.gradient),
            control_affine: dyn_part.affine_in_control && cost_part.affine_in_control,
            omega,
            x0: self.initial_state.clone(),
            horizon: (a, b),
            dist,
        };
        problem
            .validate()
            .map_err(|e| CliError::Parse(format!("problem: {e}")))?;
        Ok(BuiltProblem {
            problem,
            config,
            psi_kind,
        })
    }

    fn build_dynamics(&self, n: usize, m: usize) -> Result<crate::builtins::DynamicsPart, CliError> {
        let d = &self.dynamics;
        match d.kind.as_str() {
            "builtin" => {
                forbid(&d.a, "dynamics", "a", "builtin")?;
                forbid(&d.b, "dynamics", "b", "builtin")?;
                forbid(&d.d, "dynamics", "d", "builtin")?;
                let name = require(d.name.clone(), "dynamics", "name", "builtin")?;
                let part = builtin_dynamics(&name).ok_or_else(|| {
                    CliError::Parse(format!(
                        "dynamics: unknown builtin \"{name}\", available: {}",
                        BUILTIN_NAMES.join(", ")
                    ))
                })?;
                check_dims("dynamics", &name, part.dims, n, m)?;
                Ok(part)
            }
            "affine" => {
                forbid(&d.name, "dynamics", "name", "affine")?;
                let a_rows = require(d.a.clone(), "dynamics", "a", "affine")?;
                let b_rows = require(d.b.clone(), "dynamics", "b", "affine")?;
                let drift = d.d.clone().unwrap_or_else(|| vec![0.0; n]);
                let a_flat = check_matrix("dynamics: a", &a_rows, n, n)?;
                let b_flat = check_matrix("dynamics: b", &b_rows, n, m)?;
                if drift.len() != n {
                    return Err(CliError::Parse(format!(
                        "dynamics: d has {} entries, state dimension is {n}",
                        drift.len()
                    )));
                }
                all_finite(&drift, "dynamics: d")?;
                let (af, bf, df) = (a_flat.clone(), b_flat, drift);
                let f = Arc::new(move |_t: f64, x: &[f64], u: &[f64]| {
                    (0..n)
                        .map(|i| {
                            let ax: f64 = (0..n).map(|j| af[i * n + j] * x[j]).sum();
                            let bu: f64 = (0..m).map(|k| bf[i * m + k] * u[k]).sum();
                            ax + bu + df[i]
                        })
                        .collect::<Vec<f64>>()
                });
                let jac_flat = a_flat;
                let jacobian =
                    Arc::new(move |_t: f64, _x: &[f64], _u: &[f64]| jac_flat.clone());
                Ok(crate::builtins::DynamicsPart {
                    f,
                    jacobian,
                    affine_in_control: true,
                    dims: Some((n, m)),
                })
            }
            other => Err(CliError::Parse(format!(
                "dynamics: unknown kind \"{other}\", expected \"builtin\" or \"affine\""
            ))),
        }
    }

    fn build_cost(&self, n: usize, m: usize) -> Result<crate::builtins::CostPart, CliError> {
        let c = &self.cost;
        match c.kind.as_str() {
            "builtin" => {
                forbid(&c.q, "cost", "q", "builtin")?;
                forbid(&c.r, "cost", "r", "builtin")?;
                forbid(&c.c, "cost", "c", "builtin")?;
                let name = require(c.name.clone(), "cost", "name", "builtin")?;
                let part = builtin_cost(&name).ok_or_else(|| {
                    CliError::Parse(format!(
                        "cost: unknown builtin \"{name}\", available: {}",
                        BUILTIN_NAMES.join(", ")
                    ))
                })?;
                check_dims("cost", &name, part.dims, n, m)?;
                Ok(part)
            }
            "affine" => {
                forbid(&c.name, "cost", "name", "affine")?;
                let q = require(c.q.clone(), "cost", "q", "affine")?;
                let r = require(c.r.clone(), "cost", "r", "affine")?;
                let offset = c.c.unwrap_or(0.0);
                if q.len() != n {
                    return Err(CliError::Parse(format!(
                        "cost: q has {} entries, state dimension is {n}",
                        q.len()
                    )));
                }
                if r.len() != m {
                    return Err(CliError::Parse(format!(
                        "cost: r has {} entries, control dimension is {m}",
                        r.len()
                    )));
                }
                all_finite(&q, "cost: q")?;
                all_finite(&r, "cost: r")?;
                if !offset.is_finite() {
                    return Err(CliError::Parse("cost: c must be finite".into()));
                }
                let (qv, rv) = (q.clone(), r);
                let l = Arc::new(move |_t: f64, x: &[f64], u: &[f64]| {
                    let qx: f64 = qv.iter().zip(x).map(|(a, b)| a * b).sum();
                    let ru: f64 = rv.iter().zip(u).map(|(a, b)| a * b).sum();
                    qx + ru + offset
                });
                let grad_q = q;
                let gradient =
                    Arc::new(move |_t: f64, _x: &[f64], _u: &[f64]| grad_q.clone());
                Ok(crate::builtins::CostPart {
                    l,
                    gradient,
                    affine_in_control: true,
                    dims: Some((n, m)),
                })
            }
            other => Err(CliError::Parse(format!(
                "cost: unknown kind \"{other}\", expected \"builtin\" or \"affine\""
            ))),
        }
    }
}

fn check_dims(
    section: &str,
    name: &str,
    dims: Option<(usize, usize)>,
    n: usize,
    m: usize,
) -> Result<(), CliError> {
    if let Some((dn, dm)) = dims {
        if dn != n || dm != m {
            return Err(CliError::Parse(format!(
                "{section}: builtin \"{name}\" expects state dimension {dn} and control dimension {dm}, \
                 spec has {n} and {m}"
            )));
        }
    }
    Ok(())
}

fn check_matrix(
    what: &str,
    rows: &[Vec<f64>],
    expect_rows: usize,
    expect_cols: usize,
) -> Result<Vec<f64>, CliError> {
    if rows.len() != expect_rows {
        return Err(CliError::Parse(format!(
            "{what} has {} rows, expected {expect_rows}",
            rows.len()
        )));
    }
    let mut flat = Vec::with_capacity(expect_rows * expect_cols);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != expect_cols {
            return Err(CliError::Parse(format!(
                "{what} row {i} has {} entries, expected {expect_cols}",
                row.len()
            )));
        }
        all_finite(row, what)?;
        flat.extend_from_slice(row);
    }
    Ok(flat)
}
