//! Named dynamics and running-cost presets available to spec files. A
//! preset name keys both a dynamics part and a cost part; a spec may take
//! both sections from the same preset or mix a preset with affine tables.

use std::sync::Arc;

use dofoc_core::pmp::{CostGradientFn, JacobianFn, RunningCostFn};
use dofoc_core::solvers::StateRhs;

/// Dynamics side of a preset: right-hand side, exact state Jacobian, and
/// whether the rhs is affine in the control.
pub struct DynamicsPart {
    pub f: Arc<StateRhs>,
    pub jacobian: Arc<JacobianFn>,
    pub affine_in_control: bool,
    /// Fixed `(state_dim, control_dim)`, or `None` when any shape works.
    pub dims: Option<(usize, usize)>,
}

/// Running-cost side of a preset: integrand, exact state gradient, and
/// whether the integrand is affine in the control.
pub struct CostPart {
    pub l: Arc<RunningCostFn>,
    pub gradient: Arc<CostGradientFn>,
    pub affine_in_control: bool,
    pub dims: Option<(usize, usize)>,
}

/// Every preset name, for error messages and documentation.
pub const BUILTIN_NAMES: [&str; 3] = ["bilinear_growth", "classical_limit_lq", "zero_dynamics"];

/// Looks up the dynamics part of a preset.
///
/// - `bilinear_growth`: scalar growth steered multiplicatively, f = u·x.
/// - `classical_limit_lq`: scalar damped integrator, f = −x + u.
/// - `zero_dynamics`: f ≡ 0 in any dimension (the state never moves).
pub fn builtin_dynamics(name: &str) -> Option<DynamicsPart> {
    match name {
        "bilinear_growth" => Some(DynamicsPart {
            f: Arc::new(|_t, x: &[f64], u: &[f64]| vec![u[0] * x[0]]),
            jacobian: Arc::new(|_t, _x: &[f64], u: &[f64]| vec![u[0]]),
            affine_in_control: true,
            dims: Some((1, 1)),
        }),
        "classical_limit_lq" => Some(DynamicsPart {
            f: Arc::new(|_t, x: &[f64], u: &[f64]| vec![-x[0] + u[0]]),
            jacobian: Arc::new(|_t, _x: &[f64], _u: &[f64]| vec![-1.0]),
            affine_in_control: true,
            dims: Some((1, 1)),
        }),
        "zero_dynamics" => Some(DynamicsPart {
            f: Arc::new(|_t, x: &[f64], _u: &[f64]| vec![0.0; x.len()]),
            jacobian: Arc::new(|_t, x: &[f64], _u: &[f64]| vec![0.0; x.len() * x.len()]),
            affine_in_control: true,
            dims: None,
        }),
        _ => None,
    }
}

/// Looks up the running-cost part of a preset.
///
/// - `bilinear_growth`: L = (1 − 3u)·x (harvest yield minus effort drag).
/// - `classical_limit_lq`: L = −(x² + u²) (maximizing this minimizes the
///   usual quadratic regulator cost).
/// - `zero_dynamics`: L = −‖u‖² (any nonzero control only hurts).
pub fn builtin_cost(name: &str) -> Option<CostPart> {
    match name {
        "bilinear_growth" => Some(CostPart {
            l: Arc::new(|_t, x: &[f64], u: &[f64]| (1.0 - 3.0 * u[0]) * x[0]),
            gradient: Arc::new(|_t, _x: &[f64], u: &[f64]| vec![1.0 - 3.0 * u[0]]),
            affine_in_control: true,
            dims: Some((1, 1)),
        }),
        "classical_limit_lq" => Some(CostPart {
            l: Arc::new(|_t, x: &[f64], u: &[f64]| -(x[0] * x[0] + u[0] * u[0])),
            gradient: Arc::new(|_t, x: &[f64], _u: &[f64]| vec![-2.0 * x[0]]),
            affine_in_control: false,
            dims: Some((1, 1)),
        }),
        "zero_dynamics" => Some(CostPart {
            l: Arc::new(|_t, _x: &[f64], u: &[f64]| -u.iter().map(|v| v * v).sum::<f64>()),
            gradient: Arc::new(|_t, x: &[f64], _u: &[f64]| vec![0.0; x.len()]),
            affine_in_control: false,
            dims: None,
        }),
        _ => None,
    }
}
