//! Structural properties of the fractional operators and special functions
//! over randomized inputs: linearity, left/right mirror symmetry, quadrature
//! exactness, the gamma recurrence, and Mittag-Leffler monotonicity.

use dofoc_core::distribution::{build_distribution, build_distribution_on, gauss_legendre};
use dofoc_core::operators::{
    caputo_derivative_left, do_caputo_left, do_rl_right, integration_by_parts_residual,
    reverse_time, rl_integral_left, rl_integral_right,
};
use dofoc_core::{gamma_fn, mittag_leffler, MLParams, TimeGrid, Trajectory};
use proptest::prelude::*;

fn poly_traj(grid: TimeGrid, coeffs: &[f64]) -> Trajectory {
    Trajectory::from_fn(grid, 1, |t| {
        vec![coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)]
    })
    .unwrap()
}

fn lin_comb(a: f64, f: &Trajectory, b: f64, g: &Trajectory) -> Trajectory {
    let grid = *f.grid();
    Trajectory::from_scalar_samples(
        grid,
        (0..grid.len())
            .map(|i| a * f.scalar(i) + b * g.scalar(i))
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fractional_integral_is_linear(
        c in proptest::collection::vec(-2.0f64..2.0, 4),
        d in proptest::collection::vec(-2.0f64..2.0, 4),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        order in 0.05f64..1.0,
    ) {
        let grid = TimeGrid::new(0.0, 1.0, 64).unwrap();
        let f = poly_traj(grid, &c);
        let g = poly_traj(grid, &d);
        let combined = rl_integral_left(&lin_comb(a, &f, b, &g), order).unwrap();
        let separate = lin_comb(
            a,
            &rl_integral_left(&f, order).unwrap(),
            b,
            &rl_integral_left(&g, order).unwrap(),
        );
        let scale = 1.0 + combined.max_abs().max(separate.max_abs());
        prop_assert!(combined.max_abs_diff(&separate).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn distributed_caputo_is_linear(
        c in proptest::collection::vec(-2.0f64..2.0, 4),
        d in proptest::collection::vec(-2.0f64..2.0, 4),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let grid = TimeGrid::new(0.0, 1.0, 64).unwrap();
        let dist = build_distribution(|al| 1.0 + al, 12).unwrap();
        let f = poly_traj(grid, &c);
        let g = poly_traj(grid, &d);
        let combined = do_caputo_left(&lin_comb(a, &f, b, &g), &dist).unwrap();
        let separate = lin_comb(
            a,
            &do_caputo_left(&f, &dist).unwrap(),
            b,
            &do_caputo_left(&g, &dist).unwrap(),
        );
        let scale = 1.0 + combined.max_abs().max(separate.max_abs());
        prop_assert!(combined.max_abs_diff(&separate).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn right_operators_mirror_left_operators(
        c in proptest::collection::vec(-2.0f64..2.0, 4),
        order in 0.05f64..1.0,
    ) {
        // Applying the right-sided integral to f is the time reversal of
        // applying the left-sided one to the reversed samples.
        let grid = TimeGrid::new(0.5, 2.0, 80).unwrap();
        let f = poly_traj(grid, &c);
        let mirrored = reverse_time(&rl_integral_left(&reverse_time(&f), order).unwrap());
        let direct = rl_integral_right(&f, order).unwrap();
        prop_assert_eq!(direct.values(), mirrored.values());
    }

    #[test]
    fn quadrature_integrates_polynomials_exactly(
        degree in 0usize..16,
        quad_order in 8usize..13,
    ) {
        // A Gauss rule with q nodes is exact through degree 2q − 1.
        prop_assume!(degree <= 2 * quad_order - 1);
        let exact = 1.0 / (degree + 1) as f64;
        let dist = build_distribution_on(0.0, 1.0, |a| a.powi(degree as i32), quad_order);
        match dist {
            Ok(d) => prop_assert!((d.mass() - exact).abs() <= 1e-13),
            // Odd powers vanish at 0 only; mass stays positive, so the
            // build never fails for these weights.
            Err(e) => prop_assert!(false, "distribution build failed: {e}"),
        }
    }

    #[test]
    fn gamma_satisfies_the_recurrence(x in 0.5f64..20.0) {
        let left = gamma_fn(x + 1.0).unwrap();
        let right = x * gamma_fn(x).unwrap();
        prop_assert!((left - right).abs() <= 1e-12 * right.abs());
    }

    #[test]
    fn gauss_weights_are_positive_and_sum_to_two(order in 2usize..40) {
        let (nodes, weights) = gauss_legendre(order).unwrap();
        prop_assert_eq!(nodes.len(), order);
        prop_assert!(weights.iter().all(|w| *w > 0.0));
        let total: f64 = weights.iter().sum();
        prop_assert!((total - 2.0).abs() <= 1e-12);
    }
}

#[test]
fn mittag_leffler_is_increasing_on_its_reliable_range() {
    // Sample grids per order, each inside the window where the series
    // converges to the target accuracy before the term budget runs out (the
    // window shrinks as the order decreases).
    let envelopes = [
        (1.0, 50.0),
        (0.9, 50.0),
        (0.75, 50.0),
        (0.6, 20.0),
        (0.5, 12.0),
        (0.3, 2.0),
    ];
    for (alpha, z_max) in envelopes {
        let params = MLParams::new(alpha).unwrap();
        let mut prev = mittag_leffler(&params, 0.0).unwrap();
        for k in 1..=40 {
            let z = z_max * k as f64 / 40.0;
            let val = mittag_leffler(&params, z).unwrap();
            assert!(
                val > prev,
                "E_{alpha} must increase on [0, {z_max}]: failed at z={z}"
            );
            prev = val;
        }
    }
}

#[test]
fn pairing_residual_shrinks_under_refinement() {
    // The discrete integration-by-parts identity between a Caputo-side and
    // an RL-side trajectory closes at a positive rate on smooth data.
    let dist = build_distribution(|a| 6.0 * a * (1.0 - a), 16).unwrap();
    let residual_at = |n: usize| {
        let grid = TimeGrid::new(0.0, 1.0, n).unwrap();
        let x = Trajectory::from_fn(grid, 1, |t| vec![(1.0 - t) * (1.0 - t)]).unwrap();
        let y = Trajectory::from_fn(grid, 1, |t| vec![t * t * (1.0 + t)]).unwrap();
        integration_by_parts_residual(&x, &y, &dist).unwrap()
    };
    let r200 = residual_at(200);
    let r400 = residual_at(400);
    let r800 = residual_at(800);
    assert!(
        r400 < r200 && r800 < r400,
        "residuals must decrease: {r200:.3e}, {r400:.3e}, {r800:.3e}"
    );
    assert!(r800 <= 1e-3, "fine-grid residual {r800:.3e}");
}

#[test]
fn distributed_right_derivative_matches_manual_weighting() {
    // The distributed operator is the quadrature-weighted sum of its
    // single-order slices; recombine by hand and compare bitwise.
    use dofoc_core::operators::rl_derivative_right;
    let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
    let x = Trajectory::from_fn(grid, 1, |t| vec![t * (2.0 - t)]).unwrap();
    let dist = build_distribution(|a| 0.5 + a, 10).unwrap();
    let combined = do_rl_right(&x, &dist).unwrap();
    let mut manual = vec![0.0; grid.len()];
    for (alpha, coeff) in dist.terms() {
        let part = rl_derivative_right(&x, alpha).unwrap();
        for (m, v) in manual.iter_mut().zip(part.values()) {
            *m += coeff * v;
        }
    }
    for (got, want) in combined.values().iter().zip(&manual) {
        assert_eq!(got, want);
    }
}

#[test]
fn single_order_caputo_agrees_with_distributed_on_a_point_mass() {
    use dofoc_core::distribution::build_bump_distribution;
    let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
    let x = Trajectory::from_fn(grid, 1, |t| vec![t * t]).unwrap();
    let bump = build_bump_distribution(0.4, 1e-8, 12).unwrap();
    let distributed = do_caputo_left(&x, &bump).unwrap();
    let single = caputo_derivative_left(&x, 0.4).unwrap();
    let gap = distributed.max_abs_diff(&single).unwrap();
    assert!(gap <= 1e-6, "point-mass gap {gap:.3e}");
}
