//! Order distributions: a non-negative weight ψ over the order interval
//! [0, 1], discretized by Gauss–Legendre quadrature into a finite multi-term
//! sum Σ_j w_j ψ(α_j) · (single-order operator at α_j).

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on (−1, 1), computed by Newton iteration
/// on the Legendre three-term recurrence. Exact (to rounding) for
/// polynomials of degree ≤ 2·order − 1.
pub fn gauss_legendre(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order < 2 {
        return Err(Error::InvalidInput(format!(
            "quadrature order must be at least 2, got {order}"
        )));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess for the i-th root of P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) by the recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Ok((nodes, weights))
}

/// A weight function over fractional orders, sampled at quadrature nodes.
///
/// `nodes[j]` are order abscissae α_j in (0, 1), `weights[j]` the plain
/// quadrature weights, `psi_values[j]` = ψ(α_j), and `mass` the quadrature
/// value of ∫₀¹ ψ. The product `weights[j]·psi_values[j]` is the coefficient
/// of the α_j-order term in every discretized distributed-order operator.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderDistribution {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    psi_values: Vec<f64>,
    mass: f64,
}

/// Builds the quadrature-sampled distribution for a weight ψ on [0, 1].
pub fn build_distribution(
    weight: impl Fn(f64) -> f64,
    quad_order: usize,
) -> Result<OrderDistribution> {
    build_distribution_on(0.0, 1.0, weight, quad_order)
}

/// Same, but with the quadrature concentrated on a sub-interval
/// [lo, hi] ⊆ [0, 1] outside of which ψ is treated as zero. Needed for
/// narrow bump weights that a global rule cannot resolve.
pub fn build_distribution_on(
    lo: f64,
    hi: f64,
    weight: impl Fn(f64) -> f64,
    quad_order: usize,
) -> Result<OrderDistribution> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || !(lo < hi) {
        return Err(Error::InvalidInput(format!(
            "order support must satisfy 0 ≤ lo < hi ≤ 1, got [{lo}, {hi}]"
        )));
    }
    let (xs, ws) = gauss_legendre(quad_order)?;
    let mut nodes = Vec::with_capacity(quad_order);
    let mut weights = Vec::with_capacity(quad_order);
    let mut psi_values = Vec::with_capacity(quad_order);
    let half = (hi - lo) / 2.0;
    for (x, w) in xs.iter().zip(&ws) {
        let alpha = lo + half * (x + 1.0);
        let psi = weight(alpha);
        if !psi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "order weight is non-finite at alpha={alpha}"
            )));
        }
        if psi < -1e-12 {
            return Err(Error::InvalidInput(format!(
                "order weight is negative at alpha={alpha}: {psi}"
            )));
        }
        nodes.push(alpha);
        weights.push(half * w);
        psi_values.push(psi.max(0.0));
    }
    let mass: f64 = weights
        .iter()
        .zip(&psi_values)
        .map(|(w, p)| w * p)
        .sum();
    if !(mass > 0.0) {
        return Err(Error::InvalidInput(format!(
            "order weight has non-positive mass {mass}"
        )));
    }
    Ok(OrderDistribution {
        nodes,
        weights,
        psi_values,
        mass,
    })
}

/// A box-shaped weight of unit mass: constant on
/// [center − width/2, center + width/2] ∩ [0, 1], zero elsewhere, with the
/// constant chosen so the mass is exactly 1 even when the box is clipped at
/// an order-interval edge (e.g. a bump centered at α = 1). The quadrature is
/// placed on the support. As width shrinks the distributed operator
/// approaches the single-order operator at `center`.
pub fn build_bump_distribution(
    center: f64,
    width: f64,
    quad_order: usize,
) -> Result<OrderDistribution> {
    if !(width > 0.0) || !(0.0..=1.0).contains(&center) {
        return Err(Error::InvalidInput(format!(
            "bump needs center in [0,1] and positive width, got center={center}, width={width}"
        )));
    }
    let lo = (center - width / 2.0).max(0.0);
    let hi = (center + width / 2.0).min(1.0);
    let height = 1.0 / (hi - lo);
    build_distribution_on(lo, hi, |_| height, quad_order)
}

impl OrderDistribution {
    /// Order abscissae α_j.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Plain quadrature weights w_j (without ψ).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ψ(α_j) samples.
    pub fn psi_values(&self) -> &[f64] {
        &self.psi_values
    }

    /// Quadrature value of ∫₀¹ ψ(α) dα.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Largest order abscissa (governs the scheme's convergence order).
    pub fn alpha_max(&self) -> f64 {
        self.nodes.iter().copied().fold(0.0, f64::max)
    }

    /// The multi-term view: pairs (α_j, w_j·ψ(α_j)).
    pub fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(self.weights.iter().zip(&self.psi_values))
            .map(|(&a, (&w, &p))| (a, w * p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadrature_weights_sum_to_two() {
        for order in [2, 5, 10, 20, 40] {
            let (_, w) = gauss_legendre(order).unwrap();
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn quadrature_integrates_monomials_exactly() {
        let (x, w) = gauss_legendre(7).unwrap();
        for k in 0..=13usize {
            let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            let want = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!(
                (got - want).abs() < 1e-12,
                "degree {k}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn quadrature_nodes_are_symmetric_and_sorted() {
        let (x, _) = gauss_legendre(20).unwrap();
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        for i in 0..10 {
            assert_relative_eq!(x[i], -x[19 - i], epsilon = 1e-14);
        }
    }

    #[test]
    fn mass_of_linear_weight() {
        // ψ(α) = α/3 integrates to 1/6.
        let d = build_distribution(|a| a / 3.0, 20).unwrap();
        assert_relative_eq!(d.mass(), 1.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn mass_of_unit_weight() {
        let d = build_distribution(|_| 1.0, 10).unwrap();
        assert_relative_eq!(d.mass(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn mass_of_parabolic_weight() {
        // ψ(α) = 6α(1−α) is a normalized weight: mass exactly 1.
        let d = build_distribution(|a| 6.0 * a * (1.0 - a), 10).unwrap();
        assert_relative_eq!(d.mass(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn bump_distribution_has_unit_mass_and_tight_support() {
        let d = build_bump_distribution(0.5, 1e-3, 20).unwrap();
        assert_relative_eq!(d.mass(), 1.0, epsilon = 1e-12);
        assert!(d.nodes().iter().all(|&a| (a - 0.5).abs() <= 5e-4));
    }

    #[test]
    fn bump_clipped_at_edge_keeps_unit_mass() {
        // A bump centered at the top of the order interval loses half its box
        // to clipping; the height is renormalized so the mass stays 1.
        let d = build_bump_distribution(1.0, 1e-3, 20).unwrap();
        assert_relative_eq!(d.mass(), 1.0, epsilon = 1e-12);
        assert!(d.nodes().iter().all(|&a| a <= 1.0 && a >= 1.0 - 5.1e-4));
    }

    #[test]
    fn rejects_negative_weight_and_zero_mass() {
        assert!(build_distribution(|a| 0.5 - a, 10).is_err());
        assert!(build_distribution(|_| 0.0, 10).is_err());
        assert!(build_bump_distribution(0.5, 0.0, 10).is_err());
        assert!(build_bump_distribution(1.5, 0.1, 10).is_err());
    }

    #[test]
    fn terms_recombine_to_mass() {
        let d = build_distribution(|a| 1.0 + a * a, 15).unwrap();
        let total: f64 = d.terms().map(|(_, c)| c).sum();
        assert_relative_eq!(total, d.mass(), epsilon = 1e-15);
        assert_relative_eq!(d.mass(), 4.0 / 3.0, epsilon = 1e-13);
    }
}
