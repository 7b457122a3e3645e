//! Scalar special functions: the gamma function and the two-parameter
//! Mittag-Leffler function, both for real arguments.
//!
//! Everything here is a stateless pure function, safe to call concurrently.

use crate::error::{Error, Result};

/// Absolute accuracy target promised by [`mittag_leffler`] on its supported
/// range; evaluations whose internal error estimate exceeds it (in the mixed
/// absolute/relative sense described on the function) are refused.
pub const ML_ACCURACY_TARGET: f64 = 1e-10;

/// Hard cap on series terms; past this the evaluation is refused with the
/// best achieved estimate rather than silently truncated.
pub const ML_MAX_TERMS: usize = 500;

// Lanczos approximation, g = 7, nine coefficients. Relative accuracy is a
// few 1e-15 across the positive axis, comfortably beyond the 12 significant
// digits required of this function on [0.1, 50].
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_series(x: f64) -> f64 {
    // x >= 0.5 assumed; series argument is x-1 in the classic formulation.
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x - 1.0 + i as f64);
    }
    acc
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

/// Γ(x) for real x away from the poles at 0, −1, −2, …
///
/// Accurate to at least 12 significant digits on [0.1, 50] (measured a few
/// 1e-15 relative against a high-precision reference). Negative non-integer
/// arguments are handled by the reflection formula. Arguments so large that
/// Γ overflows f64 return `+inf`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("gamma_fn: non-finite argument {x}")));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Domain(format!(
            "gamma_fn: pole at non-positive integer {x}"
        )));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x) Γ(1−x) = π / sin(πx).
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_unchecked(1.0 - x))
    } else if x > 140.0 {
        // Direct product would overflow its intermediate power; the log form
        // stays in range and the exp costs ~|lnΓ|·ε ≈ 1e-13 relative here.
        let (ln, sign) = ln_gamma_signed(x);
        sign * ln.exp()
    } else {
        let t = x - 1.0 + LANCZOS_G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt()
            * t.powf(x - 1.0 + 0.5)
            * (-t).exp()
            * lanczos_series(x)
    }
}

/// (ln|Γ(x)|, sign of Γ(x)) for real x away from the poles.
///
/// The log form stays finite far past the point where Γ itself overflows,
/// which the Mittag-Leffler series relies on for large arguments.
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if x < 0.5 {
        // ln|Γ(x)| = ln(π/|sin πx|) − ln Γ(1−x); Γ(1−x) > 0 here, so the
        // sign of Γ(x) is the sign of sin(πx).
        let s = (std::f64::consts::PI * x).sin();
        if s == 0.0 {
            return (f64::INFINITY, 1.0);
        }
        let (ln1mx, _) = ln_gamma_signed(1.0 - x);
        ((std::f64::consts::PI / s.abs()).ln() - ln1mx, s.signum())
    } else {
        let t = x - 1.0 + LANCZOS_G + 0.5;
        let ln = 0.5 * (2.0 * std::f64::consts::PI).ln() + (x - 0.5) * t.ln() - t
            + lanczos_series(x).ln();
        (ln, 1.0)
    }
}

/// 1/Γ(g), defined as 0 at the poles (entire function).
fn recip_gamma(g: f64) -> f64 {
    if is_nonpositive_integer(g) {
        0.0
    } else {
        1.0 / gamma_unchecked(g)
    }
}

/// Parameters of the two-parameter Mittag-Leffler function E_{α,β}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    /// Order parameter, must be positive.
    pub alpha: f64,
    /// Second parameter; 1 in the classical one-parameter function.
    pub beta: f64,
}

impl MLParams {
    /// One-parameter form E_{α,1}.
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_beta(alpha, 1.0)
    }

    /// Two-parameter form E_{α,β}.
    pub fn with_beta(alpha: f64, beta: f64) -> Result<Self> {
        let p = MLParams { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    /// Checks α > 0 and finiteness.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Mittag-Leffler parameters need finite alpha > 0, got alpha={}, beta={}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Direct power-series accumulation of Σ z^k / Γ(αk+β).
/// Returns (value, error estimate) or None when the running power overflows
/// and the log-form route must take over.
fn ml_series_direct(alpha: f64, beta: f64, z: f64) -> Option<(f64, f64)> {
    let mut sum = 0.0_f64;
    let mut zk = 1.0_f64;
    let mut mag_sum = 0.0_f64;
    let mut last_term = 0.0_f64;
    for k in 0..ML_MAX_TERMS {
        let term = zk * recip_gamma(alpha * k as f64 + beta);
        sum += term;
        mag_sum += term.abs();
        last_term = term.abs();
        if last_term < 1e-16 * sum.abs().max(1e-300) && k > 2 {
            // The magnitude sum tracks how much cancellation occurred; the
            // floating-point noise floor of the result is ~1e-16 of it.
            return Some((sum, mag_sum * 1e-16));
        }
        let next = zk * z;
        if !next.is_finite() || next.abs() > 1e280 {
            return None;
        }
        zk = next;
    }
    Some((sum, (mag_sum * 1e-16).max(last_term)))
}

/// Same series with each term evaluated as sign · exp(k ln|z| − ln Γ(αk+β)),
/// which survives arguments whose raw powers overflow f64.
fn ml_series_log(alpha: f64, beta: f64, z: f64) -> Option<(f64, f64)> {
    if z == 0.0 {
        return Some((recip_gamma(beta), 0.0));
    }
    let ln_z = z.abs().ln();
    let z_sign = if z < 0.0 { -1.0 } else { 1.0 };
    let mut sum = 0.0_f64;
    let mut mag_sum = 0.0_f64;
    let mut last_term = 0.0_f64;
    let mut k_sign = 1.0_f64;
    for k in 0..ML_MAX_TERMS {
        let g = alpha * k as f64 + beta;
        if !is_nonpositive_integer(g) {
            let (ln_gamma, gamma_sign) = ln_gamma_signed(g);
            let ln_term = k as f64 * ln_z - ln_gamma;
            if ln_term > 708.0 {
                // The term itself overflows: the sum is out of f64 range.
                return None;
            }
            let term = k_sign * gamma_sign * ln_term.exp();
            sum += term;
            mag_sum += term.abs();
            last_term = term.abs();
            // 5e-15 rather than 1e-16: the exp(ln) form carries a slightly
            // larger per-term rounding error.
            if last_term < 1e-16 * sum.abs().max(1e-300) && k > 2 {
                return Some((sum, mag_sum * 5e-15));
            }
        }
        k_sign *= z_sign;
    }
    Some((sum, (mag_sum * 5e-15).max(last_term)))
}

/// Algebraic asymptotic expansion for 0 < α < 1 and z negative:
/// E_{α,β}(z) ≈ −Σ_{k≥1} z^{−k} / Γ(β−αk). Divergent series: summation stops
/// at the smallest term and the estimate is that term's magnitude. Terms
/// whose Γ sits at a pole vanish and are skipped (they must not be mistaken
/// for convergence).
fn ml_asymptotic_negative(alpha: f64, beta: f64, z: f64) -> (f64, f64) {
    let mut sum = 0.0_f64;
    let mut prev_mag: Option<f64> = None;
    let mut last_mag = f64::INFINITY;
    for k in 1..200 {
        let rg = recip_gamma(beta - alpha * k as f64);
        if rg == 0.0 {
            continue;
        }
        let term = -rg * z.powi(-k);
        let mag = term.abs();
        if let Some(p) = prev_mag {
            if mag > p {
                return (sum, p);
            }
        }
        sum += term;
        prev_mag = Some(mag);
        last_mag = mag;
        if mag < 1e-17 * sum.abs().max(1e-300) {
            return (sum, mag);
        }
    }
    (sum, last_mag)
}

/// Is the estimate good enough for the value? Absolute target on moderate
/// values; for large results the practically achievable (and accepted)
/// criterion is 1e-12 relative.
fn ml_estimate_ok(value: f64, estimate: f64) -> bool {
    estimate <= ML_ACCURACY_TARGET.max(value.abs() * 1e-12)
}

/// E_{α,β}(z) for real z, |z| ≤ 50 supported.
///
/// Route selection: direct power series; its log-form variant when raw powers
/// overflow; for 0 < α < 1 and z < 0 additionally the algebraic asymptotic
/// expansion, keeping whichever error estimate is smaller. If no route's
/// estimate meets the target — absolute 1e-10, relaxed to 1e-12 relative for
/// large values — the evaluation is refused with the achieved estimate.
///
/// Error estimates are deliberately conservative (inflated ×25 series, ×50
/// asymptotic) for fractional α ∈ (0.6, 1) with z < 0: in the crossover
/// window around α ∈ (0.7, 1), z ∈ [−15, −8] neither expansion is fully
/// trustworthy at the 1e-10 level, and evaluations there report failure
/// rather than returning a silently degraded value. Integer α is exempt
/// (the series is then well-behaved on the whole supported range).
pub fn mittag_leffler(p: &MLParams, z: f64) -> Result<f64> {
    p.validate()?;
    if !z.is_finite() {
        return Err(Error::Domain(format!(
            "mittag_leffler: non-finite argument {z}"
        )));
    }
    let (value, estimate) = ml_with_estimate(p, z);
    if ml_estimate_ok(value, estimate) {
        Ok(value)
    } else {
        Err(Error::Accuracy {
            requested: ML_ACCURACY_TARGET,
            achieved: estimate,
        })
    }
}

fn ml_with_estimate(p: &MLParams, z: f64) -> (f64, f64) {
    let fractional = p.alpha > 0.6 && p.alpha < 1.0 && z < 0.0;
    let series = ml_series_direct(p.alpha, p.beta, z).or_else(|| ml_series_log(p.alpha, p.beta, z));
    let mut best = match series {
        Some((v, e)) => (v, if fractional { e * 25.0 } else { e }),
        None => (f64::NAN, f64::INFINITY),
    };
    if p.alpha > 0.0 && p.alpha < 1.0 && z < 0.0 && !ml_estimate_ok(best.0, best.1) {
        let (v, e) = ml_asymptotic_negative(p.alpha, p.beta, z);
        let e = if fractional { e * 50.0 } else { e };
        if e < best.1 {
            best = (v, e);
        }
    }
    best
}
