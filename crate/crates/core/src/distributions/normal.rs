//! Standard normal special functions.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument the log-CDF switches to the Mills-ratio continued fraction.
const TAIL_SWITCH: f64 = -5.0;

/// Φ(z) via the complementary error function.
pub fn std_normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// ln Φ(z), accurate far into the lower tail where Φ itself underflows.
pub fn ln_std_normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if z >= TAIL_SWITCH {
        return std_normal_cdf(z).ln();
    }
    // Φ(z) = φ(z) R(-z), R the Mills ratio, by the Laplace continued fraction.
    let t = -z;
    -0.5 * z * z - LN_SQRT_2PI + mills_ratio(t).ln()
}

/// Mills ratio R(t) = (1 - Φ(t)) / φ(t) for t >= 5, modified Lentz evaluation of
/// 1 / (t + 1 / (t + 2 / (t + 3 / (t + ...)))).
fn mills_ratio(t: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = t;
    let mut c = t;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = t + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = t + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Φ⁻¹(p) for p in (0, 1).
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut z = -SQRT_2 * erfc_inv(2.0 * p);
    // Newton polish against the accurate CDF.
    for _ in 0..2 {
        let pdf = std_normal_pdf(z);
        if pdf == 0.0 {
            break;
        }
        z -= (std_normal_cdf(z) - p) / pdf;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        // mpmath.ncdf at 30 digits
        assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((std_normal_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-16);
        assert!((std_normal_cdf(-8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
    }

    #[test]
    fn log_cdf_tail_matches_direct_evaluation_at_switch() {
        for z in [-5.0, -6.0, -10.0, -20.0] {
            let direct = std_normal_cdf(z).ln();
            assert!((ln_std_normal_cdf(z) - direct).abs() < 1e-12 * direct.abs(), "z={z}");
        }
        // right at the switch both branches agree
        let left = ln_std_normal_cdf(TAIL_SWITCH - 1e-12);
        let right = ln_std_normal_cdf(TAIL_SWITCH);
        assert!((left - right).abs() < 1e-9);
    }

    #[test]
    fn log_cdf_far_tail_is_finite() {
        // ln Φ(-50) = -1254.83136113942 (mpmath)
        let v = ln_std_normal_cdf(-50.0);
        assert!((v - (-1_254.831_361_139_42)).abs() < 1e-8, "{v}");
    }

    #[test]
    fn quantile_inverts_cdf() {
        for p in [1e-9, 0.001, 0.2, 0.5, 0.77, 0.999_999] {
            let z = std_normal_quantile(p);
            assert!((std_normal_cdf(z) - p).abs() < 1e-14 * p.max(1e-3), "p={p}");
        }
    }
}
