//! Shared numerical substrate: quadrature, bracketed roots and an RK4 integrator.
//!
//! Everything here is a pure function over caller-supplied closures, so it is
//! re-entrant and safe to call from parallel maps over parameter grids.

mod ode;
mod quadrature;
mod roots;

pub use ode::{integrate_ode, rk4_step, Trajectory};
pub use quadrature::{
    integrate, integrate_detailed, integrate_riemann, Quadrature, QuadratureMethod, QuadratureSpec,
};
pub use roots::{find_root, RootSpec};

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Pearson correlation; `None` when either series is constant or lengths differ.
pub fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut v = vec![1.0];
        v.extend(std::iter::repeat_n(1e-16, 10_000));
        let s = compensated_sum(v);
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn correlation_of_affine_series_is_one() {
        let a: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let b: Vec<f64> = a.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!((correlation(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert!(correlation(&a, &[1.0; 10]).is_none());
    }
}
