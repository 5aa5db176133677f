//! Two-group asymmetric first-price equilibrium.
//!
//! `K + 1` bidders draw from `F₁` and `M - K - 1` from `F₂`. Writing the
//! first-order condition once for a group-1 bidder and once for a group-2
//! bidder gives, with `u_i = f_i(φ_i) φ_i' / F_i(φ_i)`, `n₁ = K + 1`, `n₂ = M - K - 1`:
//!
//! ```text
//! (n₁ - 1) u₁ + n₂ u₂       = 1 / (φ₁ - b)
//! n₁ u₁       + (n₂ - 1) u₂ = 1 / (φ₂ - b)
//! ```
//!
//! The determinant is `1 - M`, so the system is never singular. The inverse
//! bids are integrated backward from the common top bid `b̄`, where
//! `φ_i(b̄) = ω_i`, and `b̄` is found by shooting: a trajectory that hits the
//! diagonal `φ = b` before reaching the bottom means `b̄` is too high.

use crate::distributions::ValuationDistribution;
use crate::equilibrium::{BidMethod, BidResult};
use crate::numerics::{find_root, rk4_step, RootSpec};
use crate::{Error, Result};

/// Bottom of the integrated range as a fraction of `b̄`; the segment below is
/// closed off linearly to the origin.
const BOTTOM_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoGroupSpec {
    f1: ValuationDistribution,
    f2: ValuationDistribution,
    k: usize,
    bidders: usize,
}

impl TwoGroupSpec {
    /// `k + 1` bidders carry `f1`, the remaining `bidders - k - 1` carry `f2`.
    pub fn new(f1: ValuationDistribution, f2: ValuationDistribution, k: usize, bidders: usize) -> Result<Self> {
        if bidders < 2 {
            return Err(Error::invalid(format!("an auction needs at least two bidders, got {bidders}")));
        }
        if k + 1 > bidders {
            return Err(Error::invalid(format!("K must lie in 0..={}, got {k}", bidders - 1)));
        }
        for (g, d) in [(1, &f1), (2, &f2)] {
            if d.support().1.is_infinite() {
                return Err(Error::invalid(format!("group {g} needs a bounded support [0, ω]")));
            }
        }
        Ok(TwoGroupSpec { f1, f2, k, bidders })
    }

    pub fn group_sizes(&self) -> (usize, usize) {
        (self.k + 1, self.bidders - self.k - 1)
    }

    fn dist(&self, group: usize) -> &ValuationDistribution {
        if group == 1 {
            &self.f1
        } else {
            &self.f2
        }
    }

    fn top(&self, group: usize) -> f64 {
        self.dist(group).upper_limit()
    }

    /// Number of active groups: 1 when group 2 is empty.
    fn dim(&self) -> usize {
        if self.group_sizes().1 == 0 {
            1
        } else {
            2
        }
    }

    /// `dφ/db` at `(b, φ)`; `None` once a trajectory touches the diagonal.
    fn rhs(&self, b: f64, phi: &[f64]) -> Option<Vec<f64>> {
        let u = self.u(b, phi)?;
        let out: Vec<f64> = u
            .iter()
            .enumerate()
            .map(|(i, ui)| {
                let d = self.dist(i + 1);
                ui * d.cdf(phi[i]) / d.pdf(phi[i])
            })
            .collect();
        if out.iter().all(|v| v.is_finite()) {
            Some(out)
        } else {
            None
        }
    }

    /// `u_i = d ln F_i(φ_i)/db` from the 2×2 system (determinant `1 - M`).
    fn u(&self, b: f64, phi: &[f64]) -> Option<Vec<f64>> {
        let (n1, n2) = self.group_sizes();
        let margin: Vec<f64> = phi.iter().map(|p| p - b).collect();
        if margin.iter().any(|m| !(*m > 0.0)) {
            return None;
        }
        let a = 1.0 / margin[0];
        let u = if self.dim() == 1 {
            vec![a / (n1 as f64 - 1.0)]
        } else {
            let bb = 1.0 / margin[1];
            let (n1, n2) = (n1 as f64, n2 as f64);
            let d = 1.0 - self.bidders as f64;
            vec![(a * (n2 - 1.0) - n2 * bb) / d, ((n1 - 1.0) * bb - n1 * a) / d]
        };
        u.iter().all(|v| v.is_finite()).then_some(u)
    }

    /// First step off the top when a density vanishes there, so `φ'` is
    /// infinite: with `u` frozen, `d ln F(φ)/db = u` integrates to
    /// `φ(b) = F⁻¹(F(φ(b̄)) e^(-u (b̄ - b)))`.
    fn escape_step(&self, b_bar: f64, phi: &[f64], to: f64) -> Result<Vec<f64>> {
        let u = self.u(b_bar, phi).ok_or(Error::NonFiniteRhs { at: b_bar })?;
        Ok(phi
            .iter()
            .zip(&u)
            .enumerate()
            .map(|(i, (p, ui))| {
                let d = self.dist(i + 1);
                d.quantile(d.cdf(*p) * (-ui * (b_bar - to)).exp())
            })
            .collect())
    }

    /// Backward RK4 from `b̄` on a grid uniform in `ln b`, so steps shrink with
    /// `b` towards the singular bottom. `Err(at)` reports where a trajectory crashed.
    fn shoot(&self, b_bar: f64, steps: usize) -> std::result::Result<Vec<(f64, Vec<f64>)>, f64> {
        let start: Vec<f64> = (1..=self.dim()).map(|g| self.top(g)).collect();
        let ds = BOTTOM_FRACTION.ln() / steps as f64;
        let rhs = |t: f64, y: &[f64]| self.rhs(t, y).unwrap_or_else(|| vec![f64::NAN; y.len()]);
        let mut out = Vec::with_capacity(steps + 1);
        out.push((b_bar, start));
        for i in 0..steps {
            let (t, y) = out.last().expect("nonempty");
            let next_t = if i + 1 == steps { BOTTOM_FRACTION * b_bar } else { b_bar * (ds * (i + 1) as f64).exp() };
            let step = if i == 0 && self.rhs(*t, y).is_none() {
                self.escape_step(*t, y, next_t)
            } else {
                rk4_step(&rhs, *t, y, next_t - t)
            };
            match step {
                Ok(next) if next.iter().all(|p| *p > next_t) => out.push((next_t, next)),
                _ => return Err(next_t),
            }
        }
        Ok(out)
    }
}

/// Tabulated inverse bids on an ascending bid grid ending at `b̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseBidTable {
    pub b: Vec<f64>,
    pub phi1: Vec<f64>,
    /// Empty when group 2 has no members.
    pub phi2: Vec<f64>,
    dphi1: Vec<f64>,
    dphi2: Vec<f64>,
    pub b_bar: f64,
    spec: TwoGroupSpec,
}

/// Solve the two-group system by shooting on `b̄` with `steps` RK4 steps.
pub fn solve_two_group(spec: &TwoGroupSpec, steps: usize) -> Result<InverseBidTable> {
    if steps < 64 {
        return Err(Error::invalid(format!("asymmetric solver needs at least 64 steps, got {steps}")));
    }
    let (n1, n2) = spec.group_sizes();
    if n1 == 1 && n2 == 0 {
        return Err(Error::invalid("a single bidder has no equilibrium to solve"));
    }
    let cap = (1..=spec.dim()).map(|g| spec.top(g)).fold(f64::INFINITY, f64::min);
    if !(cap.is_finite() && cap > 0.0) {
        return Err(Error::Shooting("group supports must have a finite positive top".into()));
    }
    let mut lo = 1e-6 * cap;
    let mut hi = cap * (1.0 - 1e-12);
    if spec.shoot(lo, steps).is_err() {
        return Err(Error::Shooting(format!("trajectories crash even for b_bar = {lo}")));
    }
    if spec.shoot(hi, steps).is_ok() {
        return Err(Error::Shooting(format!("no crash even for b_bar = {hi}; cannot bracket")));
    }
    for _ in 0..200 {
        if hi - lo <= 1e-14 * cap {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if spec.shoot(mid, steps).is_ok() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b_bar = lo;
    let path = spec.shoot(b_bar, steps).map_err(|at| Error::Shooting(format!("final trajectory crashed at b = {at}")))?;

    let two = spec.dim() == 2;
    let n = path.len() + 1;
    let mut table = InverseBidTable {
        b: Vec::with_capacity(n),
        phi1: Vec::with_capacity(n),
        phi2: Vec::with_capacity(if two { n } else { 0 }),
        dphi1: Vec::with_capacity(n),
        dphi2: Vec::with_capacity(if two { n } else { 0 }),
        b_bar,
        spec: *spec,
    };
    // Linear closure from the origin to the bottom of the integrated range.
    let (b0, y0) = path.last().expect("nonempty");
    table.b.push(0.0);
    table.phi1.push(0.0);
    table.dphi1.push(y0[0] / b0);
    if two {
        table.phi2.push(0.0);
        table.dphi2.push(y0[1] / b0);
    }
    for (i, (t, y)) in path.iter().enumerate().rev() {
        // At a top where the density vanishes, fall back to the secant slope.
        let d = match spec.rhs(*t, y) {
            Some(d) => d,
            None if i == 0 && path.len() > 1 => {
                let (t1, y1) = &path[1];
                y.iter().zip(y1).map(|(a, b)| (a - b) / (t - t1)).collect()
            }
            None => return Err(Error::NonFiniteRhs { at: *t }),
        };
        table.b.push(*t);
        table.phi1.push(y[0]);
        table.dphi1.push(d[0]);
        if two {
            table.phi2.push(y[1]);
            table.dphi2.push(d[1]);
        }
    }
    Ok(table)
}

impl InverseBidTable {
    pub fn spec(&self) -> &TwoGroupSpec {
        &self.spec
    }

    fn column(&self, group: usize) -> Result<(&[f64], &[f64])> {
        match group {
            1 => Ok((&self.phi1, &self.dphi1)),
            2 if !self.phi2.is_empty() => Ok((&self.phi2, &self.dphi2)),
            2 => Err(Error::invalid("group 2 has no members in this auction")),
            _ => Err(Error::invalid(format!("group must be 1 or 2, got {group}"))),
        }
    }

    /// Cubic Hermite value of `φ_group` at bid `b`.
    pub fn inverse_bid(&self, group: usize, b: f64) -> Result<f64> {
        let (phi, dphi) = self.column(group)?;
        if !(0.0..=self.b_bar).contains(&b) {
            return Err(Error::invalid(format!("bid {b} outside [0, {}]", self.b_bar)));
        }
        let i = self.b.partition_point(|&t| t <= b).clamp(1, self.b.len() - 1) - 1;
        Ok(self.hermite(phi, dphi, i, b))
    }

    fn hermite(&self, phi: &[f64], dphi: &[f64], i: usize, b: f64) -> f64 {
        let (b0, b1) = (self.b[i], self.b[i + 1]);
        let h = b1 - b0;
        if i == 0 {
            // closure segment is linear
            return phi[0] + (phi[1] - phi[0]) * (b - b0) / h;
        }
        let t = (b - b0) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * phi[i]
            + (t3 - 2.0 * t2 + t) * h * dphi[i]
            + (-2.0 * t3 + 3.0 * t2) * phi[i + 1]
            + (t3 - t2) * h * dphi[i + 1]
    }

    /// Bid of a group member with valuation `x`: inverts `φ_group`.
    pub fn bid(&self, group: usize, x: f64) -> Result<f64> {
        let (phi, dphi) = self.column(group)?;
        let top = *phi.last().expect("nonempty");
        if x.is_nan() || x < 0.0 || x > top * (1.0 + 1e-12) {
            return Err(Error::OutsideSupport { valuation: x, lo: 0.0, hi: top });
        }
        if x >= top {
            return Ok(self.b_bar);
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        let i = phi.partition_point(|&p| p <= x).clamp(1, phi.len() - 1) - 1;
        let spec = RootSpec { bracket: (self.b[i], self.b[i + 1]), tol: 1e-15, max_iter: 200 };
        let b = find_root(|t| self.hermite(phi, dphi, i, t) - x, &spec)?;
        Ok(b.min(x))
    }

    /// Relative residuals `(φ_i - b) Σ_j n_ij u_j - 1` of both group equations
    /// at each `b`, with `φ'` from a five-point difference of the table
    /// interpolant at spacing `h`.
    pub fn residuals(&self, bids: &[f64], h: f64) -> Result<Vec<[f64; 2]>> {
        let (n1, n2) = self.spec.group_sizes();
        let groups = self.spec.dim();
        bids.iter()
            .map(|&b| {
                let mut phi = [0.0; 2];
                let mut u = [0.0; 2];
                for g in 0..groups {
                    let p = |t: f64| self.inverse_bid(g + 1, t);
                    let d = (-p(b + 2.0 * h)? + 8.0 * p(b + h)? - 8.0 * p(b - h)? + p(b - 2.0 * h)?) / (12.0 * h);
                    phi[g] = p(b)?;
                    let dist = self.spec.dist(g + 1);
                    u[g] = dist.pdf(phi[g]) * d / dist.cdf(phi[g]);
                }
                let (n1, n2) = (n1 as f64, n2 as f64);
                let r1 = (phi[0] - b) * ((n1 - 1.0) * u[0] + n2 * u[1]) - 1.0;
                let r2 = if groups == 2 { (phi[1] - b) * (n1 * u[0] + (n2 - 1.0) * u[1]) - 1.0 } else { 0.0 };
                Ok([r1, r2])
            })
            .collect()
    }
}

/// Bid of a member of `group` (1 or 2) with valuation `x`.
pub fn bid_asymmetric(table: &InverseBidTable, group: usize, x: f64) -> Result<BidResult> {
    let bid = table.bid(group, x)?;
    Ok(BidResult { bid, method: BidMethod::OdeShooting, est_error: None })
}

/// Residuals of the fully asymmetric `M`-bidder first-order conditions
/// `Σ_{j≠i} f_j(φ_j) φ_j' / F_j(φ_j) - 1/(φ_i - b)` at a single bid level.
pub fn full_system_residuals(
    dists: &[ValuationDistribution],
    phi: &[f64],
    dphi: &[f64],
    b: f64,
) -> Result<Vec<f64>> {
    let m = dists.len();
    if m < 2 || phi.len() != m || dphi.len() != m {
        return Err(Error::invalid("need matching distributions, φ and φ' for at least two bidders"));
    }
    let u: Vec<f64> = (0..m).map(|j| dists[j].pdf(phi[j]) * dphi[j] / dists[j].cdf(phi[j])).collect();
    let total: f64 = u.iter().sum();
    Ok((0..m).map(|i| total - u[i] - 1.0 / (phi[i] - b)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unif(w: f64) -> ValuationDistribution {
        ValuationDistribution::uniform(w).unwrap()
    }

    fn sup_error_vs_symmetric(table: &InverseBidTable, group: usize, m: usize) -> f64 {
        (0..=200)
            .map(|i| {
                let x = i as f64 / 200.0;
                (table.bid(group, x).unwrap() - (m as f64 - 1.0) * x / m as f64).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn symmetric_two_bidders_single_group() {
        let spec = TwoGroupSpec::new(unif(1.0), unif(1.0), 1, 2).unwrap();
        let t = solve_two_group(&spec, 2000).unwrap();
        assert!(t.phi2.is_empty());
        assert_abs_diff_eq!(t.b_bar, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(t.bid(1, 0.6).unwrap(), 0.3, epsilon = 1e-6);
        assert!(t.bid(2, 0.6).is_err());
        assert!(sup_error_vs_symmetric(&t, 1, 2) < 1e-4);
    }

    #[test]
    fn symmetric_inputs_split_across_groups() {
        for (k, m) in [(0, 2), (1, 4), (0, 4), (2, 4), (3, 4)] {
            let spec = TwoGroupSpec::new(unif(1.0), unif(1.0), k, m).unwrap();
            let t = solve_two_group(&spec, 2000).unwrap();
            assert!(sup_error_vs_symmetric(&t, 1, m) < 1e-4, "K={k} M={m}");
            if !t.phi2.is_empty() {
                assert!(sup_error_vs_symmetric(&t, 2, m) < 1e-4, "K={k} M={m}");
            }
        }
    }

    #[test]
    fn uniform_different_supports_closed_form() {
        // φ₁ = 2b / (1 + 3b²/4), φ₂ = 2b / (1 - 3b²/4), b̄ = 2/3.
        let spec = TwoGroupSpec::new(unif(1.0), unif(2.0), 0, 2).unwrap();
        let t = solve_two_group(&spec, 4000).unwrap();
        assert_abs_diff_eq!(t.b_bar, 2.0 / 3.0, epsilon = 1e-8);
        for i in 1..40 {
            let b = t.b_bar * i as f64 / 40.0;
            let c = 0.75 * b * b;
            assert_abs_diff_eq!(t.inverse_bid(1, b).unwrap(), 2.0 * b / (1.0 + c), epsilon = 1e-7);
            assert_abs_diff_eq!(t.inverse_bid(2, b).unwrap(), 2.0 * b / (1.0 - c), epsilon = 1e-7);
        }
    }

    #[test]
    fn residuals_are_small_on_interior() {
        let spec = TwoGroupSpec::new(unif(1.0), unif(2.0), 0, 2).unwrap();
        let t = solve_two_group(&spec, 4000).unwrap();
        let bids: Vec<f64> = (1..20).map(|i| t.b_bar * (0.05 + 0.9 * i as f64 / 20.0)).collect();
        for r in t.residuals(&bids, 1e-3).unwrap() {
            assert!(r[0].abs() <= 1e-6 && r[1].abs() <= 1e-6, "{r:?}");
        }
    }

    #[test]
    fn bids_are_shaded_and_monotone() {
        let spec = TwoGroupSpec::new(unif(1.0), unif(1.5), 1, 3).unwrap();
        let t = solve_two_group(&spec, 2000).unwrap();
        for g in [1, 2] {
            let top = if g == 1 { 1.0 } else { 1.5 };
            let mut prev = 0.0;
            for i in 1..=100 {
                let x = top * i as f64 / 100.0;
                let b = t.bid(g, x).unwrap();
                assert!(b < x && b >= prev);
                prev = b;
            }
            assert_eq!(t.bid(g, top).unwrap(), t.b_bar);
            assert_eq!(t.bid(g, 0.0).unwrap(), 0.0);
        }
        assert!(t.bid(1, 1.2).is_err());
        for w in t.phi1.windows(2).chain(t.phi2.windows(2)) {
            assert!(w[1] > w[0]);
        }
        for (i, &b) in t.b.iter().enumerate().skip(1) {
            assert!(t.phi1[i] > b && t.phi2[i] > b);
        }
    }

    #[test]
    fn weak_bidder_bids_more_aggressively() {
        let spec = TwoGroupSpec::new(unif(1.0), unif(2.0), 0, 2).unwrap();
        let t = solve_two_group(&spec, 2000).unwrap();
        for x in [0.2, 0.5, 0.9] {
            assert!(t.bid(1, x).unwrap() > t.bid(2, x).unwrap());
        }
    }

    #[test]
    fn full_system_checker_agrees_with_group_form() {
        let spec = TwoGroupSpec::new(unif(1.0), unif(2.0), 0, 2).unwrap();
        let t = solve_two_group(&spec, 4000).unwrap();
        let b = 0.4;
        let h = 1e-4;
        let d = |g| (t.inverse_bid(g, b + h).unwrap() - t.inverse_bid(g, b - h).unwrap()) / (2.0 * h);
        let phi = [t.inverse_bid(1, b).unwrap(), t.inverse_bid(2, b).unwrap()];
        let r = full_system_residuals(&[unif(1.0), unif(2.0)], &phi, &[d(1), d(2)], b).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-5), "{r:?}");
    }

    #[test]
    fn validation() {
        assert!(TwoGroupSpec::new(unif(1.0), unif(1.0), 2, 2).is_err());
        assert!(TwoGroupSpec::new(unif(1.0), unif(1.0), 0, 1).is_err());
        let spec = TwoGroupSpec::new(unif(1.0), unif(1.0), 0, 2).unwrap();
        assert!(solve_two_group(&spec, 10).is_err());
        assert!(full_system_residuals(&[unif(1.0)], &[0.5], &[1.0], 0.2).is_err());
    }

    #[test]
    fn unbounded_support_is_rejected() {
        let ln = ValuationDistribution::lognormal(0.0, 1.0).unwrap();
        assert!(matches!(TwoGroupSpec::new(ln, unif(1.0), 0, 2), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn vanishing_top_density_escapes_the_boundary() {
        // Irwin-Hall density is zero at 2; symmetric M = 3 bid at 1 is 1 - ∫₀¹ y⁴ dy.
        let ih = ValuationDistribution::irwin_hall2();
        let t = solve_two_group(&TwoGroupSpec::new(ih, ih, 0, 3).unwrap(), 2000).unwrap();
        assert_abs_diff_eq!(t.bid(1, 1.0).unwrap(), 0.8, epsilon = 1e-5);
        assert_abs_diff_eq!(t.bid(2, 1.0).unwrap(), 0.8, epsilon = 1e-5);

        let t = solve_two_group(&TwoGroupSpec::new(ih, unif(2.0), 1, 4).unwrap(), 2000).unwrap();
        for g in [1, 2] {
            let mut prev = 0.0;
            for i in 1..=100 {
                let x = 2.0 * i as f64 / 100.0;
                let b = t.bid(g, x).unwrap();
                assert!(b <= x && b >= prev, "group {g} x {x}");
                prev = b;
            }
        }
    }
}
