//! Affiliated interdependent values with Irwin-Hall signals.
//!
//! Each signal is `X = S + Z`, the sum of two standard uniforms, and a bidder's
//! value is `v(x, y) = αx + ξy` where `y` is the highest rival signal. The
//! equilibrium bid is `β(x) = ∫₀ˣ v(y, y) dL(y|x)` with weighting kernel
//! `L(y|x) = exp(-∫_y^x ρ)` and reverse hazard `ρ(t) = (M-1) f(t)/F(t)`.
//!
//! Two kernels are offered. [`KernelForm::Exact`] (the default) uses
//! `(F(y)/F(x))^(M-1)` throughout. [`KernelForm::Printed`] uses the piecewise
//! `(y/x)^(2M-2)` form below the knot at 1 for every `x`, which is the form the
//! literal closed form is built on; it drops the kernel's jump at `y = 1`, so
//! for `x ≥ 1` it undershoots and is not monotone close to `x = 2` for small `M`.
//! The two coincide whenever `x < 1` or `y ≥ 1`.

use serde::{Deserialize, Serialize};

use crate::bidder_count::BidderCountPMF;
use crate::distributions::ValuationDistribution;
use crate::equilibrium::{BidMethod, BidResult};
use crate::numerics::{compensated_sum, find_root, integrate_detailed, QuadratureSpec, RootSpec};
use crate::{Error, Result};

/// Lower and upper margins of the screening-level search interval.
const SCREEN_EPS: f64 = 1e-8;
const SCREEN_GRID: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelForm {
    #[default]
    Exact,
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterdepSpec {
    bidders: usize,
    alpha: f64,
    xi: f64,
    reserve: f64,
    kernel: KernelForm,
}

impl InterdepSpec {
    pub fn new(bidders: usize, alpha: f64, xi: f64) -> Result<Self> {
        if bidders < 2 {
            return Err(Error::invalid(format!("an auction needs at least two bidders, got {bidders}")));
        }
        for (name, w) in [("alpha", alpha), ("xi", xi)] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {w}")));
            }
        }
        Ok(InterdepSpec { bidders, alpha, xi, reserve: 0.0, kernel: KernelForm::Exact })
    }

    pub fn with_reserve(mut self, reserve: f64) -> Result<Self> {
        if !(reserve >= 0.0 && reserve.is_finite()) {
            return Err(Error::invalid(format!("reserve must be >= 0, got {reserve}")));
        }
        self.reserve = reserve;
        Ok(self)
    }

    pub fn with_kernel(mut self, kernel: KernelForm) -> Self {
        self.kernel = kernel;
        self
    }

    fn with_bidders(mut self, bidders: usize) -> Self {
        self.bidders = bidders;
        self
    }

    pub fn bidders(&self) -> usize {
        self.bidders
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn reserve(&self) -> f64 {
        self.reserve
    }

    pub fn kernel(&self) -> KernelForm {
        self.kernel
    }

    pub fn kernel_fn(&self) -> AffiliationKernel {
        AffiliationKernel { bidders: self.bidders, form: self.kernel }
    }

    /// `v(x, x) = (α + ξ) x`.
    pub fn diagonal_value(&self, x: f64) -> f64 {
        (self.alpha + self.xi) * x
    }
}

fn ih_cdf(y: f64) -> f64 {
    ValuationDistribution::irwin_hall2().cdf(y)
}

fn ih_pdf(y: f64) -> f64 {
    ValuationDistribution::irwin_hall2().pdf(y)
}

fn check_signal(x: f64) -> Result<()> {
    if !(0.0..=2.0).contains(&x) {
        return Err(Error::OutsideSupport { valuation: x, lo: 0.0, hi: 2.0 });
    }
    Ok(())
}

/// `ρ(t) = g(t|t)/G(t|t)`: `2(M-1)/t` below 1, `(M-1)(2-t)/F(t)` on `[1, 2]`.
pub fn reverse_hazard(bidders: usize, t: f64) -> Result<f64> {
    if bidders < 2 {
        return Err(Error::invalid(format!("an auction needs at least two bidders, got {bidders}")));
    }
    if !(t > 0.0 && t <= 2.0) {
        return Err(Error::invalid(format!("reverse hazard needs t in (0, 2], got {t}")));
    }
    let k = (bidders - 1) as f64;
    Ok(if t < 1.0 { 2.0 * k / t } else { k * (2.0 - t) / ih_cdf(t) })
}

/// Weighting kernel `L(y|x)` and its `y`-density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffiliationKernel {
    bidders: usize,
    form: KernelForm,
}

impl AffiliationKernel {
    pub fn new(bidders: usize, form: KernelForm) -> Result<Self> {
        if bidders < 2 {
            return Err(Error::invalid(format!("an auction needs at least two bidders, got {bidders}")));
        }
        Ok(AffiliationKernel { bidders, form })
    }

    fn rivals(&self) -> i32 {
        self.bidders as i32 - 1
    }

    fn uses_lower_branch(&self, y: f64) -> bool {
        self.form == KernelForm::Printed && y < 1.0
    }

    /// `L(y|x)` for `0 ≤ y ≤ x ≤ 2`. Also the conditional CDF `G(y|x)` of the
    /// highest rival signal.
    pub fn weight(&self, y: f64, x: f64) -> Result<f64> {
        check_signal(x)?;
        if !(0.0..=x).contains(&y) {
            return Err(Error::invalid(format!("kernel needs 0 <= y <= x, got y = {y}, x = {x}")));
        }
        Ok(self.weight_unchecked(y, x))
    }

    fn weight_unchecked(&self, y: f64, x: f64) -> f64 {
        if y >= x {
            return 1.0;
        }
        if y <= 0.0 {
            return 0.0;
        }
        if self.uses_lower_branch(y) {
            (y / x).powi(2 * self.rivals())
        } else {
            (ih_cdf(y) / ih_cdf(x)).powi(self.rivals())
        }
    }

    /// `∂L(y|x)/∂y = L(y|x) ρ(y)`, the conditional density `g(y|x)`.
    pub fn density(&self, y: f64, x: f64) -> f64 {
        if !(y > 0.0 && y <= x) {
            return 0.0;
        }
        let k = self.rivals();
        if self.uses_lower_branch(y) {
            2.0 * k as f64 * y.powi(2 * k - 1) / x.powi(2 * k)
        } else {
            k as f64 * ih_cdf(y).powi(k - 1) * ih_pdf(y) / ih_cdf(x).powi(k)
        }
    }
}

/// `L(y|x)` with the default kernel.
pub fn l_weight(bidders: usize, y: f64, x: f64) -> Result<f64> {
    AffiliationKernel::new(bidders, KernelForm::default())?.weight(y, x)
}

/// `J_n(x) = ∫₁ˣ (2y - 1 - y²/2)^n dy` by the quadratic-power reduction formula
/// `(2n+1) J_n = (1/2)^n - (2-x) q(x)^n + 2n J_(n-1)`, `J_0 = x - 1`.
pub fn irwin_hall_power_integral(n: u32, x: f64) -> f64 {
    let q = 2.0 * x - 1.0 - 0.5 * x * x;
    let mut j = x - 1.0;
    let mut half_pow = 1.0;
    let mut q_pow = 1.0;
    for k in 1..=n {
        half_pow *= 0.5;
        q_pow *= q;
        let kf = k as f64;
        j = (half_pow - (2.0 - x) * q_pow + 2.0 * kf * j) / (2.0 * kf + 1.0);
    }
    j
}

/// `∫₀ˣ y dL(y|x)` in closed form: the bid for unit diagonal weight.
fn unit_bid_closed(bidders: usize, form: KernelForm, x: f64) -> f64 {
    let m = bidders as f64;
    let k = bidders as i32 - 1;
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1.0 {
        return 2.0 * (m - 1.0) * x / (2.0 * m - 1.0);
    }
    let j = irwin_hall_power_integral(k as u32, x);
    let fx = ih_cdf(x).powi(k);
    let half = 0.5_f64.powi(k);
    match form {
        KernelForm::Printed => 2.0 * (m - 1.0) / ((2.0 * m - 1.0) * x.powi(2 * k)) + x - (half + j) / fx,
        KernelForm::Exact => x - (half / (2.0 * m - 1.0) + j) / fx,
    }
}

/// Closed-form no-reserve bid: `2(α+ξ)(M-1)x/(2M-1)` below 1 and the
/// reduction-formula expression on `[1, 2]`.
pub fn bid_irwinhall_closed(spec: &InterdepSpec, x: f64) -> Result<BidResult> {
    check_signal(x)?;
    if spec.reserve > 0.0 {
        return Err(Error::invalid("the closed form covers the no-reserve case; use bid_combined"));
    }
    let bid = (spec.alpha + spec.xi) * unit_bid_closed(spec.bidders, spec.kernel, x);
    Ok(BidResult { bid, method: BidMethod::ClosedForm, est_error: None })
}

/// `∫_a^x w(y) l(y|x) dy`, split at the knot.
fn kernel_integral<W: Fn(f64) -> f64>(kernel: &AffiliationKernel, a: f64, x: f64, w: W) -> Result<(f64, f64)> {
    let quad = QuadratureSpec::with_tolerances(1e-13, 1e-11)?;
    let mut pieces = Vec::new();
    if a < 1.0 && x > 1.0 {
        pieces.push((a, 1.0));
        pieces.push((1.0, x));
    } else {
        pieces.push((a, x));
    }
    let mut total = 0.0;
    let mut err = 0.0;
    for (lo, hi) in pieces {
        if hi > lo {
            let q = integrate_detailed(|y| w(y) * kernel.density(y, x), lo, hi, &quad)?;
            total += q.value;
            err += q.error_estimate;
        }
    }
    Ok((total, err))
}

/// Equilibrium bid by quadrature of `∫₀ˣ v(y,y) L(y|x) ρ(y) dy`.
/// A positive reserve in `spec` is forwarded to [`bid_combined`].
pub fn bid_interdependent(spec: &InterdepSpec, x: f64) -> Result<BidResult> {
    if spec.reserve > 0.0 {
        return bid_combined(spec, x);
    }
    check_signal(x)?;
    if x == 0.0 {
        return Ok(BidResult { bid: 0.0, method: BidMethod::Quadrature, est_error: Some(0.0) });
    }
    let kernel = spec.kernel_fn();
    let (v, err) = kernel_integral(&kernel, 0.0, x, |y| spec.diagonal_value(y))?;
    Ok(BidResult { bid: v, method: BidMethod::Quadrature, est_error: Some(err) })
}

/// `E[V | X = x, Y < x] = αx + ξ ∫₀ˣ y dL(y|x)`, the expected value of winning
/// at signal `x`.
pub fn screening_value(spec: &InterdepSpec, x: f64) -> Result<f64> {
    check_signal(x)?;
    Ok(spec.alpha * x + spec.xi * unit_bid_closed(spec.bidders, spec.kernel, x))
}

/// Screening level `x*(r) = inf { x : E[V | X = x, Y < x] ≥ r }`.
pub fn x_star(spec: &InterdepSpec) -> Result<f64> {
    let r = spec.reserve;
    if !(r > 0.0) {
        return Err(Error::invalid(format!("screening needs a positive reserve, got {r}")));
    }
    let lo = SCREEN_EPS;
    let hi = 2.0 - SCREEN_EPS;
    let e = |x: f64| spec.alpha * x + spec.xi * unit_bid_closed(spec.bidders, spec.kernel, x);
    let mut prev_x = lo;
    let mut prev = e(lo) - r;
    if prev >= 0.0 {
        return Ok(lo);
    }
    let mut top = e(lo);
    for i in 1..=SCREEN_GRID {
        let x = lo + (hi - lo) * i as f64 / SCREEN_GRID as f64;
        let ex = e(x);
        top = top.max(ex);
        if ex - r >= 0.0 {
            let spec = RootSpec { bracket: (prev_x, x), tol: 1e-14, max_iter: 400 };
            return find_root(|t| e(t) - r, &spec);
        }
        prev_x = x;
        prev = ex - r;
    }
    let _ = prev;
    Err(Error::ReserveOutOfRange { reserve: r, lo: 0.0, hi: top })
}

/// Combined reserve-price equilibrium with its screening level solved once.
/// Without a reserve the screening level is 0 and the bid is the plain
/// interdependent bid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedEquilibrium {
    spec: InterdepSpec,
    x_star: f64,
}

impl CombinedEquilibrium {
    pub fn new(spec: &InterdepSpec) -> Result<Self> {
        let xs = if spec.reserve == 0.0 { 0.0 } else { x_star(spec)? };
        Ok(CombinedEquilibrium { spec: *spec, x_star: xs })
    }

    pub fn x_star(&self) -> f64 {
        self.x_star
    }

    /// `β(x) = r L(x*|x) + ∫_{x*}^x v(y,y) dL(y|x)`.
    pub fn bid(&self, x: f64) -> Result<BidResult> {
        check_signal(x)?;
        let xs = self.x_star;
        if x < xs {
            return Err(Error::BelowScreening { signal: x, screening: xs });
        }
        let r = self.spec.reserve;
        if x == xs {
            return Ok(BidResult { bid: r, method: BidMethod::Quadrature, est_error: Some(0.0) });
        }
        let kernel = self.spec.kernel_fn();
        let (body, err) = kernel_integral(&kernel, xs, x, |y| self.spec.diagonal_value(y))?;
        let bid = r * kernel.weight_unchecked(xs, x) + body;
        Ok(BidResult { bid, method: BidMethod::Quadrature, est_error: Some(err) })
    }
}

/// Combined-setting bid for a signal at or above the screening level.
pub fn bid_combined(spec: &InterdepSpec, x: f64) -> Result<BidResult> {
    CombinedEquilibrium::new(spec)?.bid(x)
}

/// Mixture of combined-setting bids over an uncertain rival count, weighted by
/// `p_l F(x)^l / Σ p_k F(x)^k`. Counts whose screening level exceeds `x`
/// contribute a zero bid.
pub fn bid_combined_uncertain(pmf: &BidderCountPMF, spec: &InterdepSpec, x: f64) -> Result<BidResult> {
    let solved = combined_by_count(pmf, spec)?;
    bid_combined_uncertain_solved(pmf, &solved, x)
}

/// Per-count equilibria (index = rival count) for repeated mixture evaluation.
pub fn combined_by_count(pmf: &BidderCountPMF, spec: &InterdepSpec) -> Result<Vec<Option<CombinedEquilibrium>>> {
    pmf.probabilities()
        .iter()
        .enumerate()
        .map(|(l, &p)| {
            if l == 0 || p == 0.0 {
                Ok(None)
            } else {
                CombinedEquilibrium::new(&spec.with_bidders(l + 1)).map(Some)
            }
        })
        .collect()
}

pub fn bid_combined_uncertain_solved(
    pmf: &BidderCountPMF,
    solved: &[Option<CombinedEquilibrium>],
    x: f64,
) -> Result<BidResult> {
    check_signal(x)?;
    let Some(weights) = pmf.mixture_weights(ih_cdf(x).ln()) else {
        return Ok(BidResult { bid: 0.0, method: BidMethod::Quadrature, est_error: Some(0.0) });
    };
    let mut terms = Vec::new();
    let mut err = 0.0;
    for (w, eq) in weights.iter().zip(solved) {
        let Some(eq) = eq else { continue };
        if x < eq.x_star() {
            continue;
        }
        let b = eq.bid(x)?;
        err += w * b.est_error.unwrap_or(0.0);
        terms.push(w * b.bid);
    }
    Ok(BidResult { bid: compensated_sum(terms), method: BidMethod::Quadrature, est_error: Some(err) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bidder_count::discrete_symmetric_pmf;
    use crate::numerics::{integrate, integrate_ode};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn half_half(m: usize) -> InterdepSpec {
        InterdepSpec::new(m, 0.5, 0.5).unwrap()
    }

    fn printed(m: usize) -> InterdepSpec {
        half_half(m).with_kernel(KernelForm::Printed)
    }

    #[test]
    fn reverse_hazard_examples() {
        assert_eq!(reverse_hazard(2, 0.5).unwrap(), 4.0);
        assert_eq!(reverse_hazard(2, 1.0).unwrap(), 2.0);
        assert_abs_diff_eq!(reverse_hazard(2, 1.0 - 1e-12).unwrap(), 2.0, epsilon = 1e-9);
        assert_eq!(reverse_hazard(3, 2.0).unwrap(), 0.0);
        assert!(reverse_hazard(2, 0.0).is_err());
        assert!(reverse_hazard(2, 2.1).is_err());
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(l_weight(2, 0.8, 0.8).unwrap(), 1.0);
        assert_eq!(l_weight(2, 0.0, 0.8).unwrap(), 0.0);
        assert_abs_diff_eq!(l_weight(2, 0.5, 0.8).unwrap(), 0.390_625, epsilon = 1e-15);
        assert!(l_weight(2, 0.9, 0.8).is_err());
    }

    #[test]
    fn kernel_matches_exponentiated_hazard() {
        // Off the knot the closed-form kernel equals exp(-∫_y^x ρ).
        let quad = QuadratureSpec::default();
        for m in [2, 3, 5] {
            for (y, x) in [(0.3, 0.8), (1.2, 1.9), (1.0, 1.5)] {
                let int = integrate(|t| reverse_hazard(m, t).unwrap(), y, x, &quad).unwrap();
                for form in [KernelForm::Printed, KernelForm::Exact] {
                    let k = AffiliationKernel::new(m, form).unwrap();
                    assert_abs_diff_eq!(k.weight(y, x).unwrap(), (-int).exp(), epsilon = 1e-9);
                }
            }
        }
        // Across the knot only the exact kernel does.
        let int = integrate(|t| reverse_hazard(3, t).unwrap(), 0.5, 1.5, &quad).unwrap();
        let exact = AffiliationKernel::new(3, KernelForm::Exact).unwrap();
        assert_abs_diff_eq!(exact.weight(0.5, 1.5).unwrap(), (-int).exp(), epsilon = 1e-9);
    }

    #[test]
    fn density_is_derivative_of_weight() {
        let h = 1e-6;
        for form in [KernelForm::Printed, KernelForm::Exact] {
            let k = AffiliationKernel::new(4, form).unwrap();
            for &(y, x) in &[(0.3, 0.9), (0.6, 1.7), (1.3, 1.8)] {
                let num = (k.weight(y + h, x).unwrap() - k.weight(y - h, x).unwrap()) / (2.0 * h);
                assert_abs_diff_eq!(num, k.density(y, x), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn reduction_formula_matches_quadrature() {
        let quad = QuadratureSpec::with_tolerances(1e-14, 1e-12).unwrap();
        for n in [0u32, 1, 2, 4, 7, 20] {
            for x in [1.0, 1.3, 1.77, 2.0] {
                let direct =
                    integrate(|y| (2.0 * y - 1.0 - 0.5 * y * y).powi(n as i32), 1.0, x, &quad).unwrap();
                assert_abs_diff_eq!(irwin_hall_power_integral(n, x), direct, epsilon = 1e-9);
            }
        }
        assert_abs_diff_eq!(irwin_hall_power_integral(1, 2.0), 5.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn interdependent_bid_examples() {
        let s = printed(2);
        assert_eq!(bid_interdependent(&s, 0.0).unwrap().bid, 0.0);
        for x in [0.2, 0.5, 0.9] {
            assert_abs_diff_eq!(bid_interdependent(&s, x).unwrap().bid, 2.0 * x / 3.0, epsilon = 1e-10);
            assert_abs_diff_eq!(bid_interdependent(&half_half(2), x).unwrap().bid, 2.0 * x / 3.0, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(bid_interdependent(&s, 2.0).unwrap().bid, 5.0 / 6.0, epsilon = 1e-10);
        assert_abs_diff_eq!(bid_interdependent(&half_half(2), 2.0).unwrap().bid, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn closed_form_examples() {
        let s = printed(2);
        // Both branches meet at 2/3 at the knot.
        assert_abs_diff_eq!(bid_irwinhall_closed(&s, 1.0).unwrap().bid, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bid_irwinhall_closed(&s, 1.0 - 1e-12).unwrap().bid, 2.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(bid_irwinhall_closed(&s, 2.0).unwrap().bid, 5.0 / 6.0, epsilon = 1e-14);
        let zero = InterdepSpec::new(3, 0.0, 0.0).unwrap();
        for x in [0.0, 0.7, 1.4, 2.0] {
            assert_eq!(bid_irwinhall_closed(&zero, x).unwrap().bid, 0.0);
        }
        assert!(bid_irwinhall_closed(&s, 2.5).is_err());
        assert!(bid_irwinhall_closed(&s.with_reserve(0.3).unwrap(), 1.0).is_err());
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for form in [KernelForm::Printed, KernelForm::Exact] {
            for m in [2, 3, 5, 8] {
                let s = half_half(m).with_kernel(form);
                for i in 0..=40 {
                    let x = 2.0 * i as f64 / 40.0;
                    let closed = bid_irwinhall_closed(&s, x).unwrap().bid;
                    let quad = bid_interdependent(&s, x).unwrap().bid;
                    assert!((closed - quad).abs() <= 1e-6, "{form:?} M={m} x={x}: {closed} vs {quad}");
                }
                let below = bid_irwinhall_closed(&s, 1.0 - 1e-12).unwrap().bid;
                let at = bid_irwinhall_closed(&s, 1.0).unwrap().bid;
                assert!((below - at).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn kernel_cdf_properties() {
        for form in [KernelForm::Printed, KernelForm::Exact] {
            let k = AffiliationKernel::new(4, form).unwrap();
            for &x in &[0.4, 1.0, 1.6, 2.0] {
                let mut prev = 0.0;
                for i in 0..=100 {
                    let y = x * i as f64 / 100.0;
                    let l = k.weight(y, x).unwrap();
                    assert!((0.0..=1.0).contains(&l) && l >= prev);
                    prev = l;
                    // affiliation: larger x shifts mass up
                    let larger = (x + 0.2).min(2.0);
                    assert!(k.weight(y, larger).unwrap() <= l + 1e-15);
                }
                assert_eq!(prev, 1.0);
            }
        }
    }

    #[test]
    fn differential_equation_holds() {
        let h = 1e-5;
        let cases = [(KernelForm::Exact, 0.02, 1.98), (KernelForm::Printed, 0.02, 0.98)];
        for (form, lo, hi) in cases {
            for m in [2, 4] {
                let s = InterdepSpec::new(m, 0.3, 0.6).unwrap().with_kernel(form);
                for i in 0..=24 {
                    let x = lo + (hi - lo) * i as f64 / 24.0;
                    let b = |t| bid_irwinhall_closed(&s, t).unwrap().bid;
                    let slope = (b(x + h) - b(x - h)) / (2.0 * h);
                    let rhs = (s.diagonal_value(x) - b(x)) * reverse_hazard(m, x).unwrap();
                    assert!((slope - rhs).abs() < 1e-4, "{form:?} M={m} x={x}: {slope} vs {rhs}");
                    assert!(s.diagonal_value(x) - b(x) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn screening_examples() {
        let s = half_half(2).with_reserve(5.0 / 6.0).unwrap();
        let xs = x_star(&s).unwrap();
        assert_abs_diff_eq!(xs, 1.0, epsilon = 1e-8);
        assert!((screening_value(&s, xs).unwrap() - 5.0 / 6.0).abs() <= 1e-9);
        let tiny = half_half(3).with_reserve(1e-9).unwrap();
        assert!(x_star(&tiny).unwrap() < 1e-7);
        let too_high = half_half(2).with_reserve(5.0).unwrap();
        assert!(matches!(x_star(&too_high), Err(Error::ReserveOutOfRange { .. })));
        assert!(x_star(&half_half(2)).is_err());
    }

    #[test]
    fn combined_boundary_and_screening() {
        let s = half_half(2).with_reserve(5.0 / 6.0).unwrap();
        let eq = CombinedEquilibrium::new(&s).unwrap();
        assert_eq!(eq.bid(eq.x_star()).unwrap().bid, 5.0 / 6.0);
        assert!(matches!(eq.bid(0.9), Err(Error::BelowScreening { .. })));
        let mut prev = 5.0 / 6.0;
        for i in 1..=20 {
            let x = eq.x_star() + (2.0 - eq.x_star()) * i as f64 / 20.0;
            let b = eq.bid(x).unwrap().bid;
            assert!(b >= prev && b <= s.diagonal_value(x));
            prev = b;
        }
    }

    #[test]
    fn combined_matches_integrating_factor_ode() {
        // β' = (v - β) ρ from β(x*) = r, solved by RK4.
        let s = half_half(2).with_reserve(5.0 / 6.0).unwrap();
        let eq = CombinedEquilibrium::new(&s).unwrap();
        let xs = eq.x_star();
        let rhs = |t: f64, b: &[f64]| vec![(s.diagonal_value(t) - b[0]) * reverse_hazard(2, t).unwrap()];
        let tr = integrate_ode(rhs, xs, 2.0, &[5.0 / 6.0], 4000).unwrap();
        assert_abs_diff_eq!(eq.bid(2.0).unwrap().bid, tr.last()[0], epsilon = 1e-8);
    }

    #[test]
    fn small_reserve_recovers_no_reserve_bid() {
        for m in [2, 3, 5] {
            let s = half_half(m);
            let eq = CombinedEquilibrium::new(&s.with_reserve(1e-7).unwrap()).unwrap();
            for i in 1..=40 {
                let x = 2.0 * i as f64 / 40.0;
                let a = eq.bid(x).unwrap().bid;
                let b = bid_interdependent(&s, x).unwrap().bid;
                assert!((a - b).abs() < 1e-4, "M={m} x={x}");
            }
        }
    }

    #[test]
    fn uncertain_combined_examples() {
        let s = half_half(4).with_reserve(0.4).unwrap();
        let pmf = crate::bidder_count::BidderCountPMF::degenerate(5, 3).unwrap();
        for x in [0.9, 1.3, 2.0] {
            let mix = bid_combined_uncertain(&pmf, &s, x).unwrap().bid;
            assert_abs_diff_eq!(mix, bid_combined(&s, x).unwrap().bid, epsilon = 1e-14);
        }

        let pmf = discrete_symmetric_pmf(3).unwrap();
        let solved = combined_by_count(&pmf, &s).unwrap();
        for i in 1..=20 {
            let x = 0.1 * i as f64;
            let w = pmf.mixture_weights(ih_cdf(x).ln()).unwrap();
            assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            let per_count: Vec<f64> = solved
                .iter()
                .flatten()
                .map(|eq| if x < eq.x_star() { 0.0 } else { eq.bid(x).unwrap().bid })
                .collect();
            let b = bid_combined_uncertain_solved(&pmf, &solved, x).unwrap().bid;
            let lo = per_count.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = per_count.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(b >= lo - 1e-12 && b <= hi + 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(InterdepSpec::new(1, 0.5, 0.5).is_err());
        assert!(InterdepSpec::new(2, 1.5, 0.5).is_err());
        assert!(InterdepSpec::new(2, 0.5, -0.1).is_err());
        assert!(half_half(2).with_reserve(-1.0).is_err());
    }

    #[test]
    fn printed_kernel_turns_down_near_the_top() {
        // slope of the printed form at x = 2 is -4(α+ξ)(M-1)/((2M-1) 2^(2M-1)) < 0
        let s = printed(2);
        let b = |x| bid_irwinhall_closed(&s, x).unwrap().bid;
        assert!(b(2.0) < b(1.9));
        let e = half_half(2);
        let b = |x| bid_irwinhall_closed(&e, x).unwrap().bid;
        assert!(b(2.0) > b(1.9));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bids_bounded_and_monotone(
            m in 2usize..9,
            alpha in 0.0f64..1.0,
            xi in 0.0f64..1.0,
            x in 0.0f64..1.99,
        ) {
            let s = InterdepSpec::new(m, alpha, xi).unwrap();
            let b = bid_irwinhall_closed(&s, x).unwrap().bid;
            prop_assert!(b >= 0.0 && b <= s.diagonal_value(x) + 1e-12);
            let b2 = bid_irwinhall_closed(&s, x + 0.01).unwrap().bid;
            prop_assert!(b2 >= b - 1e-12);
        }

        #[test]
        fn printed_bids_bounded(m in 2usize..9, x in 0.0f64..2.0) {
            let s = printed(m);
            let b = bid_irwinhall_closed(&s, x).unwrap().bid;
            prop_assert!(b >= 0.0 && b <= s.diagonal_value(x) + 1e-12);
        }

        #[test]
        fn combined_bids_bounded_and_monotone(
            m in 2usize..7,
            r in 0.05f64..1.2,
            u in 0.0f64..1.0,
        ) {
            let s = half_half(m).with_reserve(r).unwrap();
            let eq = CombinedEquilibrium::new(&s).unwrap();
            let x = eq.x_star() + u * (1.99 - eq.x_star()).max(0.0);
            let b = eq.bid(x).unwrap().bid;
            prop_assert!(b >= r - 1e-12 && b <= s.diagonal_value(x) + 1e-12);
            let b2 = eq.bid((x + 0.01).min(2.0)).unwrap().bid;
            prop_assert!(b2 >= b - 1e-10);
        }
    }
}
