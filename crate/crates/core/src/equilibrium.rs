//! Symmetric independent-private-value equilibrium: bids, payments and revenue,
//! with and without a reserve price.
//!
//! With `M` bidders and rival maximum `G = F^(M-1)`, the equilibrium bid is
//! `β(x) = x - ∫_r^x G(y)/G(x) dy` (with `r = 0` when there is no reserve).
//! The ratio `G(y)/G(x)` is always evaluated in log space so that deep
//! log-normal tails neither underflow nor produce `0/0`.

use serde::{Deserialize, Serialize};

use crate::distributions::{order_stat, std_normal_pdf, ValuationDistribution};
use crate::numerics::{find_root, integrate, integrate_detailed, QuadratureSpec, RootSpec};
use crate::{Error, Result};

/// How a bid value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BidMethod {
    ClosedForm,
    Quadrature,
    TaylorApprox,
    OdeShooting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidResult {
    pub bid: f64,
    pub method: BidMethod,
    pub est_error: Option<f64>,
}

impl BidResult {
    fn closed(bid: f64) -> Self {
        BidResult { bid, method: BidMethod::ClosedForm, est_error: None }
    }
}

/// Bidder count, valuation distribution, reserve price and seller valuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuctionSpec {
    bidders: usize,
    dist: ValuationDistribution,
    reserve: f64,
    seller_value: f64,
}

impl AuctionSpec {
    pub fn new(dist: ValuationDistribution, bidders: usize) -> Result<Self> {
        if bidders < 2 {
            return Err(Error::invalid(format!("an auction needs at least two bidders, got {bidders}")));
        }
        Ok(AuctionSpec { bidders, dist, reserve: 0.0, seller_value: 0.0 })
    }

    /// Reserve price; must be 0 or inside the support.
    pub fn with_reserve(mut self, reserve: f64) -> Result<Self> {
        let (_, hi) = self.dist.support();
        if !(reserve >= 0.0 && reserve.is_finite() && reserve <= hi) {
            return Err(Error::invalid(format!("reserve {reserve} must lie in [0, {hi}]")));
        }
        self.reserve = reserve;
        Ok(self)
    }

    pub fn with_seller_value(mut self, seller_value: f64) -> Result<Self> {
        let (_, hi) = self.dist.support();
        if !(seller_value >= 0.0 && seller_value.is_finite() && seller_value < hi) {
            return Err(Error::invalid(format!("seller value {seller_value} must lie in [0, {hi})")));
        }
        self.seller_value = seller_value;
        Ok(self)
    }

    pub fn bidders(&self) -> usize {
        self.bidders
    }

    pub fn dist(&self) -> &ValuationDistribution {
        &self.dist
    }

    pub fn reserve(&self) -> f64 {
        self.reserve
    }

    pub fn seller_value(&self) -> f64 {
        self.seller_value
    }
}

fn check_valuation(dist: &ValuationDistribution, x: f64) -> Result<()> {
    let (lo, hi) = dist.support();
    if x.is_nan() || x < lo || x > hi {
        return Err(Error::OutsideSupport { valuation: x, lo, hi });
    }
    Ok(())
}

fn check_bidders(bidders: usize) -> Result<()> {
    if bidders < 2 {
        return Err(Error::invalid(format!("an auction needs at least two bidders, got {bidders}")));
    }
    Ok(())
}

/// `x - ∫_lo^x (F(y)/F(x))^(M-1) dy` with the ratio taken in log space.
fn shaded_bid(spec: &AuctionSpec, lo: f64, x: f64, quad: &QuadratureSpec) -> Result<BidResult> {
    let dist = spec.dist;
    let rivals = (spec.bidders - 1) as f64;
    let ln_fx = dist.ln_cdf(x);
    if ln_fx == f64::NEG_INFINITY {
        return Ok(BidResult { bid: 0.0, method: BidMethod::Quadrature, est_error: Some(0.0) });
    }
    // Integrate the shading `1 - G(y)/G(x)` rather than `G(y)/G(x)`, so the
    // error scales with the bid instead of with `x` deep in the upper tail.
    let q = integrate_detailed(
        |y| {
            let l = dist.ln_cdf(y);
            if l == f64::NEG_INFINITY {
                1.0
            } else {
                (-(rivals * (l - ln_fx)).min(0.0).exp_m1()).max(0.0)
            }
        },
        lo,
        x,
        quad,
    )?;
    let bid = (lo + q.value).clamp(lo.min(x), x);
    Ok(BidResult { bid, method: BidMethod::Quadrature, est_error: Some(q.error_estimate) })
}

/// Equilibrium bid by quadrature. A positive reserve in `spec` is honoured.
pub fn bid_general(spec: &AuctionSpec, x: f64) -> Result<BidResult> {
    bid_general_with(spec, x, &QuadratureSpec::default())
}

pub fn bid_general_with(spec: &AuctionSpec, x: f64, quad: &QuadratureSpec) -> Result<BidResult> {
    if spec.reserve > 0.0 {
        return bid_reserve_general_with(spec, x, quad);
    }
    check_valuation(&spec.dist, x)?;
    if x == 0.0 {
        return Ok(BidResult { bid: 0.0, method: BidMethod::Quadrature, est_error: Some(0.0) });
    }
    shaded_bid(spec, 0.0, x, quad)
}

/// `(M-1)x/M` for valuations uniform on `[0, omega]`.
pub fn bid_uniform(bidders: usize, x: f64, omega: f64) -> Result<BidResult> {
    check_bidders(bidders)?;
    let dist = ValuationDistribution::uniform(omega)?;
    check_valuation(&dist, x)?;
    let m = bidders as f64;
    Ok(BidResult::closed((m - 1.0) * x / m))
}

/// Rough small-parameter log-normal approximation `x/2`, reported together with
/// its distance from the quadrature bid.
pub fn bid_lognormal_approx(mu: f64, sigma: f64, bidders: usize, x: f64) -> Result<BidResult> {
    let dist = ValuationDistribution::lognormal(mu, sigma)?;
    let spec = AuctionSpec::new(dist, bidders)?;
    check_valuation(&dist, x)?;
    let approx = 0.5 * x;
    let exact = bid_general(&spec, x)?.bid;
    Ok(BidResult { bid: approx, method: BidMethod::TaylorApprox, est_error: Some((exact - approx).abs()) })
}

/// Bid of a bidder who clears the reserve: `x - ∫_r^x G(y)/G(x) dy`, `β(r) = r`.
pub fn bid_reserve_general(spec: &AuctionSpec, x: f64) -> Result<BidResult> {
    bid_reserve_general_with(spec, x, &QuadratureSpec::default())
}

pub fn bid_reserve_general_with(spec: &AuctionSpec, x: f64, quad: &QuadratureSpec) -> Result<BidResult> {
    let r = spec.reserve;
    check_valuation(&spec.dist, x)?;
    if x < r {
        return Err(Error::BelowReserve { valuation: x, reserve: r });
    }
    if x == r {
        return Ok(BidResult { bid: r, method: BidMethod::Quadrature, est_error: Some(0.0) });
    }
    shaded_bid(spec, r, x, quad)
}

fn check_reserve_window(r: f64, x: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("reserve must be >= 0, got {r}")));
    }
    if x < r {
        return Err(Error::BelowReserve { valuation: x, reserve: r });
    }
    Ok(())
}

/// Uniform closed form with reserve: `r^M/(M x^(M-1)) + (M-1)x/M`.
pub fn bid_reserve_uniform(bidders: usize, r: f64, x: f64, omega: f64) -> Result<BidResult> {
    reserve_uniform(bidders, r, x, omega, 1.0)
}

/// The same closed form with an `(M+1)/M` leading coefficient. Kept for comparison only: it violates `β(r) = r`.
pub fn bid_reserve_uniform_literal(bidders: usize, r: f64, x: f64, omega: f64) -> Result<BidResult> {
    reserve_uniform(bidders, r, x, omega, bidders as f64 + 1.0)
}

fn reserve_uniform(bidders: usize, r: f64, x: f64, omega: f64, lead: f64) -> Result<BidResult> {
    check_bidders(bidders)?;
    let dist = ValuationDistribution::uniform(omega)?;
    check_valuation(&dist, x)?;
    check_reserve_window(r, x)?;
    let m = bidders as f64;
    if x == 0.0 {
        return Ok(BidResult::closed(0.0));
    }
    let tail = if r == 0.0 { 0.0 } else { lead * r * (r / x).powi(bidders as i32 - 1) / m };
    Ok(BidResult::closed(tail + (m - 1.0) * x / m))
}

/// First-order Taylor approximation of the log-normal reserve bid,
/// `x - h(r)(x-r)/h(x)` with `h(y) = Φ((ln y - μ)/σ)^(M-1)`.
/// `est_error` is the distance from the quadrature bid.
pub fn bid_reserve_lognormal(mu: f64, sigma: f64, bidders: usize, r: f64, x: f64) -> Result<BidResult> {
    let dist = ValuationDistribution::lognormal(mu, sigma)?;
    check_bidders(bidders)?;
    if !(r > 0.0) {
        return Err(Error::invalid(format!("log-normal reserve must be > 0, got {r}")));
    }
    check_valuation(&dist, x)?;
    check_reserve_window(r, x)?;
    if x == r {
        return Ok(BidResult { bid: r, method: BidMethod::TaylorApprox, est_error: Some(0.0) });
    }
    let rivals = (bidders - 1) as f64;
    let ratio = (rivals * (dist.ln_cdf(r) - dist.ln_cdf(x))).exp();
    let approx = x - ratio * (x - r);
    let spec = AuctionSpec::new(dist, bidders)?.with_reserve(r)?;
    let exact = bid_reserve_general(&spec, x)?.bid;
    Ok(BidResult { bid: approx, method: BidMethod::TaylorApprox, est_error: Some((exact - approx).abs()) })
}

/// Literal variant with `h'(r)` in place of `h(r)`, where `h` uses the
/// unnormalised Gaussian integral `∫ e^(-t²/2) dt = √(2π) Φ`. Comparison only.
pub fn bid_reserve_lognormal_literal(mu: f64, sigma: f64, bidders: usize, r: f64, x: f64) -> Result<BidResult> {
    let dist = ValuationDistribution::lognormal(mu, sigma)?;
    check_bidders(bidders)?;
    if !(r > 0.0) {
        return Err(Error::invalid(format!("log-normal reserve must be > 0, got {r}")));
    }
    check_valuation(&dist, x)?;
    check_reserve_window(r, x)?;
    let k = (bidders - 1) as f64;
    let scale = (2.0 * std::f64::consts::PI).sqrt();
    let zr = (r.ln() - mu) / sigma;
    let h = |y: f64| (scale * dist.cdf(y)).powf(k);
    let h_prime_r = k * (scale * dist.cdf(r)).powf(k - 1.0) * scale * std_normal_pdf(zr) / (sigma * r);
    let bid = x - h_prime_r * (x - r) / h(x);
    let spec = AuctionSpec::new(dist, bidders)?.with_reserve(r)?;
    let exact = bid_reserve_general(&spec, x)?.bid;
    Ok(BidResult { bid, method: BidMethod::TaylorApprox, est_error: Some((exact - bid).abs()) })
}

/// Seller-optimal reserve: root of `r - (1 - F(r))/f(r) - x_s`.
pub fn optimal_reserve(dist: &ValuationDistribution, seller_value: f64) -> Result<f64> {
    let hi = dist.upper_limit();
    if !(seller_value >= 0.0 && seller_value < hi) {
        return Err(Error::invalid(format!("seller value {seller_value} must lie in [0, {hi})")));
    }
    let psi = |r: f64| {
        let f = dist.pdf(r);
        if f <= 0.0 {
            return if dist.cdf(r) >= 1.0 { r - seller_value } else { f64::NEG_INFINITY };
        }
        r - (1.0 - dist.cdf(r)) / f - seller_value
    };
    // First sign change on a grid, then refine.
    let n = 400;
    let lo = hi * 1e-9;
    let mut a = lo;
    let mut fa = psi(a);
    for i in 1..=n {
        let b = lo + (hi - lo) * i as f64 / n as f64;
        let fb = psi(b);
        if fa < 0.0 && fb >= 0.0 {
            let spec = RootSpec { bracket: (a, b), tol: 1e-13 * b.max(1.0), max_iter: 400 };
            return find_root(psi, &spec);
        }
        a = b;
        fa = fb;
    }
    Err(Error::NoSignChange { lo, hi, f_lo: psi(lo), f_hi: psi(hi) })
}

/// Interim expected payment `m(x) = G(x) β(x)` with no reserve.
pub fn expected_payment(dist: &ValuationDistribution, bidders: usize, x: f64) -> Result<f64> {
    let spec = AuctionSpec::new(*dist, bidders)?;
    let g = order_stat(*dist, bidders)?;
    let bid = bid_general(&spec, x)?.bid;
    Ok(g.cdf(x) * bid)
}

/// Ex-ante expected payment of one bidder, `∫ y (1 - F(y)) g(y) dy`.
pub fn ex_ante_payment(dist: &ValuationDistribution, bidders: usize) -> Result<f64> {
    ex_ante_payment_with_reserve(dist, bidders, 0.0)
}

/// Ex-ante payment with reserve `r`:
/// `r G(r)(1 - F(r)) + ∫_r^ω y (1 - F(y)) g(y) dy`.
pub fn ex_ante_payment_with_reserve(dist: &ValuationDistribution, bidders: usize, r: f64) -> Result<f64> {
    let g = order_stat(*dist, bidders)?;
    let hi = dist.upper_limit();
    if !(r >= 0.0 && r <= hi) {
        return Err(Error::invalid(format!("reserve {r} must lie in [0, {hi}]")));
    }
    let quad = QuadratureSpec::with_tolerances(1e-12, 1e-10)?;
    let body = integrate(|y| y * (1.0 - dist.cdf(y)) * g.pdf(y), r, hi, &quad)?;
    Ok(r * g.cdf(r) * (1.0 - dist.cdf(r)) + body)
}

/// Seller revenue `M · E[m]`.
pub fn expected_revenue(dist: &ValuationDistribution, bidders: usize) -> Result<f64> {
    Ok(bidders as f64 * ex_ante_payment(dist, bidders)?)
}

pub fn expected_revenue_with_reserve(spec: &AuctionSpec) -> Result<f64> {
    Ok(spec.bidders as f64 * ex_ante_payment_with_reserve(&spec.dist, spec.bidders, spec.reserve)?)
}
