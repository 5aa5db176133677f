//! Monte Carlo auction simulation, best-response scans and the invariant suite
//! behind the `check` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymmetric::{solve_two_group, TwoGroupSpec};
use crate::bidder_count::{delta_floor, delta_mod, discrete_symmetric_pmf};
use crate::distributions::{DistributionKind, ValuationDistribution};
use crate::equilibrium::{bid_general, bid_reserve_uniform, bid_uniform, optimal_reserve, AuctionSpec};
use crate::interdependent::{bid_combined, bid_irwinhall_closed, bid_interdependent, x_star, InterdepSpec, KernelForm};
use crate::numerics::{integrate, QuadratureSpec};
use crate::{Error, Result};

/// Number of batches behind every standard error.
pub const BATCHES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub rounds: usize,
    pub mean_revenue: f64,
    pub revenue_std_error: f64,
    /// Seller payoff including `x_s` kept on rounds with no sale.
    pub mean_seller_payoff: f64,
    pub mean_payment_per_bidder: f64,
    pub win_rate_by_bidder: Vec<f64>,
    pub no_sale_rate: f64,
    pub no_sale_std_error: f64,
    pub seed: u64,
}

#[derive(Default, Clone)]
struct Tally {
    rounds: usize,
    revenue: f64,
    no_sale: usize,
    wins: Vec<usize>,
}

/// Runs `rounds` first-price auctions under `spec`, every bidder using `strategy`.
///
/// Bids below the reserve (or a [`Error::BelowReserve`] from the strategy) are
/// non-bids. Ties go to a uniformly drawn winner. Batch `b` uses ChaCha stream
/// `b`, so results do not depend on the thread count.
pub fn simulate<S>(spec: &AuctionSpec, strategy: S, rounds: usize, seed: u64) -> Result<SimulationReport>
where
    S: Fn(f64) -> Result<f64> + Sync,
{
    if rounds < BATCHES {
        return Err(Error::invalid(format!("need at least {BATCHES} rounds, got {rounds}")));
    }
    let m = spec.bidders();
    let r = spec.reserve();
    let dist = *spec.dist();

    let tallies = (0..BATCHES)
        .into_par_iter()
        .map(|b| -> Result<Tally> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let n = rounds / BATCHES + usize::from(b < rounds % BATCHES);
            let mut t = Tally { rounds: n, wins: vec![0; m], ..Tally::default() };
            let mut bids = vec![0.0; m];
            let mut tied = Vec::with_capacity(m);
            for _ in 0..n {
                for bid in bids.iter_mut() {
                    let v = dist.draw(&mut rng);
                    *bid = match strategy(v) {
                        Ok(b) if b > v * (1.0 + 1e-12) + 1e-15 => return Err(Error::Overbid { bid: b, valuation: v }),
                        Ok(b) if b >= r && b.is_finite() => b,
                        Ok(_) | Err(Error::BelowReserve { .. }) => f64::NEG_INFINITY,
                        Err(e) => return Err(e),
                    };
                }
                let top = bids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if top == f64::NEG_INFINITY {
                    t.no_sale += 1;
                    continue;
                }
                tied.clear();
                tied.extend((0..m).filter(|&i| bids[i] == top));
                let winner = if tied.len() == 1 { tied[0] } else { tied[rng.random_range(0..tied.len())] };
                t.wins[winner] += 1;
                t.revenue += top;
            }
            Ok(t)
        })
        .collect::<Result<Vec<Tally>>>()?;

    let revenue: f64 = tallies.iter().map(|t| t.revenue).sum();
    let no_sale: usize = tallies.iter().map(|t| t.no_sale).sum();
    let mut wins = vec![0usize; m];
    for t in &tallies {
        for (w, c) in wins.iter_mut().zip(&t.wins) {
            *w += c;
        }
    }
    let n = rounds as f64;
    let mean_revenue = revenue / n;
    let no_sale_rate = no_sale as f64 / n;
    Ok(SimulationReport {
        rounds,
        mean_revenue,
        revenue_std_error: batch_std_error(tallies.iter().map(|t| t.revenue / t.rounds as f64)),
        mean_seller_payoff: mean_revenue + no_sale_rate * spec.seller_value(),
        mean_payment_per_bidder: mean_revenue / m as f64,
        win_rate_by_bidder: wins.iter().map(|w| *w as f64 / n).collect(),
        no_sale_rate,
        no_sale_std_error: batch_std_error(tallies.iter().map(|t| t.no_sale as f64 / t.rounds as f64)),
        seed,
    })
}

fn batch_std_error(means: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = means.collect();
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

/// The symmetric equilibrium strategy for `spec`: closed forms for uniform
/// valuations, quadrature otherwise. Types below the reserve get `BelowReserve`.
pub fn equilibrium_strategy(spec: &AuctionSpec) -> impl Fn(f64) -> Result<f64> + Sync + '_ {
    move |x| match spec.dist().kind() {
        DistributionKind::Uniform { omega } if spec.reserve() > 0.0 => {
            Ok(bid_reserve_uniform(spec.bidders(), spec.reserve(), x, omega)?.bid)
        }
        DistributionKind::Uniform { omega } => Ok(bid_uniform(spec.bidders(), x, omega)?.bid),
        _ => Ok(bid_general(spec, x)?.bid),
    }
}

/// Truthful bidding, `β(x) = x`.
pub fn truthful_strategy(x: f64) -> Result<f64> {
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseReport {
    pub valuation: f64,
    /// Type whose equilibrium bid maximises the payoff on the grid.
    pub argmax_type: f64,
    pub argmax_bid: f64,
    pub max_payoff: f64,
    /// Payoff from bidding `β(x)`.
    pub equilibrium_payoff: f64,
    /// `equilibrium_payoff - max_payoff`: how far the grid optimum falls short of
    /// bidding `β(x)`; non-negative up to rounding.
    pub margin: f64,
    pub grid_step: f64,
}

/// Scans `Π(β(z), x) = G(z)(x - β(z))` over an evenly spaced grid of mimicked types `z`.
pub fn best_response_scan(spec: &AuctionSpec, x: f64, grid: usize) -> Result<BestResponseReport> {
    if grid < 11 {
        return Err(Error::invalid(format!("grid needs at least 11 points, got {grid}")));
    }
    let dist = spec.dist();
    let r = spec.reserve();
    if !dist.in_support(x) || x < r {
        return Err(Error::invalid(format!("valuation {x} must be in the support and at least the reserve {r}")));
    }
    let rivals = (spec.bidders() - 1) as i32;
    let beta = equilibrium_strategy(spec);
    let payoff = |z: f64| -> Result<(f64, f64)> {
        let b = beta(z)?;
        Ok((dist.cdf(z).powi(rivals) * (x - b), b))
    };
    let hi = dist.upper_limit();
    let step = (hi - r) / (grid - 1) as f64;
    let mut best = (f64::NEG_INFINITY, r, 0.0);
    for i in 0..grid {
        let z = if i + 1 == grid { hi } else { r + step * i as f64 };
        let (p, b) = payoff(z)?;
        if p > best.0 {
            best = (p, z, b);
        }
    }
    let (eq, _) = payoff(x)?;
    Ok(BestResponseReport {
        valuation: x,
        argmax_type: best.1,
        argmax_bid: best.2,
        max_payoff: best.0,
        equilibrium_payoff: eq,
        margin: eq - best.0,
        grid_step: step,
    })
}

/// `Π(β(x),x) - Π(β(z),x) = G(z)(z - x) - ∫_x^z G`, non-negative for any `z`.
pub fn deviation_gap(spec: &AuctionSpec, x: f64, z: f64) -> Result<f64> {
    let dist = *spec.dist();
    let rivals = (spec.bidders() - 1) as i32;
    let g = |y: f64| dist.cdf(y).powi(rivals);
    let area = integrate(g, x.min(z), x.max(z), &QuadratureSpec::default())?;
    let signed = if z >= x { area } else { -area };
    Ok(g(z) * (z - x) - signed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, run: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    let (passed, detail) = run().unwrap_or_else(|e| (false, e.to_string()));
    CheckResult { name: name.to_string(), passed, detail }
}

/// A fast end-to-end invariant sweep across every module.
pub fn run_invariant_checks(seed: u64) -> Vec<CheckResult> {
    vec![
        check("uniform closed form matches quadrature", || {
            let mut worst: f64 = 0.0;
            for m in [2, 3, 5, 10] {
                let spec = AuctionSpec::new(ValuationDistribution::uniform(1.0)?, m)?;
                for i in 1..=20 {
                    let x = i as f64 / 20.0;
                    worst = worst.max((bid_uniform(m, x, 1.0)?.bid - bid_general(&spec, x)?.bid).abs());
                }
            }
            Ok((worst <= 1e-6, format!("max gap {worst:.2e}")))
        }),
        check("reserve bidder bids the reserve", || {
            let mut worst: f64 = 0.0;
            for (m, r) in [(2, 0.3), (4, 0.5), (7, 0.8)] {
                worst = worst.max((bid_reserve_uniform(m, r, r, 1.0)?.bid - r).abs());
                let spec = AuctionSpec::new(ValuationDistribution::lognormal(0.0, 0.5)?, m)?.with_reserve(r)?;
                worst = worst.max((bid_general(&spec, r)?.bid - r).abs());
            }
            Ok((worst <= 1e-8, format!("max |β(r) - r| {worst:.2e}")))
        }),
        check("optimal uniform reserve", || {
            let u = ValuationDistribution::uniform(1.0)?;
            let (a, b) = (optimal_reserve(&u, 0.0)?, optimal_reserve(&u, 0.5)?);
            Ok(((a - 0.5).abs() <= 1e-9 && (b - 0.75).abs() <= 1e-9, format!("r*(0) = {a}, r*(0.5) = {b}")))
        }),
        check("bidder-count pmf normalised", || {
            let mut ok = true;
            for m in 2..=200 {
                let p = discrete_symmetric_pmf(m)?;
                ok &= (p.total() - 1.0).abs() <= 1e-12 && p.probabilities().iter().all(|v| *v >= 0.0);
                ok &= delta_floor(m) == delta_mod(m);
            }
            Ok((ok, "M = 2..200".into()))
        }),
        check("interdependent closed form matches quadrature", || {
            let mut worst: f64 = 0.0;
            for m in [2, 3, 5] {
                let spec = InterdepSpec::new(m, 0.5, 0.5)?;
                for i in 1..=20 {
                    let x = i as f64 / 10.0;
                    worst = worst.max((bid_irwinhall_closed(&spec, x)?.bid - bid_interdependent(&spec, x)?.bid).abs());
                }
            }
            let printed = InterdepSpec::new(2, 0.5, 0.5)?.with_kernel(KernelForm::Printed);
            let top = bid_irwinhall_closed(&printed, 2.0)?.bid;
            Ok((worst <= 1e-6 && (top - 5.0 / 6.0).abs() <= 1e-9, format!("max gap {worst:.2e}, printed β(2) = {top}")))
        }),
        check("screening level bids the reserve", || {
            let spec = InterdepSpec::new(2, 0.5, 0.5)?.with_reserve(5.0 / 6.0)?;
            let xs = x_star(&spec)?;
            let b = bid_combined(&spec, xs)?.bid;
            Ok(((b - 5.0 / 6.0).abs() <= 1e-8, format!("x* = {xs}, β(x*) = {b}")))
        }),
        check("asymmetric solver reduces to symmetric", || {
            let u = ValuationDistribution::uniform(1.0)?;
            let table = solve_two_group(&TwoGroupSpec::new(u, u, 1, 4)?, 400)?;
            let mut worst: f64 = 0.0;
            for i in 1..20 {
                let x = i as f64 / 20.0;
                worst = worst.max((table.bid(1, x)? - 0.75 * x).abs());
            }
            Ok((worst <= 1e-4, format!("sup gap {worst:.2e}")))
        }),
        check("simulated revenue matches M E[m]", || {
            let spec = AuctionSpec::new(ValuationDistribution::uniform(1.0)?, 2)?;
            let rep = simulate(&spec, equilibrium_strategy(&spec), 100_000, seed)?;
            let z = (rep.mean_revenue - 1.0 / 3.0) / rep.revenue_std_error;
            Ok((z.abs() <= 4.0, format!("revenue {:.5} ± {:.5}", rep.mean_revenue, rep.revenue_std_error)))
        }),
        check("equilibrium is a best response", || {
            let spec = AuctionSpec::new(ValuationDistribution::uniform(1.0)?, 2)?;
            let rep = best_response_scan(&spec, 0.7, 101)?;
            let gap = deviation_gap(&spec, 0.7, 0.2)?.min(deviation_gap(&spec, 0.7, 0.95)?);
            Ok(((rep.argmax_type - 0.7).abs() <= rep.grid_step && gap >= 0.0, format!("argmax z = {}", rep.argmax_type)))
        }),
    ]
}
