//! Uncertainty about the number of bidders.
//!
//! A [`BidderCountPMF`] is indexed by the number of **rivals** `l`, so the
//! auction has `l + 1` bidders with probability `p[l]`. `p[0]` is always zero
//! for the symmetric construction.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionKind, ValuationDistribution};
use crate::equilibrium::{bid_general, AuctionSpec, BidMethod, BidResult};
use crate::numerics::compensated_sum;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidderCountPMF {
    max_bidders: usize,
    p: Vec<f64>,
}

/// `1 / floor(M²/4)`.
pub fn delta_floor(max_bidders: usize) -> f64 {
    let m = max_bidders as u64;
    1.0 / ((m * m / 4) as f64)
}

/// The same normaliser written with `floor` and `mod 1` of `(M-1)/2`:
/// `1 / (k(k+1) + (frac + h)(2 frac))`, `h = (M-1)/2`, `k = floor(h)`, `frac = h mod 1`.
pub fn delta_mod(max_bidders: usize) -> f64 {
    let h = (max_bidders as f64 - 1.0) / 2.0;
    let k = h.floor();
    let frac = h % 1.0;
    1.0 / (k * (k + 1.0) + (frac + h) * (2.0 * frac))
}

fn check_max(max_bidders: usize) -> Result<()> {
    if max_bidders < 2 {
        return Err(Error::invalid(format!("an auction needs at least two bidders, got {max_bidders}")));
    }
    Ok(())
}

/// Exact rational weights of the symmetric PMF.
pub fn discrete_symmetric_pmf_exact(max_bidders: usize) -> Result<Vec<Ratio<u64>>> {
    check_max(max_bidders)?;
    let m = max_bidders as u64;
    let denom = m * m / 4;
    Ok((0..m)
        .map(|l| {
            let w = if 2 * l < m { l } else { m - l };
            Ratio::new(w, denom)
        })
        .collect())
}

/// Symmetric tent-shaped PMF over `0..M` rivals: `p_l = l Δ` up to `(M-1)/2`,
/// then `(M-l) Δ`, with `Δ = 1/floor(M²/4)`.
pub fn discrete_symmetric_pmf(max_bidders: usize) -> Result<BidderCountPMF> {
    check_max(max_bidders)?;
    let delta = delta_floor(max_bidders);
    let alt = delta_mod(max_bidders);
    if delta != alt {
        return Err(Error::invalid(format!("normaliser mismatch for M = {max_bidders}: {delta} vs {alt}")));
    }
    let m = max_bidders;
    let p = (0..m)
        .map(|l| {
            let w = if 2 * l < m { l } else { m - l };
            w as f64 * delta
        })
        .collect();
    Ok(BidderCountPMF { max_bidders, p })
}

impl BidderCountPMF {
    /// Arbitrary PMF over rival counts; must be nonnegative with unit sum.
    pub fn from_probabilities(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::invalid("a bidder-count PMF needs at least two entries"));
        }
        if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("probabilities must be finite and nonnegative"));
        }
        if p[0] > 0.0 {
            return Err(Error::invalid("p[0] must be zero: a bidder always faces at least one rival"));
        }
        let total = compensated_sum(p.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(BidderCountPMF { max_bidders: p.len(), p })
    }

    /// All mass on `rivals` rivals.
    pub fn degenerate(max_bidders: usize, rivals: usize) -> Result<Self> {
        check_max(max_bidders)?;
        if rivals == 0 || rivals >= max_bidders {
            return Err(Error::invalid(format!("rival count must lie in 1..{max_bidders}, got {rivals}")));
        }
        let mut p = vec![0.0; max_bidders];
        p[rivals] = 1.0;
        Ok(BidderCountPMF { max_bidders, p })
    }

    pub fn max_bidders(&self) -> usize {
        self.max_bidders
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.p.iter().copied())
    }

    /// Normalised posterior weights `p_l F(x)^l / Σ p_k F(x)^k`, computed in
    /// log space. `None` when `F(x) = 0`.
    pub fn mixture_weights(&self, ln_f: f64) -> Option<Vec<f64>> {
        if ln_f == f64::NEG_INFINITY {
            return None;
        }
        let logs: Vec<f64> = self
            .p
            .iter()
            .enumerate()
            .map(|(l, &p)| if p > 0.0 { p.ln() + l as f64 * ln_f } else { f64::NEG_INFINITY })
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = logs.iter().map(|&v| (v - top).exp()).collect();
        let total = compensated_sum(raw.iter().copied());
        Some(raw.into_iter().map(|w| w / total).collect())
    }
}

/// Posterior-weighted average of fixed-count bids, `Σ w_l β^(l+1)(x)`.
pub fn bid_uncertain(pmf: &BidderCountPMF, dist: &ValuationDistribution, x: f64) -> Result<BidResult> {
    let (lo, hi) = dist.support();
    if x.is_nan() || x < lo || x > hi {
        return Err(Error::OutsideSupport { valuation: x, lo, hi });
    }
    let Some(weights) = pmf.mixture_weights(dist.ln_cdf(x)) else {
        return Ok(BidResult { bid: 0.0, method: BidMethod::ClosedForm, est_error: None });
    };
    let uniform = matches!(dist.kind(), DistributionKind::Uniform { .. });
    let mut terms = Vec::with_capacity(weights.len());
    let mut err = 0.0;
    for (l, &w) in weights.iter().enumerate() {
        if l == 0 || w < 1e-18 {
            continue;
        }
        let b = if uniform {
            l as f64 / (l as f64 + 1.0) * x
        } else {
            let r = bid_general(&AuctionSpec::new(*dist, l + 1)?, x)?;
            err += w * r.est_error.unwrap_or(0.0);
            r.bid
        };
        terms.push(w * b);
    }
    let bid = compensated_sum(terms).clamp(0.0, x);
    if uniform {
        Ok(BidResult { bid, method: BidMethod::ClosedForm, est_error: None })
    } else {
        Ok(BidResult { bid, method: BidMethod::Quadrature, est_error: Some(err) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn normaliser_examples() {
        assert_eq!(delta_floor(2), 1.0);
        assert_eq!(delta_floor(6), 1.0 / 9.0);
        assert_eq!(delta_floor(7), 1.0 / 12.0);
        assert_eq!(delta_mod(6), 1.0 / 9.0);
        assert_eq!(delta_mod(7), 1.0 / 12.0);
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(discrete_symmetric_pmf(2).unwrap().probabilities(), &[0.0, 1.0]);
        assert_eq!(discrete_symmetric_pmf(4).unwrap().probabilities(), &[0.0, 0.25, 0.5, 0.25]);
        assert_eq!(discrete_symmetric_pmf(3).unwrap().probabilities(), &[0.0, 0.5, 0.5]);
        assert!(discrete_symmetric_pmf(1).is_err());
    }

    #[test]
    fn normalisers_agree_and_pmf_sums_to_one() {
        for m in 2..=1000 {
            assert_eq!(delta_floor(m), delta_mod(m), "M={m}");
            let pmf = discrete_symmetric_pmf(m).unwrap();
            assert!((pmf.total() - 1.0).abs() <= 1e-12, "M={m}");
            assert!(pmf.probabilities().iter().all(|&p| p >= 0.0));
            let p = pmf.probabilities();
            for l in 1..m {
                assert_eq!(p[l], p[m - l], "M={m} l={l}");
            }
        }
    }

    #[test]
    fn exact_rational_sum() {
        for m in 2..=64 {
            let p = discrete_symmetric_pmf_exact(m).unwrap();
            let total = p.iter().fold(Ratio::from_integer(0u64), |a, b| a + b);
            assert_eq!(total, Ratio::from_integer(1), "M={m}");
            let float = discrete_symmetric_pmf(m).unwrap();
            for (exact, f) in p.iter().zip(float.probabilities()) {
                assert!((*exact.numer() as f64 / *exact.denom() as f64 - f).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn explicit_pmf_validation() {
        assert!(BidderCountPMF::from_probabilities(vec![0.0, 0.5, 0.5]).is_ok());
        assert!(BidderCountPMF::from_probabilities(vec![0.0, 0.5, 0.4]).is_err());
        assert!(BidderCountPMF::from_probabilities(vec![0.1, 0.5, 0.4]).is_err());
        assert!(BidderCountPMF::from_probabilities(vec![0.0, -0.5, 1.5]).is_err());
        assert!(BidderCountPMF::degenerate(4, 0).is_err());
        assert!(BidderCountPMF::degenerate(4, 4).is_err());
    }

    #[test]
    fn mixture_examples() {
        let u = ValuationDistribution::uniform(1.0).unwrap();
        let two = discrete_symmetric_pmf(2).unwrap();
        assert_abs_diff_eq!(bid_uncertain(&two, &u, 0.6).unwrap().bid, 0.3, epsilon = 1e-15);
        let three = discrete_symmetric_pmf(3).unwrap();
        assert_abs_diff_eq!(bid_uncertain(&three, &u, 1.0).unwrap().bid, 7.0 / 12.0, epsilon = 1e-15);
        let degenerate = BidderCountPMF::degenerate(6, 3).unwrap();
        assert_abs_diff_eq!(bid_uncertain(&degenerate, &u, 0.7).unwrap().bid, 0.75 * 0.7, epsilon = 1e-15);
        assert_eq!(bid_uncertain(&three, &u, 0.0).unwrap().bid, 0.0);
    }

    #[test]
    fn uniform_fast_path_matches_quadrature_path() {
        let u = ValuationDistribution::uniform(1.0).unwrap();
        let pmf = discrete_symmetric_pmf(5).unwrap();
        let x = 0.8;
        let w = pmf.mixture_weights(u.ln_cdf(x)).unwrap();
        let direct: f64 = (1..5)
            .map(|l| w[l] * bid_general(&AuctionSpec::new(u, l + 1).unwrap(), x).unwrap().bid)
            .sum();
        assert_abs_diff_eq!(bid_uncertain(&pmf, &u, x).unwrap().bid, direct, epsilon = 1e-9);
    }

    #[test]
    fn deep_tail_weights_stay_finite() {
        let ln = ValuationDistribution::lognormal(0.0, 0.3).unwrap();
        let pmf = discrete_symmetric_pmf(40).unwrap();
        let w = pmf.mixture_weights(ln.ln_cdf(0.01)).unwrap();
        assert!(w.iter().all(|v| v.is_finite()));
        assert_abs_diff_eq!(w[1], 1.0, epsilon = 1e-9);
        let b = bid_uncertain(&pmf, &ln, 0.01).unwrap().bid;
        assert!(b > 0.0 && b <= 0.01);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn mixture_bounded_by_extreme_counts(m in 2usize..9, x in 0.05f64..2.0) {
            let d = ValuationDistribution::irwin_hall2();
            let pmf = discrete_symmetric_pmf(m).unwrap();
            let b = bid_uncertain(&pmf, &d, x).unwrap().bid;
            let fixed: Vec<f64> = (1..m)
                .map(|l| bid_general(&AuctionSpec::new(d, l + 1).unwrap(), x).unwrap().bid)
                .collect();
            let lo = fixed.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = fixed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(b >= lo - 1e-12 && b <= hi + 1e-12);
        }

        #[test]
        fn mixture_is_monotone(m in 2usize..12, x in 0.0f64..0.99) {
            let u = ValuationDistribution::uniform(1.0).unwrap();
            let pmf = discrete_symmetric_pmf(m).unwrap();
            let a = bid_uncertain(&pmf, &u, x).unwrap().bid;
            let b = bid_uncertain(&pmf, &u, x + 0.01).unwrap().bid;
            prop_assert!(b >= a);
        }
    }
}
