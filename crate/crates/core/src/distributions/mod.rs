//! Valuation distributions and the highest-order-statistic transform.
//!
//! A [`ValuationDistribution`] is an immutable, validated value: invalid
//! parameters are rejected when it is built, never when it is evaluated.
//! On the wire it is `{"kind": "...", "params": {...}}`.

mod normal;

pub use normal::{ln_std_normal_cdf, std_normal_cdf, std_normal_pdf, std_normal_quantile};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::numerics::{find_root, RootSpec};
use crate::{Error, Result};

/// Upper tail mass cut off when an unbounded support has to be truncated.
pub const TAIL_MASS: f64 = 1e-10;

/// Distribution family and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum DistributionKind {
    /// Uniform on `[0, omega]`.
    #[serde(rename = "uniform")]
    Uniform { omega: f64 },
    /// `exp(W)` with `W ~ N(mu, sigma)`.
    #[serde(rename = "lognormal", alias = "log_normal")]
    LogNormal { mu: f64, sigma: f64 },
    /// Sum of two independent standard uniforms, support `[0, 2]`.
    #[serde(rename = "irwin_hall2", alias = "irwin-hall2")]
    IrwinHall2 {},
    /// `|N(mu0, sigma0)|`.
    #[serde(rename = "folded_normal", alias = "folded-normal")]
    FoldedNormal { mu0: f64, sigma0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionKind", into = "DistributionKind")]
pub struct ValuationDistribution {
    kind: DistributionKind,
}

impl TryFrom<DistributionKind> for ValuationDistribution {
    type Error = Error;

    fn try_from(kind: DistributionKind) -> Result<Self> {
        ValuationDistribution::new(kind)
    }
}

impl From<ValuationDistribution> for DistributionKind {
    fn from(d: ValuationDistribution) -> Self {
        d.kind
    }
}

impl ValuationDistribution {
    pub fn new(kind: DistributionKind) -> Result<Self> {
        match kind {
            DistributionKind::Uniform { omega } => {
                if !(omega > 0.0 && omega.is_finite()) {
                    return Err(Error::invalid(format!("uniform omega must be > 0, got {omega}")));
                }
            }
            DistributionKind::LogNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::invalid(format!("lognormal mu must be finite, got {mu}")));
                }
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::invalid(format!("lognormal sigma must be > 0, got {sigma}")));
                }
            }
            DistributionKind::IrwinHall2 {} => {}
            DistributionKind::FoldedNormal { mu0, sigma0 } => {
                if !mu0.is_finite() {
                    return Err(Error::invalid(format!("folded normal mu0 must be finite, got {mu0}")));
                }
                if !(sigma0 > 0.0 && sigma0.is_finite()) {
                    return Err(Error::invalid(format!("folded normal sigma0 must be > 0, got {sigma0}")));
                }
            }
        }
        Ok(ValuationDistribution { kind })
    }

    pub fn uniform(omega: f64) -> Result<Self> {
        Self::new(DistributionKind::Uniform { omega })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(DistributionKind::LogNormal { mu, sigma })
    }

    pub fn irwin_hall2() -> Self {
        ValuationDistribution { kind: DistributionKind::IrwinHall2 {} }
    }

    pub fn folded_normal(mu0: f64, sigma0: f64) -> Result<Self> {
        Self::new(DistributionKind::FoldedNormal { mu0, sigma0 })
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    /// Closed support `[lo, hi]`; `hi` is `+inf` for unbounded families.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            DistributionKind::Uniform { omega } => (0.0, omega),
            DistributionKind::IrwinHall2 {} => (0.0, 2.0),
            DistributionKind::LogNormal { .. } | DistributionKind::FoldedNormal { .. } => (0.0, f64::INFINITY),
        }
    }

    /// Finite upper limit for integrals over the support: `hi` itself, or the
    /// `1 - TAIL_MASS` quantile when the support is unbounded.
    pub fn upper_limit(&self) -> f64 {
        let (_, hi) = self.support();
        if hi.is_finite() {
            hi
        } else {
            self.quantile(1.0 - TAIL_MASS)
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        let (lo, hi) = self.support();
        x >= lo && x <= hi
    }

    /// F(x), clamped to 0 below and 1 above the support.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.kind {
            DistributionKind::Uniform { omega } => (x / omega).clamp(0.0, 1.0),
            DistributionKind::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x.ln() - mu) / sigma)
                }
            }
            DistributionKind::IrwinHall2 {} => irwin_hall2_cdf(x),
            DistributionKind::FoldedNormal { mu0, sigma0 } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let v = std_normal_cdf((x - mu0) / sigma0) + std_normal_cdf((x + mu0) / sigma0) - 1.0;
                    v.clamp(0.0, 1.0)
                }
            }
        }
    }

    /// ln F(x); stays finite in the far lower tail of the log-normal.
    pub fn ln_cdf(&self, x: f64) -> f64 {
        match self.kind {
            DistributionKind::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    ln_std_normal_cdf((x.ln() - mu) / sigma)
                }
            }
            _ => self.cdf(x).ln(),
        }
    }

    /// f(x); zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        match self.kind {
            DistributionKind::Uniform { omega } => {
                if (0.0..=omega).contains(&x) {
                    1.0 / omega
                } else {
                    0.0
                }
            }
            DistributionKind::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_pdf((x.ln() - mu) / sigma) / (x * sigma)
                }
            }
            DistributionKind::IrwinHall2 {} => irwin_hall2_pdf(x),
            DistributionKind::FoldedNormal { mu0, sigma0 } => {
                if x < 0.0 {
                    0.0
                } else {
                    (std_normal_pdf((x - mu0) / sigma0) + std_normal_pdf((x + mu0) / sigma0)) / sigma0
                }
            }
        }
    }

    /// F⁻¹(p) for p in [0, 1].
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self.kind {
            DistributionKind::Uniform { omega } => p * omega,
            DistributionKind::LogNormal { mu, sigma } => {
                if p == 0.0 {
                    0.0
                } else {
                    (mu + sigma * std_normal_quantile(p)).exp()
                }
            }
            DistributionKind::IrwinHall2 {} => {
                if p <= 0.5 {
                    (2.0 * p).sqrt()
                } else {
                    2.0 - (2.0 * (1.0 - p)).sqrt()
                }
            }
            DistributionKind::FoldedNormal { mu0, sigma0 } => {
                if p == 0.0 {
                    return 0.0;
                }
                if p == 1.0 {
                    return f64::INFINITY;
                }
                let hi = mu0.abs() + 40.0 * sigma0;
                let spec = RootSpec { bracket: (0.0, hi), tol: 1e-14 * hi.max(1.0), max_iter: 300 };
                find_root(|x| self.cdf(x) - p, &spec).unwrap_or(f64::NAN)
            }
        }
    }

    /// Draw one value.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DistributionKind::Uniform { omega } => rng.random::<f64>() * omega,
            DistributionKind::LogNormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma * z).exp()
            }
            DistributionKind::IrwinHall2 {} => rng.random::<f64>() + rng.random::<f64>(),
            DistributionKind::FoldedNormal { mu0, sigma0 } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu0 + sigma0 * z).abs()
            }
        }
    }

    /// `n` deterministic draws from a ChaCha8 stream seeded with `seed`.
    pub fn sample(&self, seed: u64, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::invalid("sample size must be >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n).map(|_| self.draw(&mut rng)).collect())
    }
}

fn irwin_hall2_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 1.0 {
        0.5 * x * x
    } else if x <= 2.0 {
        2.0 * x - 1.0 - 0.5 * x * x
    } else {
        1.0
    }
}

fn irwin_hall2_pdf(x: f64) -> f64 {
    if !(0.0..=2.0).contains(&x) {
        0.0
    } else if x < 1.0 {
        x
    } else {
        2.0 - x
    }
}

/// Distribution of the highest of `rivals` independent draws: G = F^rivals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderStatisticDistribution {
    base: ValuationDistribution,
    rivals: usize,
}

/// Highest-order-statistic transform for an auction with `bidders` bidders.
pub fn order_stat(dist: ValuationDistribution, bidders: usize) -> Result<OrderStatisticDistribution> {
    if bidders < 2 {
        return Err(Error::invalid(format!("an auction needs at least two bidders, got {bidders}")));
    }
    Ok(OrderStatisticDistribution { base: dist, rivals: bidders - 1 })
}

impl OrderStatisticDistribution {
    pub fn base(&self) -> &ValuationDistribution {
        &self.base
    }

    pub fn rivals(&self) -> usize {
        self.rivals
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.base.cdf(y).powi(self.rivals as i32)
    }

    pub fn ln_cdf(&self, y: f64) -> f64 {
        self.rivals as f64 * self.base.ln_cdf(y)
    }

    /// g = (M-1) F^(M-2) f.
    pub fn pdf(&self, y: f64) -> f64 {
        let k = self.rivals;
        let f = self.base.pdf(y);
        if k == 1 {
            return f;
        }
        k as f64 * self.base.cdf(y).powi(k as i32 - 1) * f
    }
}
