//! Equilibrium bidding strategies for first-price sealed-bid auctions.
//!
//! The crate is organised bottom-up:
//!
//! - [`distributions`]: valuation distributions and the highest-order-statistic transform.
//! - [`numerics`]: adaptive quadrature, bracketed root finding and a fixed-step RK4 integrator.
//! - [`equilibrium`]: symmetric private-value bids with and without reserve prices.
//! - [`bidder_count`]: the discrete symmetric bidder-count distribution and mixture bids.
//! - [`asymmetric`]: the two-group asymmetric equilibrium solved by backward shooting.
//! - [`interdependent`]: affiliated Irwin-Hall signals, screening levels and the combined setting.
//! - [`surrogate`]: power-law and linear regression surrogates for log-normal bids.
//! - [`harness`]: Monte Carlo simulation and best-response scans.

pub mod asymmetric;
pub mod bidder_count;
pub mod distributions;
pub mod equilibrium;
pub mod error;
pub mod harness;
pub mod interdependent;
pub mod numerics;
pub mod surrogate;

pub use error::{Error, Result};
