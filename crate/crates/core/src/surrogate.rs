//! Regression surrogates for numerically integrated log-normal bids.
//!
//! A design table of `(x, μ, σ, M)` draws is priced with [`bid_general`], then
//! approximated either by the power law `C x^a1 μ^a2 σ^a3 M^a4` (fitted as OLS
//! in logs) or by a polynomial in levels, which serves as a benchmark.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::ValuationDistribution;
use crate::equilibrium::{bid_general, AuctionSpec};
use crate::numerics::correlation;
use crate::{Error, Result};

/// One priced design point. Column names follow the CSV layout `bid,x,mu,sigma,M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub bid: f64,
    pub x: f64,
    pub mu: f64,
    pub sigma: f64,
    #[serde(rename = "M")]
    pub bidders: usize,
}

/// Centres of the folded-normal draws. The common scale is the `accu_param`
/// passed to [`sample_design_with`]; the bidder count has its own scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignConfig {
    pub x_center: f64,
    pub mu_center: f64,
    pub sigma_center: f64,
    pub bidder_center: f64,
    pub bidder_scale: f64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self { x_center: 0.5, mu_center: 0.5, sigma_center: 0.75, bidder_center: 5.0, bidder_scale: 5.0 }
    }
}

/// Default folded-normal scale for [`sample_design`].
pub const DEFAULT_ACCU_PARAM: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignTable {
    pub rows: Vec<DesignRow>,
    /// Requested number of rows, including any that failed to price.
    pub sample_size: usize,
    /// `None` for tables loaded from CSV.
    pub accu_param: Option<f64>,
    /// Rows dropped because the bid quadrature failed.
    pub failed_rows: usize,
    /// Zero draws of x, μ or σ that were redrawn.
    pub rejected_draws: usize,
}

impl DesignTable {
    pub fn from_rows(rows: Vec<DesignRow>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            let ok = [r.bid, r.x, r.mu, r.sigma].iter().all(|v| v.is_finite() && *v > 0.0) && r.bidders >= 2;
            if !ok {
                return Err(Error::invalid(format!("design row {i} needs positive bid, x, mu, sigma and M >= 2")));
            }
        }
        Ok(Self { sample_size: rows.len(), rows, accu_param: None, failed_rows: 0, rejected_draws: 0 })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn bids(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.bid).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<DesignRow>, _>>()?;
        Self::from_rows(rows)
    }
}

fn folded_draw(rng: &mut ChaCha8Rng, normal: &Normal<f64>, rejected: &mut usize) -> f64 {
    loop {
        let v = normal.sample(rng).abs();
        if v > 0.0 {
            return v;
        }
        *rejected += 1;
    }
}

/// Samples and prices `n` design points with the default [`DesignConfig`].
pub fn sample_design(n: usize, accu_param: f64, seed: u64) -> Result<DesignTable> {
    sample_design_with(n, accu_param, seed, &DesignConfig::default())
}

/// Row `i` uses its own ChaCha stream, so the table does not depend on the
/// number of worker threads.
pub fn sample_design_with(n: usize, accu_param: f64, seed: u64, config: &DesignConfig) -> Result<DesignTable> {
    if n < 10 {
        return Err(Error::invalid(format!("a design needs at least 10 rows, got {n}")));
    }
    if !(accu_param > 0.0 && accu_param.is_finite()) {
        return Err(Error::invalid(format!("accu_param must be positive, got {accu_param}")));
    }
    let centers = [config.x_center, config.mu_center, config.sigma_center, config.bidder_center];
    if centers.iter().any(|c| !c.is_finite()) || !(config.bidder_scale > 0.0 && config.bidder_scale.is_finite()) {
        return Err(Error::invalid("design centres must be finite and the bidder scale positive"));
    }
    let normal = |c: f64, s: f64| Normal::new(c, s).map_err(|e| Error::invalid(e.to_string()));
    let nx = normal(config.x_center, accu_param)?;
    let nmu = normal(config.mu_center, accu_param)?;
    let nsigma = normal(config.sigma_center, accu_param)?;
    let nm = normal(config.bidder_center, config.bidder_scale)?;

    let priced: Vec<(Option<DesignRow>, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut rejected = 0;
            let x = folded_draw(&mut rng, &nx, &mut rejected);
            let mu = folded_draw(&mut rng, &nmu, &mut rejected);
            let sigma = folded_draw(&mut rng, &nsigma, &mut rejected);
            let bidders = (nm.sample(&mut rng).abs().ceil() as usize).max(2);
            let bid = ValuationDistribution::lognormal(mu, sigma)
                .and_then(|d| AuctionSpec::new(d, bidders))
                .and_then(|spec| bid_general(&spec, x))
                .ok()
                .map(|b| b.bid)
                .filter(|b| b.is_finite() && *b > 0.0 && *b <= x);
            (bid.map(|bid| DesignRow { bid, x, mu, sigma, bidders }), rejected)
        })
        .collect();

    let rejected_draws = priced.iter().map(|p| p.1).sum();
    let rows: Vec<DesignRow> = priced.into_iter().filter_map(|p| p.0).collect();
    Ok(DesignTable { failed_rows: n - rows.len(), rows, sample_size: n, accu_param: Some(accu_param), rejected_draws })
}

/// How the bidder count enters a regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BidderRegressor {
    #[default]
    M,
    MMinusOne,
}

impl BidderRegressor {
    fn value(self, bidders: usize) -> f64 {
        match self {
            BidderRegressor::M => bidders as f64,
            BidderRegressor::MMinusOne => (bidders - 1) as f64,
        }
    }

    fn label(self) -> &'static str {
        match self {
            BidderRegressor::M => "M",
            BidderRegressor::MMinusOne => "M-1",
        }
    }
}

/// Least squares via SVD. Columns are scaled to unit norm first so the rank
/// threshold is scale free; null-space directions name the collinear columns.
fn ols(names: &[String], columns: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    let p = columns.len();
    if n < p.max(5) {
        return Err(Error::invalid(format!("need at least {} rows to fit {p} coefficients, got {n}", p.max(5))));
    }
    let norms: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let x = DMatrix::from_fn(n, p, |i, j| if norms[j] > 0.0 { columns[j][i] / norms[j] } else { 0.0 });
    let svd = x.svd(true, true);
    let smax = svd.singular_values.max();
    let threshold = smax * 1e-10 * (n.max(p) as f64);
    let v_t = svd.v_t.as_ref().expect("requested V^T");

    let mut collinear = vec![false; p];
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= threshold {
            for j in 0..p {
                if v_t[(k, j)].abs() > 1e-6 {
                    collinear[j] = true;
                }
            }
        }
    }
    if collinear.iter().any(|c| *c) {
        let columns = names.iter().zip(&collinear).filter(|(_, c)| **c).map(|(n, _)| n.clone()).collect();
        return Err(Error::RankDeficient { columns });
    }

    let beta = svd
        .solve(&DVector::from_column_slice(y), threshold)
        .map_err(|e| Error::invalid(format!("least squares failed: {e}")))?;
    Ok(beta.iter().zip(&norms).map(|(b, s)| b / s).collect())
}

/// Fitted `β ≈ C x^a1 μ^a2 σ^a3 M^a4`. Predictions are positive by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    #[serde(rename = "C")]
    pub c: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub bidder_regressor: BidderRegressor,
    /// Level correlation on the training table (NaN if undefined).
    pub fit_corr_in: f64,
    /// Level correlation on a holdout, once [`SurrogateModel::attach_holdout`] has run.
    pub fit_corr_out: Option<f64>,
    /// Mean of the log-space residuals; zero up to rounding for an OLS fit.
    pub log_residual_mean: f64,
    pub observations: usize,
}

impl SurrogateModel {
    pub fn predict(&self, x: f64, mu: f64, sigma: f64, bidders: usize) -> f64 {
        self.c
            * x.powf(self.a1)
            * mu.powf(self.a2)
            * sigma.powf(self.a3)
            * self.bidder_regressor.value(bidders).powf(self.a4)
    }

    pub fn exponents(&self) -> [f64; 4] {
        [self.a1, self.a2, self.a3, self.a4]
    }

    /// Evaluates on `holdout` and stores the correlation in `fit_corr_out`.
    pub fn attach_holdout(&mut self, holdout: &DesignTable) -> Result<EvaluationReport> {
        let report = evaluate(&*self, holdout)?;
        self.fit_corr_out = Some(report.correlation);
        Ok(report)
    }
}

pub fn fit_power(table: &DesignTable) -> Result<SurrogateModel> {
    fit_power_with(table, BidderRegressor::M)
}

pub fn fit_power_with(table: &DesignTable, bidder: BidderRegressor) -> Result<SurrogateModel> {
    if bidder == BidderRegressor::MMinusOne && table.rows.iter().all(|r| r.bidders == 2) {
        return Err(Error::RankDeficient { columns: vec!["const".into(), "ln(M-1)".into()] });
    }
    let rows = &table.rows;
    let ln = |f: &dyn Fn(&DesignRow) -> f64| rows.iter().map(|r| f(r).ln()).collect::<Vec<f64>>();
    let columns = vec![
        vec![1.0; rows.len()],
        ln(&|r| r.x),
        ln(&|r| r.mu),
        ln(&|r| r.sigma),
        ln(&|r| bidder.value(r.bidders)),
    ];
    let names: Vec<String> =
        ["const", "ln x", "ln mu", "ln sigma"].iter().map(|s| s.to_string()).chain([format!("ln {}", bidder.label())]).collect();
    let y = ln(&|r| r.bid);
    let b = ols(&names, &columns, &y)?;

    let mut model = SurrogateModel {
        c: b[0].exp(),
        a1: b[1],
        a2: b[2],
        a3: b[3],
        a4: b[4],
        bidder_regressor: bidder,
        fit_corr_in: f64::NAN,
        fit_corr_out: None,
        log_residual_mean: 0.0,
        observations: rows.len(),
    };
    let resid: f64 = (0..rows.len()).map(|i| y[i] - (0..5).map(|j| b[j] * columns[j][i]).sum::<f64>()).sum();
    model.log_residual_mean = resid / rows.len() as f64;
    model.fit_corr_in = level_correlation(&model, table);
    Ok(model)
}

fn level_correlation<P: Predictor + ?Sized>(model: &P, table: &DesignTable) -> f64 {
    let pred: Vec<f64> = table.rows.iter().map(|r| model.predict_row(r)).collect();
    correlation(&pred, &table.bids()).unwrap_or(f64::NAN)
}

/// Separate power fits on x-quantile buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketedSurrogate {
    /// Interior bucket edges in x, ascending; `models.len() == edges.len() + 1`.
    pub edges: Vec<f64>,
    pub models: Vec<SurrogateModel>,
    pub fit_corr_in: f64,
}

impl BucketedSurrogate {
    fn bucket(&self, x: f64) -> usize {
        self.edges.partition_point(|e| *e <= x)
    }

    pub fn predict(&self, x: f64, mu: f64, sigma: f64, bidders: usize) -> f64 {
        self.models[self.bucket(x)].predict(x, mu, sigma, bidders)
    }
}

pub fn fit_power_bucketed(table: &DesignTable, buckets: usize, bidder: BidderRegressor) -> Result<BucketedSurrogate> {
    if buckets == 0 {
        return Err(Error::invalid("bucket count must be at least 1"));
    }
    let mut xs: Vec<f64> = table.rows.iter().map(|r| r.x).collect();
    xs.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (1..buckets).map(|k| xs[k * xs.len() / buckets]).collect();
    let mut parts: Vec<Vec<DesignRow>> = vec![Vec::new(); buckets];
    for row in &table.rows {
        parts[edges.partition_point(|e| *e <= row.x)].push(*row);
    }
    let models = parts
        .into_iter()
        .map(|rows| {
            let sub = DesignTable { sample_size: rows.len(), rows, accu_param: table.accu_param, failed_rows: 0, rejected_draws: 0 };
            fit_power_with(&sub, bidder)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = BucketedSurrogate { edges, models, fit_corr_in: f64::NAN };
    out.fit_corr_in = level_correlation(&out, table);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTerm {
    pub regressor: String,
    pub power: u32,
    pub coef: f64,
}

/// Polynomial benchmark in levels: `β0 + Σ_k (b_k x^k + c_k σ^k + d_k μ^k + e_k (M-1)^k)`.
/// Its predictions can be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub terms: Vec<LinearTerm>,
    pub order: u32,
    pub fit_corr_in: f64,
    /// Share of training rows with a negative prediction.
    pub negative_fraction: f64,
}

const LINEAR_REGRESSORS: [&str; 4] = ["x", "sigma", "mu", "M-1"];

fn linear_value(row: &DesignRow, regressor: usize) -> f64 {
    match regressor {
        0 => row.x,
        1 => row.sigma,
        2 => row.mu,
        _ => (row.bidders - 1) as f64,
    }
}

impl LinearModel {
    pub fn predict(&self, row: &DesignRow) -> f64 {
        self.intercept
            + self
                .terms
                .iter()
                .map(|t| {
                    let idx = LINEAR_REGRESSORS.iter().position(|r| *r == t.regressor).unwrap_or(0);
                    t.coef * linear_value(row, idx).powi(t.power as i32)
                })
                .sum::<f64>()
    }
}

pub fn fit_linear(table: &DesignTable, order: u32) -> Result<LinearModel> {
    if order == 0 {
        return Err(Error::invalid("linear order must be at least 1"));
    }
    let rows = &table.rows;
    let mut names = vec!["const".to_string()];
    let mut columns = vec![vec![1.0; rows.len()]];
    let mut keys = Vec::new();
    for k in 1..=order {
        for (j, name) in LINEAR_REGRESSORS.iter().enumerate() {
            names.push(if k == 1 { name.to_string() } else { format!("{name}^{k}") });
            columns.push(rows.iter().map(|r| linear_value(r, j).powi(k as i32)).collect());
            keys.push((j, k));
        }
    }
    let b = ols(&names, &columns, &table.bids())?;
    let terms = keys
        .iter()
        .zip(&b[1..])
        .map(|(&(j, k), &coef)| LinearTerm { regressor: LINEAR_REGRESSORS[j].to_string(), power: k, coef })
        .collect();
    let mut model = LinearModel { intercept: b[0], terms, order, fit_corr_in: f64::NAN, negative_fraction: 0.0 };
    let pred: Vec<f64> = rows.iter().map(|r| model.predict(r)).collect();
    model.negative_fraction = pred.iter().filter(|p| **p < 0.0).count() as f64 / rows.len() as f64;
    model.fit_corr_in = correlation(&pred, &table.bids()).unwrap_or(f64::NAN);
    Ok(model)
}

/// Anything that predicts a bid for a design row.
pub trait Predictor {
    fn predict_row(&self, row: &DesignRow) -> f64;

    /// Whether predictions can be negative, so the negative share is worth reporting.
    fn signed(&self) -> bool {
        false
    }
}

impl Predictor for SurrogateModel {
    fn predict_row(&self, r: &DesignRow) -> f64 {
        self.predict(r.x, r.mu, r.sigma, r.bidders)
    }
}

impl Predictor for BucketedSurrogate {
    fn predict_row(&self, r: &DesignRow) -> f64 {
        self.predict(r.x, r.mu, r.sigma, r.bidders)
    }
}

impl Predictor for LinearModel {
    fn predict_row(&self, r: &DesignRow) -> f64 {
        self.predict(r)
    }

    fn signed(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub observations: usize,
    /// Level correlation between predicted and actual bids (NaN if undefined).
    pub correlation: f64,
    pub mean_relative_error: f64,
    /// Only reported for models that can predict negative bids.
    pub negative_fraction: Option<f64>,
}

pub fn evaluate<P: Predictor + ?Sized>(model: &P, holdout: &DesignTable) -> Result<EvaluationReport> {
    if holdout.is_empty() {
        return Err(Error::invalid("holdout table is empty"));
    }
    let n = holdout.len() as f64;
    let pred: Vec<f64> = holdout.rows.iter().map(|r| model.predict_row(r)).collect();
    let bids = holdout.bids();
    let mre = pred.iter().zip(&bids).map(|(p, b)| ((p - b) / b).abs()).sum::<f64>() / n;
    let negative = pred.iter().filter(|p| **p < 0.0).count() as f64 / n;
    Ok(EvaluationReport {
        observations: holdout.len(),
        correlation: correlation(&pred, &bids).unwrap_or(f64::NAN),
        mean_relative_error: mre,
        negative_fraction: model.signed().then_some(negative),
    })
}

/// Random reference draw, handy for tests that want a table without pricing.
pub fn synthetic_table<F: Fn(f64, f64, f64, usize) -> f64>(n: usize, seed: u64, bid: F) -> Result<DesignTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let x = rng.random_range(0.05..2.0);
            let mu = rng.random_range(0.1..1.5);
            let sigma = rng.random_range(0.1..1.5);
            let bidders = rng.random_range(2..12);
            DesignRow { bid: bid(x, mu, sigma, bidders), x, mu, sigma, bidders }
        })
        .collect();
    DesignTable::from_rows(rows)
}
