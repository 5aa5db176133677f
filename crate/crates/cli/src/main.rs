use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use auctionkit::asymmetric::{solve_two_group, TwoGroupSpec};
use auctionkit::bidder_count::{bid_uncertain, discrete_symmetric_pmf, discrete_symmetric_pmf_exact, delta_floor};
use auctionkit::distributions::{DistributionKind, ValuationDistribution};
use auctionkit::equilibrium::{
    bid_general_with, bid_lognormal_approx, bid_reserve_lognormal, bid_reserve_lognormal_literal, bid_reserve_uniform,
    bid_reserve_uniform_literal, bid_uniform, expected_revenue_with_reserve, optimal_reserve, AuctionSpec, BidResult,
};
use auctionkit::harness::{equilibrium_strategy, run_invariant_checks, simulate, truthful_strategy};
use auctionkit::interdependent::{
    bid_combined_uncertain, bid_interdependent, bid_irwinhall_closed, x_star, CombinedEquilibrium, InterdepSpec,
    KernelForm,
};
use auctionkit::numerics::QuadratureSpec;
use auctionkit::surrogate::{
    evaluate, fit_linear, fit_power_bucketed, fit_power_with, sample_design, BidderRegressor, DesignTable,
    DEFAULT_ACCU_PARAM,
};

const SEED_ENV: &str = "AUCTIONKIT_SEED";

/// Equilibrium bids, reserve prices and auction simulations.
#[derive(Parser, Debug)]
#[command(name = "auctionkit", version, about)]
struct Cli {
    /// JSON object whose keys supply flags for the chosen subcommand;
    /// flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Symmetric private-value bid for one valuation.
    #[command(args_override_self = true)]
    Bid(BidArgs),
    /// Discrete symmetric bidder-count distribution.
    #[command(args_override_self = true)]
    Pmf(PmfArgs),
    /// Two-group asymmetric equilibrium.
    #[command(args_override_self = true)]
    Asym(AsymArgs),
    /// Interdependent-value bid, with optional reserve.
    #[command(args_override_self = true)]
    Interdep(InterdepArgs),
    /// Power and linear surrogates for log-normal bids.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Monte Carlo auction simulation.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Seller-optimal reserve price.
    #[command(args_override_self = true)]
    Reserve(ReserveArgs),
    /// Run the invariant suite.
    #[command(args_override_self = true)]
    Check(CheckArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum DistName {
    Uniform,
    Lognormal,
    IrwinHall2,
    FoldedNormal,
}

#[derive(Args, Debug, Clone)]
struct DistArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    dist: DistName,
    /// Upper end of the uniform support.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Location of ln(value) for log-normal, of the underlying normal for folded normal.
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

impl DistArgs {
    fn build(&self) -> Result<ValuationDistribution> {
        Ok(match self.dist {
            DistName::Uniform => ValuationDistribution::uniform(self.omega)?,
            DistName::Lognormal => ValuationDistribution::lognormal(self.mu, self.sigma)?,
            DistName::IrwinHall2 => ValuationDistribution::irwin_hall2(),
            DistName::FoldedNormal => ValuationDistribution::folded_normal(self.mu, self.sigma)?,
        })
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Auto,
    Closed,
    Quad,
    Approx,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PmfKind {
    Symmetric,
}

#[derive(Args, Debug)]
struct BidArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, short = 'M')]
    bidders: usize,
    #[arg(long, short = 'x')]
    valuation: f64,
    #[arg(long, default_value_t = 0.0)]
    reserve: f64,
    #[arg(long, value_enum, default_value = "auto")]
    method: Method,
    /// Use the uncorrected literal closed forms instead of the corrected ones.
    #[arg(long)]
    paper_literal: bool,
    /// Treat --bidders as the maximum of an uncertain bidder count.
    #[arg(long, value_enum)]
    pmf: Option<PmfKind>,
    /// Also write `x,bid` over a grid to this CSV file.
    #[arg(long, value_name = "CSV")]
    emit_curve: Option<PathBuf>,
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Absolute quadrature tolerance.
    #[arg(long, default_value_t = QuadratureSpec::default().abs_tol)]
    abs_tol: f64,
    /// Relative quadrature tolerance.
    #[arg(long, default_value_t = QuadratureSpec::default().rel_tol)]
    rel_tol: f64,
}

#[derive(Args, Debug)]
struct PmfArgs {
    /// Maximum number of bidders.
    #[arg(long, short = 'M')]
    max_bidders: usize,
    /// Write `rivals,probability` to this CSV file.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AsymArgs {
    /// Group 1 distribution, e.g. `uniform:1`, `lognormal:0,0.5`, `irwin_hall2`.
    #[arg(long)]
    group1: String,
    #[arg(long)]
    group2: String,
    /// Rival count in group 1 as seen by a group-1 bidder; group 1 has K+1 members.
    #[arg(long, short = 'K')]
    k: usize,
    #[arg(long, short = 'M')]
    bidders: usize,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    /// Report both groups' bids at this valuation.
    #[arg(long, short = 'x')]
    valuation: Option<f64>,
    /// Write the inverse-bid table `b,phi1,phi2` to this CSV file.
    #[arg(long, value_name = "CSV")]
    emit_curve: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KernelArg {
    Exact,
    Printed,
}

#[derive(Args, Debug)]
struct InterdepArgs {
    #[arg(long, short = 'M')]
    bidders: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    xi: f64,
    #[arg(long, default_value_t = 0.0)]
    reserve: f64,
    #[arg(long, value_enum, default_value = "exact")]
    kernel: KernelArg,
    /// Same as `--kernel printed`.
    #[arg(long)]
    paper_literal: bool,
    #[arg(long, short = 'x')]
    signal: f64,
    #[arg(long, value_enum, default_value = "auto")]
    method: Method,
    #[arg(long, value_enum)]
    pmf: Option<PmfKind>,
    #[arg(long, value_name = "CSV")]
    emit_curve: Option<PathBuf>,
    #[arg(long, default_value_t = 101)]
    points: usize,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Read the design table from CSV instead of sampling one.
    #[arg(long, value_name = "CSV")]
    input: Option<PathBuf>,
    #[arg(long, short = 'n', default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_ACCU_PARAM)]
    accu_param: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Seed for a freshly sampled holdout table of the same size.
    #[arg(long)]
    holdout_seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    order: u32,
    #[arg(long, default_value_t = 1)]
    buckets: usize,
    #[arg(long)]
    use_m_minus_1: bool,
    #[arg(long, value_name = "CSV")]
    table_out: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    model_out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum StrategyArg {
    Equilibrium,
    Truthful,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, short = 'M')]
    bidders: usize,
    #[arg(long, default_value_t = 0.0)]
    reserve: f64,
    #[arg(long, default_value_t = 0.0)]
    seller_value: f64,
    #[arg(long, default_value_t = 100_000)]
    rounds: usize,
    #[arg(long, value_enum, default_value = "equilibrium")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ReserveArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, default_value_t = 0.0)]
    seller_value: f64,
    /// Also report expected revenue at the optimum for this many bidders.
    #[arg(long, short = 'M')]
    bidders: Option<usize>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Error raised for bad input that the library does not see.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Usage(msg.into()))
}

fn env_seed(flag: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| usage(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(flag),
    }
}

fn print(v: &Value) {
    println!("{v}");
}

fn bid_json(r: &BidResult) -> Value {
    json!({ "bid": r.bid, "method": r.method, "est_error": r.est_error })
}

fn write_curve(path: &PathBuf, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        bail!(usage("--points must be at least 2"));
    }
    Ok((0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect())
}

fn single_bid(a: &BidArgs, dist: ValuationDistribution, x: f64) -> Result<BidResult> {
    let m = a.bidders;
    let r = a.reserve;
    if a.pmf == Some(PmfKind::Symmetric) {
        if r > 0.0 {
            bail!(usage("--pmf cannot be combined with a reserve"));
        }
        return Ok(bid_uncertain(&discrete_symmetric_pmf(m)?, &dist, x)?);
    }
    let kind = dist.kind();
    let closed = || -> Result<Option<BidResult>> {
        Ok(match kind {
            DistributionKind::Uniform { omega } if r > 0.0 && a.paper_literal => {
                Some(bid_reserve_uniform_literal(m, r, x, omega)?)
            }
            DistributionKind::Uniform { omega } if r > 0.0 => Some(bid_reserve_uniform(m, r, x, omega)?),
            DistributionKind::Uniform { omega } => Some(bid_uniform(m, x, omega)?),
            DistributionKind::LogNormal { mu, sigma } if r > 0.0 && a.paper_literal => {
                Some(bid_reserve_lognormal_literal(mu, sigma, m, r, x)?)
            }
            DistributionKind::LogNormal { mu, sigma } if r > 0.0 => Some(bid_reserve_lognormal(mu, sigma, m, r, x)?),
            _ => None,
        })
    };
    let spec = AuctionSpec::new(dist, m)?.with_reserve(r)?;
    let quad = QuadratureSpec::with_tolerances(a.abs_tol, a.rel_tol)?;
    match a.method {
        Method::Quad => Ok(bid_general_with(&spec, x, &quad)?),
        Method::Closed => closed()?.ok_or_else(|| usage("no closed form for this distribution and reserve")),
        Method::Auto => match closed()? {
            Some(b) => Ok(b),
            None => Ok(bid_general_with(&spec, x, &quad)?),
        },
        Method::Approx => match kind {
            DistributionKind::LogNormal { mu, sigma } if r > 0.0 => Ok(bid_reserve_lognormal(mu, sigma, m, r, x)?),
            DistributionKind::LogNormal { mu, sigma } => Ok(bid_lognormal_approx(mu, sigma, m, x)?),
            _ => Err(usage("--method approx is only available for log-normal valuations")),
        },
    }
}

fn cmd_bid(a: BidArgs) -> Result<()> {
    let dist = a.dist.build()?;
    let res = single_bid(&a, dist, a.valuation)?;
    if let Some(path) = &a.emit_curve {
        let lo = a.reserve.max(dist.support().0);
        let xs = grid(lo, dist.upper_limit(), a.points)?;
        let rows = xs.iter().map(|&x| single_bid(&a, dist, x).map(|b| vec![x, b.bid])).collect::<Result<Vec<_>>>()?;
        write_curve(path, &["x", "bid"], rows.into_iter())?;
    }
    let mut out = bid_json(&res);
    out["valuation"] = json!(a.valuation);
    out["bidders"] = json!(a.bidders);
    out["reserve"] = json!(a.reserve);
    print(&out);
    Ok(())
}

fn cmd_pmf(a: PmfArgs) -> Result<()> {
    let exact = discrete_symmetric_pmf_exact(a.max_bidders)?;
    let pmf = discrete_symmetric_pmf(a.max_bidders)?;
    if let Some(path) = &a.out {
        let rows = pmf.probabilities().iter().enumerate().map(|(l, p)| vec![l as f64, *p]);
        write_curve(path, &["rivals", "probability"], rows)?;
    }
    print(&json!({
        "max_bidders": a.max_bidders,
        "delta": delta_floor(a.max_bidders),
        "probabilities": pmf.probabilities(),
        "exact": exact.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
        "total": pmf.total(),
    }));
    Ok(())
}

fn parse_dist(s: &str) -> Result<ValuationDistribution> {
    let (name, params) = s.split_once(':').unwrap_or((s, ""));
    let nums = params
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().map_err(|_| usage(format!("bad number {p:?} in {s:?}"))))
        .collect::<Result<Vec<f64>>>()?;
    let need = |n: usize| -> Result<()> {
        if nums.len() != n {
            bail!(usage(format!("{name} takes {n} parameter(s), got {s:?}")));
        }
        Ok(())
    };
    Ok(match name.trim() {
        "uniform" => {
            need(1)?;
            ValuationDistribution::uniform(nums[0])?
        }
        "lognormal" | "log_normal" => {
            need(2)?;
            ValuationDistribution::lognormal(nums[0], nums[1])?
        }
        "irwin_hall2" => {
            need(0)?;
            ValuationDistribution::irwin_hall2()
        }
        "folded_normal" => {
            need(2)?;
            ValuationDistribution::folded_normal(nums[0], nums[1])?
        }
        other => bail!(usage(format!("unknown distribution {other:?}"))),
    })
}

fn cmd_asym(a: AsymArgs) -> Result<()> {
    let spec = TwoGroupSpec::new(parse_dist(&a.group1)?, parse_dist(&a.group2)?, a.k, a.bidders)?;
    let table = solve_two_group(&spec, a.steps)?;
    if let Some(path) = &a.emit_curve {
        let rows = (0..table.b.len()).map(|i| {
            let p2 = table.phi2.get(i).copied().unwrap_or(f64::NAN);
            vec![table.b[i], table.phi1[i], p2]
        });
        write_curve(path, &["b", "phi1", "phi2"], rows)?;
    }
    let (n1, n2) = spec.group_sizes();
    let mut out = json!({ "b_bar": table.b_bar, "group_sizes": [n1, n2], "steps": a.steps });
    if let Some(x) = a.valuation {
        out["valuation"] = json!(x);
        out["bid_group1"] = json!(table.bid(1, x)?);
        if n2 > 0 {
            out["bid_group2"] = json!(table.bid(2, x)?);
        }
    }
    print(&out);
    Ok(())
}

fn cmd_interdep(a: InterdepArgs) -> Result<()> {
    let kernel = if a.paper_literal || a.kernel == KernelArg::Printed { KernelForm::Printed } else { KernelForm::Exact };
    let spec = InterdepSpec::new(a.bidders, a.alpha, a.xi)?.with_reserve(a.reserve)?.with_kernel(kernel);
    let bid_at = |x: f64| -> Result<BidResult> {
        if a.pmf == Some(PmfKind::Symmetric) {
            return Ok(bid_combined_uncertain(&discrete_symmetric_pmf(a.bidders)?, &spec, x)?);
        }
        Ok(match a.method {
            Method::Closed => bid_irwinhall_closed(&spec, x)?,
            Method::Quad => bid_interdependent(&spec, x)?,
            Method::Auto if a.reserve == 0.0 => bid_irwinhall_closed(&spec, x)?,
            Method::Auto => bid_interdependent(&spec, x)?,
            Method::Approx => bail!(usage("--method approx is not available for interdependent values")),
        })
    };
    let res = bid_at(a.signal)?;
    let mut out = bid_json(&res);
    out["signal"] = json!(a.signal);
    if a.reserve > 0.0 {
        out["x_star"] = json!(x_star(&spec)?);
    }
    if let Some(path) = &a.emit_curve {
        let lo = if a.reserve > 0.0 && a.pmf.is_none() { CombinedEquilibrium::new(&spec)?.x_star() } else { 0.0 };
        let rows = grid(lo, 2.0, a.points)?
            .into_iter()
            .map(|x| bid_at(x).map(|b| vec![x, b.bid]))
            .collect::<Result<Vec<_>>>()?;
        write_curve(path, &["x", "bid"], rows.into_iter())?;
    }
    print(&out);
    Ok(())
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let seed = env_seed(a.seed)?;
    let table = match &a.input {
        Some(path) => {
            let f = File::open(path).map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
            DesignTable::read_csv(f)?
        }
        None => sample_design(a.samples, a.accu_param, seed)?,
    };
    if let Some(path) = &a.table_out {
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        table.write_csv(BufWriter::new(f))?;
    }
    let bidder = if a.use_m_minus_1 { BidderRegressor::MMinusOne } else { BidderRegressor::M };
    let mut power = fit_power_with(&table, bidder)?;
    let linear = fit_linear(&table, a.order)?;
    let mut out = json!({
        "rows": table.len(),
        "failed_rows": table.failed_rows,
        "rejected_draws": table.rejected_draws,
        "seed": seed,
        "linear": linear,
    });
    if a.buckets > 1 {
        out["bucketed"] = serde_json::to_value(fit_power_bucketed(&table, a.buckets, bidder)?)?;
    }
    if let Some(hs) = a.holdout_seed {
        let holdout = sample_design(table.len().max(10), table.accu_param.unwrap_or(a.accu_param), hs)?;
        out["power_holdout"] = serde_json::to_value(power.attach_holdout(&holdout)?)?;
        out["linear_holdout"] = serde_json::to_value(evaluate(&linear, &holdout)?)?;
    }
    if let Some(path) = &a.model_out {
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(f), &power)?;
    }
    out["power"] = serde_json::to_value(&power)?;
    print(&out);
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let seed = env_seed(a.seed)?;
    let spec = AuctionSpec::new(a.dist.build()?, a.bidders)?.with_reserve(a.reserve)?.with_seller_value(a.seller_value)?;
    let report = match a.strategy {
        StrategyArg::Equilibrium => simulate(&spec, equilibrium_strategy(&spec), a.rounds, seed)?,
        StrategyArg::Truthful => simulate(&spec, truthful_strategy, a.rounds, seed)?,
    };
    print(&serde_json::to_value(report)?);
    Ok(())
}

fn cmd_reserve(a: ReserveArgs) -> Result<()> {
    let dist = a.dist.build()?;
    let r = optimal_reserve(&dist, a.seller_value)?;
    let mut out = json!({ "r_star": r });
    if let Some(m) = a.bidders {
        let spec = AuctionSpec::new(dist, m)?.with_reserve(r)?.with_seller_value(a.seller_value)?;
        out["expected_revenue"] = json!(expected_revenue_with_reserve(&spec)?);
    }
    print(&out);
    Ok(())
}

fn cmd_check(a: CheckArgs) -> Result<bool> {
    let seed = env_seed(a.seed)?;
    let results = run_invariant_checks(seed);
    for c in &results {
        println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(results.iter().all(|c| c.passed))
}

/// Flags from a JSON config, inserted right after the subcommand so that
/// explicit command-line flags win.
fn config_args(path: &PathBuf) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| usage(format!("bad config {}: {e}", path.display())))?;
    let Value::Object(map) = value else {
        bail!(usage("config must be a JSON object"));
    };
    let mut args = Vec::new();
    for (k, v) in map {
        let flag = format!("--{}", k.replace('_', "-"));
        match v {
            Value::Bool(true) => args.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => args.extend([flag, s]),
            Value::Number(n) => args.extend([flag, n.to_string()]),
            other => bail!(usage(format!("config key {k:?} has unsupported value {other}"))),
        }
    }
    Ok(args)
}

const SUBCOMMANDS: [&str; 8] = ["bid", "pmf", "asym", "interdep", "fit", "simulate", "reserve", "check"];

/// Splices flags from `--config FILE` in right after the subcommand, before
/// clap sees the arguments, so required flags may come from the file.
fn expand_config(argv: Vec<String>) -> Result<Vec<String>, clap::Error> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            path = it.next();
            if path.is_none() {
                return Err(clap::Error::raw(clap::error::ErrorKind::InvalidValue, "--config needs a file\n"));
            }
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let extra = config_args(&PathBuf::from(&path))
        .map_err(|e| clap::Error::raw(clap::error::ErrorKind::InvalidValue, format!("{e}\n")))?;
    let at = rest.iter().skip(1).position(|a| SUBCOMMANDS.contains(&a.as_str())).map_or(rest.len(), |i| i + 2);
    let mut merged = rest[..at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&rest[at..]);
    Ok(merged)
}

fn parse_cli(argv: Vec<String>) -> Result<Cli, clap::Error> {
    Cli::try_parse_from(expand_config(argv)?)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Bid(a) => cmd_bid(a)?,
        Command::Pmf(a) => cmd_pmf(a)?,
        Command::Asym(a) => cmd_asym(a)?,
        Command::Interdep(a) => cmd_interdep(a)?,
        Command::Fit(a) => cmd_fit(a)?,
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::Reserve(a) => cmd_reserve(a)?,
        Command::Check(a) => return cmd_check(a),
    }
    Ok(true)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<auctionkit::Error>() {
        Some(e) if e.is_validation() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match parse_cli(std::env::args().collect()) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
