use std::process::{Command, Output};

use serde_json::Value;

fn auctionkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auctionkit"))
        .args(args)
        .env_remove("AUCTIONKIT_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn uniform_bid() {
    let v = json(&auctionkit(&["bid", "--dist", "uniform", "--omega", "1", "--bidders", "4", "--valuation", "0.8"]));
    assert!((v["bid"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert_eq!(v["method"], "closed_form");
}

#[test]
fn quadrature_method_matches_closed_form() {
    let v = json(&auctionkit(&["bid", "--bidders", "4", "--valuation", "0.8", "--method", "quad"]));
    assert!((v["bid"].as_f64().unwrap() - 0.6).abs() < 1e-8);
    assert_eq!(v["method"], "quadrature");
}

#[test]
fn literal_reserve_misses_the_boundary() {
    let fixed = json(&auctionkit(&["bid", "--bidders", "3", "--valuation", "0.5", "--reserve", "0.5"]));
    let literal = json(&auctionkit(&["bid", "--bidders", "3", "--valuation", "0.5", "--reserve", "0.5", "--paper-literal"]));
    assert!((fixed["bid"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(literal["bid"].as_f64().unwrap() > 0.6);
}

#[test]
fn optimal_reserve() {
    let out = auctionkit(&["reserve", "--dist", "uniform", "--omega", "1", "--seller-value", "0"]);
    let v = json(&out);
    assert!((v["r_star"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(v.as_object().unwrap().len(), 1);
}

#[test]
fn check_exits_zero() {
    let out = auctionkit(&["check"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 9 && !text.contains("FAIL"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = auctionkit(&["bid", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn validation_and_numerical_failures_have_distinct_codes() {
    let bad = auctionkit(&["bid", "--bidders", "1", "--valuation", "0.5"]);
    assert_eq!(bad.status.code(), Some(2));
    let out_of_range = auctionkit(&["interdep", "--bidders", "2", "--signal", "1", "--reserve", "5"]);
    assert_eq!(out_of_range.status.code(), Some(2));
    let unbounded = auctionkit(&["asym", "--group1", "lognormal:0,1", "--group2", "uniform:1", "-K", "0", "-M", "2"]);
    assert_eq!(unbounded.status.code(), Some(2));
}

#[test]
fn interdependent_spot_values() {
    let v = json(&auctionkit(&["interdep", "--bidders", "2", "--signal", "2", "--kernel", "printed"]));
    assert!((v["bid"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-9);
    let v = json(&auctionkit(&["interdep", "--bidders", "2", "--signal", "1.5", "--reserve", "0.8333333333333334"]));
    assert!((v["x_star"].as_f64().unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn pmf_lists_exact_probabilities() {
    let v = json(&auctionkit(&["pmf", "--max-bidders", "7"]));
    assert_eq!(v["exact"][1], "1/12");
    assert!((v["delta"].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-15);
}

#[test]
fn curves_are_written_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let bid_csv = dir.path().join("bid.csv");
    let asym_csv = dir.path().join("asym.csv");
    json(&auctionkit(&["bid", "--bidders", "3", "--valuation", "0.5", "--emit-curve", bid_csv.to_str().unwrap(), "--points", "11"]));
    let text = std::fs::read_to_string(&bid_csv).unwrap();
    assert!(text.starts_with("x,bid"));
    assert_eq!(text.lines().count(), 12);

    let v = json(&auctionkit(&[
        "asym", "--group1", "uniform:1", "--group2", "uniform:2", "-K", "0", "-M", "2", "--steps", "400",
        "--emit-curve", asym_csv.to_str().unwrap(),
    ]));
    assert!((v["b_bar"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-6);
    assert!(std::fs::read_to_string(&asym_csv).unwrap().starts_with("b,phi1,phi2"));
}

#[test]
fn fit_round_trips_table_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("design.csv");
    let model = dir.path().join("model.json");
    let v = json(&auctionkit(&[
        "fit", "-n", "400", "--seed", "3", "--table-out", table.to_str().unwrap(), "--model-out",
        model.to_str().unwrap(),
    ]));
    assert!(v["power"]["fit_corr_in"].as_f64().unwrap() > 0.9);
    assert!(std::fs::read_to_string(&table).unwrap().starts_with("bid,x,mu,sigma,M"));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(saved["C"], v["power"]["C"]);

    let again = json(&auctionkit(&["fit", "--input", table.to_str().unwrap()]));
    assert_eq!(again["power"]["a1"], v["power"]["a1"]);
}

#[test]
fn config_file_supplies_flags_and_cli_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"bidders": 4, "valuation": 0.8, "dist": "uniform"}"#).unwrap();
    let v = json(&auctionkit(&["bid", "--config", cfg.to_str().unwrap()]));
    assert!((v["bid"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    let v = json(&auctionkit(&["bid", "--config", cfg.to_str().unwrap(), "--valuation", "0.4"]));
    assert!((v["bid"].as_f64().unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn seed_env_var_overrides_flag() {
    let run = |env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_auctionkit"));
        cmd.args(["simulate", "--bidders", "2", "--rounds", "1000", "--seed", "5"]);
        match env {
            Some(s) => cmd.env("AUCTIONKIT_SEED", s),
            None => cmd.env_remove("AUCTIONKIT_SEED"),
        };
        json(&cmd.output().unwrap())
    };
    assert_eq!(run(None)["seed"], 5);
    assert_eq!(run(Some("11"))["seed"], 11);
    assert_eq!(run(Some("11")), run(Some("11")));
}
