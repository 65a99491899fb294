//! End-to-end runs of the `hvbench` binary.

use std::process::{Command, Output};

use serde_json::Value;

fn hvbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvbench")).args(args).output().expect("binary runs")
}

fn record(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(text.lines().count(), 1, "one record per run");
    serde_json::from_str(&text).unwrap()
}

#[test]
fn exit_code_zero_on_success() {
    let r = record(&hvbench(&["correlate", "--model", "qm", "--theta", "1.5707963267948966"]));
    assert_eq!(r["schema"], 1);
    assert_eq!(r["experiment"], "correlate");
    assert_eq!(r["result"]["kind"], "correlation");
    assert_eq!(r["result"]["estimate"]["stderr"], 0.0);
    assert!(r["result"]["estimate"]["mean"].as_f64().unwrap().abs() < 1e-15);
}

#[test]
fn exit_code_one_on_usage_error() {
    let out = hvbench(&["correlate", "--model", "foo", "--theta", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("foo"));
    assert_eq!(hvbench(&["chain", "--size", "7"]).status.code(), Some(1));
    assert_eq!(hvbench(&["chain", "--n", "lots"]).status.code(), Some(1));
    assert_eq!(hvbench(&[]).status.code(), Some(1));
}

#[test]
fn exit_code_two_on_degenerate_parity() {
    let out = hvbench(&["chain", "--size", "8", "--parity", "0,1,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

#[test]
fn help_documents_defaults() {
    let out = hvbench(&["chain", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[default: max]"));
    assert!(text.contains("[default: 1000000]"));
}

#[test]
fn ghz_record_is_byte_identical() {
    let a = hvbench(&["ghz", "--omit-timing"]);
    let b = hvbench(&["ghz", "--omit-timing"]);
    assert_eq!(a.stdout, b.stdout);
    let r = record(&a);
    assert_eq!(r["result"]["satisfying_count"], 0);
    assert!(r.get("wall_time_s").is_none());
}

#[test]
fn chain_records() {
    let r = record(&hvbench(&["chain", "--size", "4", "--n", "1000000", "--seed", "2"]));
    let res = &r["result"];
    assert_eq!(res["violated"], true);
    assert!((res["lhs"]["mean"].as_f64().unwrap() - 3.414).abs() < 0.01);
    let r = record(&hvbench(&["chain", "--size", "8", "--phi", "0", "--n", "20000"]));
    assert_eq!(r["result"]["lhs"]["mean"], 7.0);
    assert_eq!(r["result"]["violated"], false);
    let r = record(&hvbench(&["chain", "--size", "8", "--parity", "random", "--seed", "5"]));
    assert_eq!(r["result"]["kind"], "parity");
    assert_eq!(r["result"]["false_count"].as_u64().unwrap() % 2, 1);
}

#[test]
fn shard_count_does_not_change_output() {
    let run = |shards: &str| {
        let r = record(&hvbench(&["correlate", "--theta", "0.7", "--n", "50000", "--shards", shards, "--omit-timing"]));
        serde_json::to_string(&r["result"]).unwrap()
    };
    let one = run("1");
    for s in ["2", "4", "8"] {
        assert_eq!(run(s), one);
    }
}

#[test]
fn config_supplies_flags_and_cli_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"model": "lhv", "theta": 90, "degrees": true, "n": 40000, "seed": 12}"#).unwrap();
    let p = path.to_str().unwrap();
    let r = record(&hvbench(&["correlate", "--config", p]));
    assert_eq!(r["params"]["model"], "lhv");
    assert_eq!(r["params"]["n"], 40000);
    assert_eq!(r["params"]["theta"], std::f64::consts::FRAC_PI_2);
    let r = record(&hvbench(&["correlate", "--config", p, "--n", "1000", "--model", "tb"]));
    assert_eq!(r["params"]["n"], 1000);
    assert_eq!(r["params"]["model"], "tb");
    assert_eq!(r["seed"], 12);
    std::fs::write(&path, "not json").unwrap();
    assert_eq!(hvbench(&["correlate", "--config", p]).status.code(), Some(1));
}

#[test]
fn sweep_exports_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let r = record(&hvbench(&["correlate", "--sweep", "12", "--n", "20000", "--csv", path.to_str().unwrap()]));
    assert_eq!(r["result"]["points"].as_array().unwrap().len(), 13);
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(&headers[1], "theta");
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 13);
    let last_theta: f64 = rows[12][1].parse().unwrap();
    assert!((last_theta - std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn table_goes_to_stderr() {
    let out = hvbench(&["bounds", "--table"]);
    let r = record(&out);
    assert!((r["result"]["quantum"]["value"].as_f64().unwrap() - 2.828427).abs() < 1e-5);
    assert_eq!(r["result"]["quantum_success_percent"], 85.4);
    let table = String::from_utf8_lossy(&out.stderr);
    assert!(table.contains("PR box CHSH"));
}

#[test]
fn nested_and_hess_reports() {
    let r = record(&hvbench(&["nested", "--support", "4", "--depth", "1", "--trials", "10000"]));
    assert_eq!(r["result"]["pass"], true);
    assert!(r["result"]["pointwise"]["value"].as_f64().unwrap() <= 2.0 + 1e-9);
    let r = record(&hvbench(&["hess", "--trials", "200", "--setting-independent"]));
    assert_eq!(r["result"]["report"]["satisfied"], true);
    assert_eq!(hvbench(&["hess", "--trials", "0"]).status.code(), Some(1));
}
