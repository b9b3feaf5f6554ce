use std::path::Path;
use std::process::{Command, Output};

use collatz_flows::derivative::build_derivative_decomposition;
use collatz_flows::{build_coeff_table, CollatzParams};
use collatz_flows_cli::commands::{coeff_table_from_json, derivative_from_json};
use num_bigint::BigInt;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_collatz-flows"))
        .args(args)
        .env_remove("COLLATZ_FLOWS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    serde_json::from_str(&stdout(&full)).unwrap()
}

#[test]
fn even_alpha_exits_two() {
    let out = run(&["orbit", "--alpha", "4", "--beta", "1", "--n", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha must be odd"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["orbit", "--alpha", "3"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["coeffs", "--alpha", "3", "--beta", "3", "--k", "2"]).status.code(), Some(2));
    assert_eq!(run(&["coeffs", "--alpha", "3", "--beta", "1", "--k", "30"]).status.code(), Some(2));
}

#[test]
fn second_iterate_table() {
    let v = json(&["coeffs", "--alpha", "3", "--beta", "1", "--k", "2"]);
    assert_eq!(v["a"], serde_json::json!([1, 3, 3, 9]));
    assert_eq!(v["b"], serde_json::json!([0, 1, 2, 5]));
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["coeffs", "--alpha", "5", "--beta", "1", "--k", "6", "--format", "json"][..],
        &["energy", "--alpha", "7", "--beta", "3", "--k", "4", "--m", "3", "--sweep", "1..20"][..],
        &["flow", "--alpha", "3", "--beta", "1", "--init", "ones:3,7", "--t-max", "2", "--format", "json"][..],
        &["verify", "--grid", "quick", "--format", "json"][..],
    ] {
        let a = run(args);
        let b = run(args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert!(!a.stdout.is_empty());
    }
}

#[test]
fn coeff_json_round_trips() {
    for (alpha, beta) in [(1u64, 1u64), (3, 5), (7, 3)] {
        let (a, b) = (alpha.to_string(), beta.to_string());
        let v = json(&["coeffs", "--alpha", &a, "--beta", &b, "--k", "8"]);
        let parsed = coeff_table_from_json(&v).unwrap();
        let expected = build_coeff_table(CollatzParams::new(alpha, beta).unwrap(), 8).unwrap();
        assert_eq!(parsed, expected);
    }
}

#[test]
fn deriv_json_round_trips() {
    let v = json(&["deriv", "--alpha", "5", "--beta", "1", "--m", "6"]);
    let parsed = derivative_from_json(&v).unwrap();
    let expected = build_derivative_decomposition(CollatzParams::new(5, 1).unwrap(), 6).unwrap();
    assert_eq!(parsed, expected);
    assert_eq!(v["normalized_n_coeff_sum"], "1");
}

#[test]
fn big_coefficients_are_exact() {
    let seven_20 = BigInt::from(7u32).pow(20).to_string();
    let v = json(&["coeffs", "--alpha", "7", "--beta", "3", "--k", "20"]);
    let a = v["a"].as_array().unwrap();
    assert!(a.contains(&Value::String(seven_20.clone())));
    assert!(a.iter().any(|x| x.is_number()));
    for x in a {
        if let Some(n) = x.as_u64() {
            assert!(n <= 1 << 53);
        }
    }

    let csv = stdout(&["coeffs", "--alpha", "7", "--beta", "3", "--k", "20"]);
    assert!(csv.lines().any(|l| l.split(',').nth(1) == Some(seven_20.as_str())));
    assert!(!csv.contains('"'));
}

#[test]
fn energy_csv_schema() {
    let csv = stdout(&["energy", "--alpha", "5", "--beta", "1", "--n", "9", "--k", "3", "--m", "2"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,k,m,s_k,s_km,energy,pseudo_virial_num,pseudo_virial_den"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    // (1 + 5)^3 = 216; (6/4)^3 = 27/8.
    assert_eq!(row[5], "216");
    assert_eq!((row[6], row[7]), ("27", "8"));
    let s_k: i64 = row[3].parse().unwrap();
    let s_km: i64 = row[4].parse().unwrap();
    assert_eq!(s_km - s_k, 2 * 216);
}

#[test]
fn flow_initial_data_grammar() {
    let v = json(&["flow", "--alpha", "3", "--beta", "1", "--init", "list:5=1-0.5i,7=2", "--t-max", "0.5", "--t-steps", "1"]);
    let first = &v["snapshots"][0];
    assert_eq!(first["t"], 0.0);
    let amp = |n: u64| {
        first["amplitudes"].as_array().unwrap().iter().find(|a| a["frequency"] == n).cloned().unwrap()
    };
    assert_eq!((amp(5)["re"].as_f64(), amp(5)["im"].as_f64()), (Some(1.0), Some(-0.5)));
    assert_eq!(amp(7)["re"].as_f64(), Some(2.0));

    let bad = run(&["flow", "--alpha", "3", "--beta", "1", "--init", "delta:0", "--t-max", "1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn flow_schemes_agree() {
    let base = ["flow", "--alpha", "3", "--beta", "5", "--init", "ones:7,9", "--t-max", "1.5", "--t-steps", "3"];
    let norms = |scheme: &str| -> Vec<f64> {
        let mut args = base.to_vec();
        args.extend(["--scheme", scheme]);
        json(&args)["snapshots"].as_array().unwrap().iter().map(|s| s["windowed_norm"].as_f64().unwrap()).collect()
    };
    let exact = norms("closed");
    for scheme in ["rk4", "picard"] {
        for (x, y) in exact.iter().zip(norms(scheme)) {
            assert!((x - y).abs() < 1e-8, "{scheme}: {x} vs {y}");
        }
    }
}

#[test]
fn quick_suite_reports_the_known_failures() {
    let out = run(&["verify", "--grid", "quick", "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["suite_version"], "1.0.0");
    assert_eq!(v["param_grid"].as_array().unwrap().len(), 5);
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["affine_coeffs.a_independent_of_beta", "discrete_derivative.collatz_nullity"]);
    assert!(v["checks"][0].get("elapsed_ms").is_none());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("a_independent_of_beta"));

    let timed = run(&["verify", "--grid", "quick", "--timing"]);
    let header = String::from_utf8(timed.stdout).unwrap();
    assert!(header.starts_with("name,status,witness,elapsed_ms\n"));
}

#[test]
fn out_dir_environment() {
    let dir = std::env::temp_dir().join(format!("collatz-flows-cli-{}", std::process::id()));
    let bin = env!("CARGO_BIN_EXE_collatz-flows");
    let with_env = |args: &[&str]| {
        let out = Command::new(bin).args(args).env("COLLATZ_FLOWS_OUT_DIR", &dir).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };

    assert!(with_env(&["parity", "--alpha", "3", "--beta", "1", "--k", "3"]).is_empty());
    let listing = std::fs::read_to_string(dir.join("parity.csv")).unwrap();
    assert_eq!(listing.lines().count(), 9);

    with_env(&["coeffs", "--alpha", "3", "--beta", "1", "--k", "2", "--format", "json", "-o", "sub/t.json"]);
    assert!(Path::new(&dir.join("sub/t.json")).exists());

    let piped = with_env(&["coeffs", "--alpha", "3", "--beta", "1", "--k", "2", "-o", "-"]);
    assert!(String::from_utf8(piped).unwrap().starts_with("residue,a,b,alpha_exponent\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn parity_bijection_flag() {
    let v = json(&["parity", "--alpha", "7", "--beta", "3", "--k", "10", "--check-bijection"]);
    assert_eq!(v["bijection"]["bijective"], true);
    assert_eq!(v["rows"].as_array().unwrap().len(), 1024);
    let single = stdout(&["parity", "--alpha", "3", "--beta", "1", "--k", "4", "--n", "7"]);
    // 7 -> 11 -> 17 -> 26
    assert_eq!(single, "n,parity_vector,ones\n7,1110,3\n");
}

#[test]
fn negative_orbits_mirror_positive_ones() {
    let pos = json(&["orbit", "--alpha", "3", "--beta", "1", "--n", "27"]);
    let neg = json(&["orbit", "--alpha", "3", "--beta", "1", "--n", "-27"]);
    let negated: Vec<i64> = pos["values"].as_array().unwrap().iter().map(|x| -x.as_i64().unwrap()).collect();
    let neg_values: Vec<i64> = neg["values"].as_array().unwrap().iter().map(|x| x.as_i64().unwrap()).collect();
    assert_eq!(negated, neg_values);
    assert_eq!(pos["terminated_by"], "cycle_found");
}

#[test]
fn divergent_orbit_is_a_runtime_failure() {
    // Under (5, 1) the orbit of 7 grows without bound.
    let out = run(&["flow", "--alpha", "5", "--beta", "1", "--init", "delta:7", "--t-max", "1", "--max-steps", "500"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exhausted its budget"));
}
