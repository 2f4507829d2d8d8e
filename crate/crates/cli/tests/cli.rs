use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

// h_c to six digits, from the independent extended-precision evaluation
const H_C_6: f64 = 0.676_570;

fn fracbin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracbin"))
        .args(args)
        .env_remove("FRACBIN_H")
        .output()
        .expect("run fracbin")
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let path = dir.join(name);
    let mut all = args.to_vec();
    let p = path.to_str().unwrap();
    all.extend(["--output", p]);
    let out = fracbin(&all);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    std::fs::read(&path).unwrap()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[test]
fn census_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["census", "--H", "0.75", "--N", "20", "--drift", "zero"];
    let a = run_to(dir.path(), "a.json", &args);
    let b = run_to(dir.path(), "b.json", &args);
    assert_eq!(a, b);
    let doc = json(&a);
    let counts = doc["result"]["per_level_counts"].as_array().unwrap();
    assert_eq!(counts.len(), 20);
    assert_eq!(counts[13], 450);
    assert_eq!(doc["config"]["N"], 20);
    assert_eq!(doc["coefficient_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn critical_parameter_matches_golden() {
    let out = fracbin(&["hc", "--tol", "1e-8"]);
    assert!(out.status.success());
    let doc = json(&out.stdout);
    let h_c = doc["result"]["h_c"].as_f64().unwrap();
    assert_eq!((h_c * 1e6).round() / 1e6, H_C_6);
    assert_eq!(doc["result"]["hurst_c"].as_f64().unwrap(), 2.0 * h_c - 0.5);
}

#[test]
fn monte_carlo_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "mc-limit",
        "--H",
        "0.8",
        "--samples",
        "1000000",
        "--seed",
        "7",
    ];
    let with = |t: &'static str| [&base[..], &["--threads", t]].concat();
    let one = run_to(dir.path(), "one.json", &with("1"));
    let again = run_to(dir.path(), "again.json", &with("1"));
    let eight = run_to(dir.path(), "eight.json", &with("8"));
    assert_eq!(one, again);
    assert_eq!(one, eight);
    let doc = json(&one);
    let e = &doc["result"]["estimate"];
    assert_eq!(e["samples"], 1_000_000);
    assert_eq!(e["seed"], 7);
    assert!(e["ci"][0].as_f64().unwrap() > 0.0);
    for key in ["p_hat", "stderr", "ci", "K", "generator", "bias_window"] {
        assert!(!e[key].is_null(), "{key}");
    }

    let level = [
        "mc-level",
        "--H",
        "0.8",
        "--N",
        "30",
        "--levels",
        "22,30",
        "--samples",
        "50000",
    ];
    let a = run_to(
        dir.path(),
        "l1.csv",
        &[&level[..], &["--threads", "1", "--format", "csv"]].concat(),
    );
    let b = run_to(
        dir.path(),
        "l8.csv",
        &[&level[..], &["--threads", "8", "--format", "csv"]].concat(),
    );
    assert_eq!(a, b);
}

#[test]
fn csv_reports_carry_config_header() {
    let out = fracbin(&["coeffs", "--H", "0.7", "--levels", "1-4", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config {"));
    assert!(lines[0].contains("\"H\":0.7"));
    assert!(lines[1].starts_with("# coefficient_hash "));
    assert_eq!(lines[2], "n,i,j_value,err");
    // levels 2..4 contribute 1 + 2 + 3 rows
    assert_eq!(lines.len(), 3 + 6);
    let g = fracbin(&[
        "coeffs", "--H", "0.7", "--levels", "1-4", "--format", "csv", "--table", "g",
    ]);
    let g = String::from_utf8(g.stdout).unwrap();
    assert_eq!(g.lines().nth(2), Some("n,g_value,err"));
    assert_eq!(g.lines().count(), 3 + 4);
}

#[test]
fn environment_overrides_defaults() {
    let out = Command::new(env!("CARGO_BIN_EXE_fracbin"))
        .args(["census", "--N", "6"])
        .env("FRACBIN_H", "0.9")
        .env("FRACBIN_DRIFT", "const:0.5")
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc = json(&out.stdout);
    assert_eq!(doc["config"]["H"], 0.9);
    assert_eq!(doc["config"]["drift"], "const:0.5");
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| fracbin(args).status.code();
    assert_eq!(code(&["census", "--H", "1.2"]), Some(2));
    assert_eq!(code(&["census", "--drift", "cubic"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(
        code(&["mc-limit", "--tail", "drop", "--samples", "10"]),
        Some(3)
    );
    assert_eq!(code(&["census", "--N", "30"]), Some(4));
    assert_eq!(
        code(&["hc", "--output", "/nonexistent-dir/out.json"]),
        Some(5)
    );
    assert_eq!(code(&["mc-level", "--N", "5", "--levels", "9"]), Some(2));
}

#[test]
fn paths_and_reach() {
    let out = fracbin(&["paths", "--H", "0.9", "--N", "10"]);
    let doc = json(&out.stdout);
    let r = &doc["result"];
    let count = r["path_count"].as_u64().unwrap();
    assert!(r["single_level_lower_bound"].as_u64().unwrap() <= count);
    assert!(count <= r["union_upper_bound"].as_u64().unwrap());

    let out = fracbin(&[
        "paths", "--H", "0.75", "--N", "8", "--sigma", "0.1", "--word", "+-+-+-+-", "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows[0], "step,price");
    assert_eq!(rows[1], "0,1.0");
    assert_eq!(rows.len(), 10);

    let out = fracbin(&[
        "reach",
        "--H",
        "0.75",
        "--prefix",
        "----",
        "--direction",
        "up",
    ]);
    let doc = json(&out.stdout);
    assert_eq!(doc["result"]["n"], 10);
    assert_eq!(doc["result"]["level"], 15);
}

#[test]
fn charfn_and_convergence() {
    let out = fracbin(&["charfn", "--H", "0.75", "--v", "0,1.5", "--fit"]);
    let doc = json(&out.stdout);
    assert_eq!(doc["result"]["values"][0]["value"], 1.0);
    let fit = &doc["result"]["decay_fit"];
    assert!(fit["relative_error"].as_f64().unwrap() <= 0.15);

    let out = fracbin(&[
        "convergence",
        "--H",
        "0.7",
        "--levels",
        "10,100",
        "--samples",
        "20000",
    ]);
    let doc = json(&out.stdout);
    let split = doc["result"]["split_variances"].as_array().unwrap();
    assert!(split[1]["var_bar"].as_f64() < split[0]["var_bar"].as_f64());
    assert_eq!(doc["result"]["exceedance"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_passes_and_detects_perturbation() {
    let out = fracbin(&["verify", "--samples", "200000"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let doc = json(&out.stdout);
    assert_eq!(doc["result"]["failed"], 0);

    let out = fracbin(&["verify", "--samples", "200000", "--perturb", "1e-6"]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&out.stdout);
    let failing: Vec<&str> = doc["result"]["properties"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["pass"] == false)
        .map(|p| p["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, vec!["golden-coefficients"]);
}
