use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SQUARE: &str = r#"{
  "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]],
  "labels": [
    {"c0": 0, "c1": 0, "c2": 1},
    {"c0": 1, "c1": -1, "c2": 0},
    {"c0": 1, "c1": 0, "c2": -1},
    {"c0": 0, "c1": 1, "c2": 0}
  ]
}"#;

fn torick(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torick"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn error_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr carries an error report")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn coeffs(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn family_lebrun_calabi_at_three_quarters() {
    let out = torick(&["family", "--id", "lebrun-calabi", "--p", "0.75"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let c = coeffs(&v["coefficients"]);
    let expected = [1.0 / 3.0, -2.0 / 9.0, 0.0];
    for (a, b) in c.iter().zip(expected) {
        assert!((a - b).abs() < 1e-15);
    }
    assert_eq!(v["positive_on_polytope"], Value::Bool(true));
    assert!(v["residual_a"].as_f64().unwrap() < 1e-7);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["seed"], 42);
}

#[test]
fn family_domain_errors_exit_two() {
    let out = torick(&["family", "--id", "lebrun-b", "--p", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "ParameterOutOfDomain");
    let out = torick(&["family", "--id", "no-such-family", "--p", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn case12_member_is_not_positive() {
    let out = torick(&["family", "--id", "fo-case12", "--p", "0.4", "--b", "1.5", "--sign", "+"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["positive_on_polytope"], Value::Bool(false));
    // b = 1 violates the discriminant inequality at p = 0.4.
    let out = torick(&["family", "--id", "fo-case12", "--p", "0.4", "--b", "1.0", "--sign", "+"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "NegativeDiscriminant");
}

#[test]
fn futaki_ono_family_reports_equipoised_sum() {
    let out = torick(&["family", "--id", "futaki-ono", "--k", "1", "--p", "0.2", "--sign", "+"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["positive_on_polytope"], Value::Bool(true));
    assert!(v["equipoised_sum"].as_f64().unwrap().abs() < 1e-10);
    assert!(v["residual_a"].as_f64().unwrap() < 1e-7);
}

#[test]
fn exploratory_futaki_ono_for_large_k() {
    let out = torick(&["family", "--id", "futaki-ono", "--k", "5", "--p", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = torick(&["family", "--id", "futaki-ono", "--k", "5", "--p", "0.1", "--exploratory"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["exploratory"], Value::Bool(true));
}

#[test]
fn zeta_on_square_is_eight() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "square.json", SQUARE);
    let out = torick(&["zeta", "--polytope", &sq, "--f", "1,0,0", "--w", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let c = coeffs(&json(&out)["coefficients"]);
    assert!((c[0] - 8.0).abs() < 1e-8 && c[1].abs() < 1e-9 && c[2].abs() < 1e-9, "{c:?}");
}

#[test]
fn twist_of_constant_weight_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "square.json", SQUARE);
    let v = json(&torick(&["twist", "--polytope", &sq, "--f", "1,0,0"]));
    assert_eq!(v["identity"], Value::Bool(true));
    assert_eq!(v["quad_type"], "Parallelogram");
    let t = coeffs(&v["translation"]);
    let verts = v["polytope"]["vertices"].as_array().unwrap();
    assert!((verts[0][0].as_f64().unwrap() + t[0]).abs() < 1e-15);
}

#[test]
fn df_of_affine_function_vanishes_and_crease_is_positive() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "square.json", SQUARE);
    let v = json(&torick(&["df", "--polytope", &sq, "--f", "1,0,0", "--phi", "0.3,-1,2"]));
    assert!(v["value"].as_f64().unwrap().abs() < 1e-9);
    let v = json(&torick(&["df", "--polytope", &sq, "--f", "1,0,0", "--crease", "-0.5,1,0"]));
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn malformed_polytope_names_the_violated_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"vertices": [[0,0],[1,0],[1,1]], "labels": [{"c0":0,"c1":0,"c2":1},{"c0":1,"c1":-1,"c2":0}]}"#,
    );
    let out = torick(&["zeta", "--polytope", &bad, "--f", "1,0,0"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = error_json(&out)["error"]["message"].as_str().unwrap().to_string();
    assert!(msg.contains("number of labels"), "{msg}");
    let out = torick(&["zeta", "--polytope", &bad, "--f", "1,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stability_of_futaki_ono_weight_is_theorem_backed() {
    let dir = tempfile::tempdir().unwrap();
    let fam = json(&torick(&["family", "--id", "futaki-ono", "--k", "1", "--p", "0.2", "--sign", "+"]));
    let c = coeffs(&fam["coefficients"]);
    let f = format!("{},{},{}", c[0], c[1], c[2]);
    let poly = torick::polytope::hirzebruch_delzant(0.2, 1).unwrap();
    let path = write(dir.path(), "dpk.json", &poly.to_json_value().to_string());
    let out = torick(&["stability", "--polytope", &path, "--f", &f, "--w", "4", "--creases", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "STABLE-BY-THEOREM");
    assert!(v["crease_min"].as_f64().unwrap() > 0.0);
    assert!(v["equipoised_sum"].as_f64().unwrap().abs() < 1e-8);
    assert_eq!(v["twist"]["quad_type"], "GenericQuadrilateral");
    assert!(!v["roots"].as_array().unwrap().is_empty());
}

#[test]
fn stability_requires_condition_a() {
    let out = torick(&["stability", "--polytope", "hirzebruch:0.5,1", "--f", "1,0,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "ConditionANotMet");
}

#[test]
fn solve_a_recovers_lebrun_b() {
    let v = json(&torick(&["solve-a", "--p", "0.95", "--starts", "200"]));
    let roots = v["roots"].as_array().unwrap();
    let matched: Vec<&str> = roots
        .iter()
        .filter(|r| r["positive_on_polytope"] == Value::Bool(true))
        .filter_map(|r| r["matched_family"]["id"].as_str())
        .collect();
    assert_eq!(matched.iter().filter(|id| **id == "lebrun-b").count(), 2, "{matched:?}");
    assert!(matched.contains(&"lebrun-calabi"));
}

#[test]
fn verify_thm2_small_grid() {
    let out = torick(&["verify", "thm2", "--k", "1", "--grid", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["total"], 10);
    assert_eq!(v["stable_by_theorem"], 10);
    for s in v["samples"].as_array().unwrap() {
        assert_eq!(s["verdict"], "STABLE-BY-THEOREM");
    }
}

#[test]
fn verify_identity_e2_and_case12() {
    let v = json(&torick(&["verify", "identity-e2"]));
    assert_eq!(v["exact_zero_count"], 7);
    let out = torick(&["verify", "case12", "--samples", "500"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["max_of_min_vertex_values"].as_f64().unwrap() < 0.0);
    assert_eq!(v["samples"], 500);
}

#[test]
fn reports_are_byte_identical_across_runs_and_threads() {
    let args = ["verify", "thm2", "--k", "2", "--grid", "4", "--creases", "20"];
    let a = torick(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_torick"))
        .args(args)
        .env("TORICK_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_output_file_and_human_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", r#"{"seed": 7, "creases": 10}"#);
    let out_path = dir.path().join("report.json");
    let out = torick(&[
        "verify",
        "identity-e2",
        "--config",
        &cfg,
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["config"]["creases"], 10);
    assert_eq!(v["config"]["tau_eq"].as_f64(), Some(1e-8));

    let bad = write(dir.path(), "bad.json", r#"{"sed": 7}"#);
    assert_eq!(torick(&["verify", "identity-e2", "--config", &bad]).status.code(), Some(2));

    let out = torick(&["family", "--id", "lebrun-calabi", "--p", "0.75", "--human"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("id ") && l.ends_with("\"lebrun-calabi\"")));
}

#[test]
fn json_keys_are_sorted() {
    let out = torick(&["verify", "identity-e2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let top: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \"") && !l.starts_with("   "))
        .map(|l| l.trim_start().split('"').nth(1).unwrap())
        .collect();
    let mut sorted = top.clone();
    sorted.sort();
    assert_eq!(top, sorted);
}
