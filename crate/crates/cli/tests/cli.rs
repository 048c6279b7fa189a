use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cvsteer_core::dataset::reference_gamma;
use cvsteer_core::{
    build_epr_source, criteria_report, CovarianceMatrix64, CriteriaReport64, LossFit64,
    SourceParams64,
};
use serde_json::Value;
use tempfile::TempDir;

fn cvsteer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvsteer"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn reference_state_file(dir: &TempDir) -> PathBuf {
    write(
        dir,
        "gamma.json",
        &serde_json::to_string(&reference_gamma::<f64>()).unwrap(),
    )
}

#[test]
fn simulate_defaults_to_vacuum() {
    let out = cvsteer(&["simulate"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let state: CovarianceMatrix64 = serde_json::from_slice(&out.stdout).unwrap();
    assert!(
        state
            .entries()
            .max_abs_diff(&cvsteer_core::Matrix::identity(4))
            < 1e-15
    );
    assert_eq!(stdout_json(&out)["ordering"], "x1p1x2p2");
}

#[test]
fn simulate_rejects_bad_efficiency_naming_the_field() {
    let out = cvsteer(&["simulate", "--eta-prep", "1.2"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("eta_prep"));
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", r#"{"r1": 1.0, "eta_det_b": 1.2}"#);
    let out = cvsteer(&["simulate", "--in", s(&p)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("eta_det_b"));
    let p = write(&dir, "q.json", r#"{"r1": 1.0, "bogus": 3}"#);
    assert_eq!(code(&cvsteer(&["simulate", "--in", s(&p)])), 2);
}

#[test]
fn analyze_of_simulate_matches_in_process_report() {
    let dir = TempDir::new().unwrap();
    let params = SourceParams64 {
        r1: 1.3,
        r2: 1.1,
        eta_prep: 0.93,
        eta_det_a: 0.97,
        eta_det_b: 0.95,
        dark_noise: 0.006,
        ..Default::default()
    };
    let pfile = write(
        &dir,
        "params.json",
        &serde_json::to_string(&params).unwrap(),
    );
    let state = dir.path().join("state.json");
    assert_eq!(
        code(&cvsteer(&[
            "simulate",
            "--in",
            s(&pfile),
            "--out",
            s(&state)
        ])),
        0
    );
    let out = cvsteer(&["analyze", "--in", s(&state)]);
    assert_eq!(code(&out), 0);
    let got: CriteriaReport64 = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        got,
        criteria_report(&build_epr_source(&params).unwrap()).unwrap()
    );
}

#[test]
fn analyze_reference_state() {
    let dir = TempDir::new().unwrap();
    let out = cvsteer(&["analyze", "--in", s(&reference_state_file(&dir))]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!((v["reid_b_given_a"].as_f64().unwrap() - 0.039).abs() < 1e-3);
    assert!((v["reid_a_given_b"].as_f64().unwrap() - 0.041).abs() < 1e-3);
    assert!((v["duan_sum"].as_f64().unwrap() - 0.41).abs() < 1e-2);
    let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys.len(), 11);
}

#[test]
fn analyze_with_fixed_gains() {
    let dir = TempDir::new().unwrap();
    let out = cvsteer(&[
        "analyze",
        "--in",
        s(&reference_state_file(&dir)),
        "--gains",
        "1,-1",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!((stdout_json(&out)["reid_b_given_a"].as_f64().unwrap() - 0.042).abs() < 1e-3);
    let out = cvsteer(&[
        "analyze",
        "--in",
        s(&reference_state_file(&dir)),
        "--gains",
        "optimal",
    ]);
    assert!((stdout_json(&out)["reid_b_given_a"].as_f64().unwrap() - 0.039).abs() < 1e-3);
    assert_eq!(
        code(&cvsteer(&[
            "analyze",
            "--in",
            s(&reference_state_file(&dir)),
            "--gains",
            "1"
        ])),
        2
    );
}

#[test]
fn analyze_vacuum_reports_no_steering() {
    let dir = TempDir::new().unwrap();
    let vac = write(
        &dir,
        "vac.json",
        &String::from_utf8(cvsteer(&["simulate"]).stdout).unwrap(),
    );
    let v = stdout_json(&cvsteer(&["analyze", "--in", s(&vac)]));
    assert!((v["reid_b_given_a"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["steering_b_given_a"], false);
    assert_eq!(v["duan_inseparable"], false);
}

#[test]
fn analyze_rejects_malformed_matrices() {
    let dir = TempDir::new().unwrap();
    let three = write(
        &dir,
        "3.json",
        r#"{"n_modes":1,"ordering":"x1p1x2p2","entries":[[1,0,0],[0,1,0],[0,0,1]]}"#,
    );
    let asym = write(
        &dir,
        "a.json",
        r#"{"n_modes":2,"ordering":"x1p1x2p2","entries":[[2,0,0.5,0],[0,2,0,0],[0.4,0,2,0],[0,0,0,2]]}"#,
    );
    for p in [&three, &asym] {
        let out = cvsteer(&["analyze", "--in", s(p)]);
        assert_eq!(code(&out), 2, "{}", stderr(&out));
    }
    assert!(stderr(&cvsteer(&["analyze", "--in", s(&asym)])).contains("symmetric"));
    assert_eq!(code(&cvsteer(&["analyze"])), 2);
    assert_eq!(
        code(&cvsteer(&["analyze", "--in", "/nonexistent/state.json"])),
        2
    );
}

#[test]
fn fit_then_simulate_reproduces_steering() {
    let dir = TempDir::new().unwrap();
    let fit_file = dir.path().join("fit.json");
    let out = cvsteer(&[
        "fit",
        "--in",
        s(&reference_state_file(&dir)),
        "--out",
        s(&fit_file),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let fit: LossFit64 = serde_json::from_str(&fs::read_to_string(&fit_file).unwrap()).unwrap();
    assert!((0.88..=0.96).contains(&fit.xi));
    let state = dir.path().join("fitted_state.json");
    assert_eq!(
        code(&cvsteer(&[
            "simulate",
            "--in",
            s(&fit_file),
            "--out",
            s(&state)
        ])),
        0
    );
    let v = stdout_json(&cvsteer(&["analyze", "--in", s(&state)]));
    assert_eq!(v["steering_b_given_a"], true);
}

#[test]
fn fit_of_synthetic_state_recovers_efficiency() {
    let dir = TempDir::new().unwrap();
    let state = dir.path().join("s.json");
    assert_eq!(
        code(&cvsteer(&[
            "simulate",
            "--r1",
            "1.4",
            "--r2",
            "1.0",
            "--xi",
            "0.9",
            "--out",
            s(&state)
        ])),
        0
    );
    let v = stdout_json(&cvsteer(&["fit", "--in", s(&state)]));
    assert!((v["xi"].as_f64().unwrap() - 0.9).abs() < 1e-4);
    assert_eq!(v["converged"], true);
}

#[test]
fn sample_requires_n_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let state = reference_state_file(&dir);
    assert_eq!(code(&cvsteer(&["sample", "--in", s(&state)])), 2);
    let a = cvsteer(&["sample", "--in", s(&state), "--n", "800", "--seed", "7"]);
    let b = cvsteer(&["sample", "--in", s(&state), "--n", "800", "--seed", "7"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert!((v["relative_error"].as_f64().unwrap() - 0.05).abs() < 1e-12);
    assert_eq!(v["metadata"]["seed"], 7);
}

#[test]
fn sample_csv_lists_raw_values() {
    let dir = TempDir::new().unwrap();
    let out = cvsteer(&[
        "sample",
        "--in",
        s(&reference_state_file(&dir)),
        "--n",
        "10",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "setting,value");
    assert_eq!(lines.len(), 1 + 6 * 10);
    assert!(text.contains("X_A-X_B,") && text.contains("P_A+P_B,"));
}

#[test]
fn sampled_campaign_reconstructs_close_to_source() {
    let dir = TempDir::new().unwrap();
    let ms = dir.path().join("ms.json");
    let out = cvsteer(&[
        "sample",
        "--in",
        s(&reference_state_file(&dir)),
        "--n",
        "1000000",
        "--seed",
        "3",
        "--out",
        s(&ms),
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&cvsteer(&["reconstruct", "--in", s(&ms)]));
    assert!((v["entries"][0][2].as_f64().unwrap() - 18.09).abs() < 0.2);
}

#[test]
fn reconstruct_reference_csv_row() {
    let dir = TempDir::new().unwrap();
    let csv = write(
        &dir,
        "m.csv",
        "var_xa,var_pa,var_xb,var_pb,var_x_diff,var_p_sum\n18.41,35.49,17.98,34.61,0.21,0.20\n",
    );
    let out = cvsteer(&["reconstruct", "--in", s(&csv)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = stdout_json(&out);
    let rows: Vec<Vec<f64>> = serde_json::from_value(v["entries"].clone()).unwrap();
    for (row, want) in rows.iter().zip(cvsteer_core::dataset::GAMMA) {
        for (a, b) in row.iter().zip(want) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
    assert!(v["uncertainties"]["entries"][0][2].as_f64().unwrap() > 0.0);
    assert_eq!(v["warnings"].as_array().unwrap().len(), 0);
    assert_eq!(v["n_modes"], 2);
}

#[test]
fn reconstruct_vacuum_and_inconsistent_sets() {
    let dir = TempDir::new().unwrap();
    let vac = write(
        &dir,
        "v.json",
        r#"{"var_xa":1,"var_pa":1,"var_xb":1,"var_pb":1,"var_x_diff":2,"var_p_sum":2}"#,
    );
    let v = stdout_json(&cvsteer(&["reconstruct", "--in", s(&vac)]));
    assert_eq!(v["entries"][0][2], 0.0);
    let bad = write(
        &dir,
        "b.json",
        r#"{"var_xa":2,"var_pa":1,"var_xb":2,"var_pb":1,"var_x_diff":80,"var_p_sum":2}"#,
    );
    let out = cvsteer(&["reconstruct", "--in", s(&bad)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("(0, 2)"));
    let neg = write(
        &dir,
        "n.json",
        r#"{"var_xa":-2,"var_pa":1,"var_xb":2,"var_pb":1,"var_x_diff":1,"var_p_sum":2}"#,
    );
    assert_eq!(code(&cvsteer(&["reconstruct", "--in", s(&neg)])), 2);
}

#[test]
fn repro_passes_and_is_byte_stable() {
    let a = cvsteer(&["repro"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let table = String::from_utf8(a.stdout.clone()).unwrap();
    for q in [
        "reid_b_given_a",
        "reid_a_given_b",
        "unit_gain_product",
        "duan_sum",
        "xi_fit",
        "conditional_uncertainty_ratio",
    ] {
        assert!(table.contains(q), "{q} missing");
    }
    assert!(!table.contains("FAIL"));
    assert_eq!(a.stdout, cvsteer(&["repro"]).stdout);
    let json = stdout_json(&cvsteer(&["repro", "--format", "json"]));
    assert_eq!(json["all_pass"], true);
    let csv = String::from_utf8(cvsteer(&["repro", "--format", "csv"]).stdout).unwrap();
    assert!(csv.starts_with("quantity,reference,computed,delta,rule,tolerance,pass"));
}

#[test]
fn repro_with_dark_noise_and_perturbation() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("r.json");
    let out = cvsteer(&[
        "repro",
        "--dark-noise-db",
        "22",
        "--perturb",
        "0.05",
        "--seed",
        "0",
        "--out",
        s(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let row = |name: &str| {
        rows.iter()
            .find(|r| r["quantity"].as_str().unwrap().starts_with(name))
            .unwrap()
            .clone()
    };
    assert_eq!(row("dark_noise")["pass"], true);
    assert!(row("perturbed_reid_fraction")["computed"].as_f64().unwrap() >= 0.9);
    assert_eq!(code(&cvsteer(&["repro", "--perturb", "2"])), 2);
}

#[test]
fn usage_errors_exit_with_input_code() {
    assert_eq!(code(&cvsteer(&["frobnicate"])), 2);
    assert_eq!(code(&cvsteer(&["analyze", "--format", "xml"])), 2);
}
