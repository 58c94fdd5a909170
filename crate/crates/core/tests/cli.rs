use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use krein_feller::cli::run;
use krein_feller::evolution::Equation;
use krein_feller::io::read_trajectory_csv;
use krein_feller::oracle::TENT_EIGENVALUE;
use serde_json::Value;

fn specs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs")
}

fn kf(args: &[&str]) -> i32 {
    run(std::iter::once("kf").chain(args.iter().copied()))
}

fn kf_spec(cmd: &str, spec: &Path, out: &Path) -> i32 {
    kf(&[
        cmd,
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn eig_half_circle_tent() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        kf_spec("eig", &specs().join("half_circle_eig.json"), d.path()),
        0
    );
    let v = json(&d.path().join("eigenbasis.json"));
    let lam = v["eigenvalues"].as_array().unwrap();
    assert_eq!(lam.len(), 1);
    assert!((lam[0].as_f64().unwrap() - TENT_EIGENVALUE).abs() <= 1e-9);
    assert_eq!(v["mass_rank"], 1);
}

#[test]
fn eig_full_circle_spectrum() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        kf_spec("eig", &specs().join("full_circle_eig.json"), d.path()),
        0
    );
    let v = json(&d.path().join("eigenbasis.json"));
    let lam: Vec<f64> = v["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(lam.len(), 2);
    assert!(lam[0].abs() <= 1e-9);
    assert!((lam[1] - 4.0 / PI).abs() <= 1e-9);
}

#[test]
fn malformed_json_exits_two_with_report() {
    let d = tempfile::tempdir().unwrap();
    let spec = write_spec(d.path(), "bad.json", "{ \"measure\": ");
    let out = d.path().join("out");
    assert_eq!(kf_spec("eig", &spec, &out), 2);
    let e = json(&out.join("error.json"));
    assert_eq!(e["kind"], "json");
    assert_eq!(e["exit_code"], 2);
}

#[test]
fn zero_steps_is_a_validation_error() {
    let d = tempfile::tempdir().unwrap();
    let spec = write_spec(
        d.path(),
        "s.json",
        r#"{"measure": {"kind": "oracle", "setting": "half_circle_dirichlet_dirac"},
            "equation": "heat",
            "initial": {"kind": "oracle", "setting": "half_circle_dirichlet_dirac"},
            "t_end": 1.0, "steps": 0}"#,
    );
    let out = d.path().join("out");
    assert_eq!(kf_spec("solve", &spec, &out), 2);
    assert_eq!(json(&out.join("error.json"))["kind"], "invalid_input");
}

#[test]
fn empty_measure_file_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("atoms.json"), "[]").unwrap();
    let spec = write_spec(
        d.path(),
        "s.json",
        r#"{"measure": {"kind": "file", "path": "atoms.json"}}"#,
    );
    assert_eq!(kf_spec("dim", &spec, &d.path().join("out")), 2);
}

#[test]
fn missing_spec_and_unknown_fields() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    assert_eq!(kf(&["solve", "--out", out.to_str().unwrap()]), 2);
    let spec = write_spec(
        d.path(),
        "s.json",
        r#"{"measure": {"kind": "dirac", "thetas": [0], "weights": [1], "x": 1}}"#,
    );
    assert_eq!(kf_spec("dim", &spec, &out), 2);
    assert_eq!(kf(&["no-such-command"]), 2);
}

#[test]
fn wave_samples_match_cosine() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        kf_spec("solve", &specs().join("wave_half_circle.json"), d.path()),
        0
    );
    let mut r = csv::Reader::from_path(d.path().join("samples.csv")).unwrap();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[0].parse().unwrap();
        let theta: f64 = rec[2].parse().unwrap();
        let re: f64 = rec[3].parse().unwrap();
        let tent = (PI - 2.0 * theta.abs()) / PI;
        let want = tent / 4.0 * (2.0 * t / PI.sqrt()).cos();
        assert!(
            (re - want).abs() <= 1e-12,
            "t={t} θ={theta}: {re} vs {want}"
        );
        assert_eq!(&rec[4], "0");
        rows += 1;
    }
    assert_eq!(rows, 5 * 33);
    let m = json(&d.path().join("manifest.json"));
    assert_eq!(
        m["sample_indices"],
        serde_json::json!([0, 40, 80, 140, 180])
    );
}

#[test]
fn sample_time_off_grid_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let mut v = json(&specs().join("wave_half_circle.json"));
    v["sample_times"] = serde_json::json!([1.0]);
    let spec = write_spec(d.path(), "s.json", &v.to_string());
    assert_eq!(kf_spec("solve", &spec, &d.path().join("out")), 2);
}

#[test]
fn heat_norm_trends() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        kf_spec("solve", &specs().join("heat_increasing.json"), d.path()),
        0
    );
    let t = read_trajectory_csv(&d.path().join("trajectory.csv")).unwrap();
    let mu: Vec<f64> = t.norms.iter().map(|n| n[0]).collect();
    assert!(mu.windows(2).all(|w| w[1] > w[0]));
    // equilibrium c/λ · φ/‖φ‖ has μ-norm c/λ
    assert!((mu.last().unwrap() - 0.75 / TENT_EIGENVALUE).abs() < 0.01);
}

#[test]
fn trajectory_csv_round_trips() {
    let d = tempfile::tempdir().unwrap();
    for (name, eq) in [
        ("wave_half_circle", Equation::Wave),
        ("heat_full_circle", Equation::Heat),
        ("schrodinger_half_circle", Equation::Schrodinger),
    ] {
        let out = d.path().join(name);
        assert_eq!(
            kf_spec("solve", &specs().join(format!("{name}.json")), &out),
            0
        );
        let m = json(&out.join("manifest.json"));
        let lam: Vec<f64> = m["eigenvalues"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        let t = read_trajectory_csv(&out.join("trajectory.csv")).unwrap();
        assert_eq!(t.velocities.is_some(), eq == Equation::Wave);
        assert!(t.norm_mismatch(eq, &lam) <= 1e-12, "{name}");
    }
}

#[test]
fn semilinear_solve_reports_iterations() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        kf_spec("solve", &specs().join("semilinear_heat.json"), d.path()),
        0
    );
    let it = json(&d.path().join("iterations.json"));
    let slices = it["slices"].as_array().unwrap();
    assert_eq!(slices.len(), 2);
    assert!(slices.iter().all(|s| s["converged"] == true));

    let mut v = json(&specs().join("semilinear_heat.json"));
    v["steps"] = serde_json::json!(201);
    let spec = write_spec(d.path(), "odd.json", &v.to_string());
    assert_eq!(kf_spec("solve", &spec, &d.path().join("odd")), 2);
}

#[test]
fn dimension_reports() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        kf_spec(
            "dim",
            &specs().join("dirac_dimension.json"),
            &d.path().join("dirac")
        ),
        0
    );
    let v = json(&d.path().join("dirac/dimension.json"));
    assert_eq!(v["slope"].as_f64().unwrap(), 0.0);
    assert_eq!(
        kf_spec(
            "dim",
            &specs().join("ifs_dimension.json"),
            &d.path().join("ifs")
        ),
        0
    );
    let v = json(&d.path().join("ifs/dimension.json"));
    assert!(v["slope"].as_f64().unwrap() > 0.2);
    assert_eq!(v["gate"], true);
    let rows = fs::read_to_string(d.path().join("ifs/dimension.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(rows, 1 + v["radii"].as_array().unwrap().len());
}

#[test]
fn verify_default_and_faulty_eigenvalue() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        kf_spec("verify", &specs().join("verify.json"), &d.path().join("ok")),
        0
    );
    let v = json(&d.path().join("ok/verify.json"));
    assert_eq!(v["all_pass"], true);
    let names: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for want in [
        "energy",
        "heat_contraction",
        "unitarity",
        "weak_residual",
        "bilipschitz",
        "gifs",
        "s_regularity",
    ] {
        assert!(names.iter().any(|n| n.contains(want)), "missing {want}");
    }

    assert_eq!(
        kf_spec(
            "verify",
            &specs().join("verify_faulty_eigenvalue.json"),
            &d.path().join("bad")
        ),
        1
    );
    let v = json(&d.path().join("bad/verify.json"));
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|n| n.starts_with("energy_conservation")));
}

#[test]
fn gifs_check_and_deleted_edge() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("ok");
    assert_eq!(kf(&["gifs-check", "--out", out.to_str().unwrap()]), 0);
    let v = json(&out.join("gifs.json"));
    assert_eq!(v["edges"], 48);
    assert_eq!(v["row_sums_exact"], true);
    assert!(v["row_sums"].as_array().unwrap().iter().all(|s| s == "1"));
    assert_eq!(v["tabulated_walk_valid"], true);
    assert_eq!(v["connectivity"]["strongly_connected"], true);

    assert_eq!(
        kf_spec(
            "gifs-check",
            &specs().join("gifs_deleted_edge.json"),
            &d.path().join("del")
        ),
        2
    );
    assert_eq!(
        json(&d.path().join("del/error.json"))["kind"],
        "invalid_input"
    );
    assert_eq!(
        kf_spec(
            "verify",
            &specs().join("gifs_deleted_edge.json"),
            &d.path().join("vdel")
        ),
        2
    );
}

#[test]
fn bilip_and_oracle_compare() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    assert_eq!(kf(&["bilip", "--out", out]), 0);
    let v = json(&d.path().join("bilip.json"));
    assert_eq!(v["bounds_hold"], true);
    assert_eq!(kf(&["oracle-compare", "--out", out]), 0);
    let v = json(&d.path().join("oracle_compare.json"));
    assert_eq!(v["all_pass"], true);
}

#[test]
fn binary_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_kf");
    let ok = Command::new(bin)
        .args(["eig", "--spec"])
        .arg(specs().join("half_circle_eig.json"))
        .arg("--out")
        .arg(d.path())
        .status()
        .unwrap();
    assert_eq!(ok.code(), Some(0));
    let bad = Command::new(bin)
        .args(["eig", "--spec"])
        .arg(d.path().join("missing.json"))
        .arg("--out")
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(json(&d.path().join("error.json"))["kind"], "io");
}
