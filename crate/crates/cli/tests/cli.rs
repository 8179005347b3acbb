use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn fixture() -> Value {
    json!({
        "schema_version": 1,
        "plant": {
            "p": {"kind": "polynomial", "coefficients": [1.0]},
            "q": {"kind": "polynomial", "coefficients": [0.0]},
            "q_c": 3.0,
            "scenario": "dirichlet_meas_neumann_reg"
        },
        "design": {"delta": 0.5, "k": [-10.4134, -11.3747, 2.31], "l": [1.4373]},
        "certify": {"n": 3}
    })
}

fn run(cmd: &str, config: &Value, dir: &Path) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, config.to_string()).unwrap();
    run_file(cmd, &path, dir)
}

fn run_file(cmd: &str, path: &Path, dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdreg"))
        .args([cmd, "--config"])
        .arg(path)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eig_report_lists_first_eigenvalue() {
    let dir = workdir("eig");
    let out = run("eig", &fixture(), &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(dir.join("eig.json"));
    let lambda1 = report["modes"][0]["lambda"].as_f64().unwrap();
    assert!((lambda1 - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-8);
    assert_eq!(report["all_bands_hold"], json!(true));
    assert_eq!(report["version"], json!(env!("CARGO_PKG_VERSION")));
    assert_eq!(report["config"]["plant"]["q_c"], json!(3.0));
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = workdir("malformed");
    let path = dir.join("bad.json");
    std::fs::write(&path, "{\n  \"schema_version\": 1,\n  \"plant\": [\n}").unwrap();
    let out = run_file("eig", &path, &dir);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "{err}");

    let mut c = fixture();
    c["design"]["gain"] = json!(1.0);
    let out = run("design", &c, &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gain"));
}

#[test]
fn resolution_guard_exits_nonzero() {
    let dir = workdir("resolution");
    let mut c = fixture();
    c["eig"] = json!({"n_max": 200, "grid_points": 101});
    let out = run("eig", &c, &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid points"));
}

#[test]
fn paper_gains_certify_at_three() {
    let dir = workdir("design_paper");
    let out = run("design", &fixture(), &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(dir.join("design.json"));
    assert_eq!(report["n0"], json!(1));
    assert_eq!(report["n"], json!(3));
    assert_eq!(report["certificate"]["feasible"], json!(true));
    assert_eq!(report["soundness"]["sound"], json!(true));
    let cauchy = report["cauchy"]["value"].as_f64().unwrap();
    assert!((cauchy - 3f64.sqrt() * 3f64.sqrt().sin()).abs() < 1e-6);
    assert!(report["tail_constants"]["alpha0"]["remainder_bound"].is_number());
    let eq = &report["equilibrium"]["state"];
    assert!((eq["y_e"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!(dir.join("equilibrium_profile.csv").exists());
}

#[test]
fn default_gains_find_small_n() {
    let dir = workdir("design_default");
    let mut c = fixture();
    c["design"] = json!({"delta": 0.5});
    c["certify"] = json!({"n_max": 10});
    let out = run("design", &c, &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(dir.join("design.json"));
    assert!(report["n"].as_u64().unwrap() <= 10);
    assert_eq!(report["gain_source"], json!("pole_placement"));
}

#[test]
fn cauchy_failure_has_its_own_exit_code() {
    let dir = workdir("cauchy");
    let mut c = fixture();
    c["plant"]["q_c"] = json!(std::f64::consts::PI.powi(2));
    c["design"] = json!({"delta": 0.5});
    let out = run("design", &c, &dir);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Cauchy"));
}

#[test]
fn infeasible_certificate_exit_code() {
    let dir = workdir("infeasible");
    let mut c = fixture();
    // poles at -1.449 and -1.5 leave almost no room under delta = 1.4
    c["design"]["delta"] = json!(1.4);
    let out = run("design", &c, &dir);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_fixture_regulates() {
    let dir = workdir("simulate");
    let out = run("simulate", &fixture(), &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_json(dir.join("metrics.json"));
    assert!(m["decay"]["steady_error"].as_f64().unwrap() <= 1e-3);
    assert!(m["decay"]["fitted_rate"].as_f64().unwrap() <= -0.45);
    assert_eq!(m["certified_decay_holds"], json!(true));
    let csv = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("t,u,xi,y_m,y_r,r,err,energy,w_1,"));
    assert!(header.ends_with("w_50,what_1,what_2,what_3"));
    assert_eq!(csv.lines().count(), 2002);
}

#[test]
fn zero_data_gives_zero_columns() {
    let dir = workdir("zero");
    let mut c = fixture();
    c["simulate"] = json!({
        "horizon": 1.0,
        "reference": {"kind": "constant", "value": 0.0},
        "z0": {"kind": "polynomial", "coefficients": [0.0]},
        "u0": 0.0
    });
    let out = run("simulate", &c, &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    for line in csv.lines().skip(1) {
        for v in line.split(',').skip(1) {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{line}");
        }
    }
    let m = read_json(dir.join("metrics.json"));
    assert_eq!(m["decay"]["skipped"], json!(true));
}

#[test]
fn too_few_modes_rejected_before_integration() {
    let dir = workdir("few_modes");
    let mut c = fixture();
    c["simulate"] = json!({"modal_order": 3});
    let out = run("simulate", &c, &dir);
    assert_eq!(out.status.code(), Some(5));
    assert!(!dir.join("trajectory.csv").exists());
}

#[test]
fn incompatible_initial_condition() {
    let dir = workdir("incompatible");
    let mut c = fixture();
    c["simulate"] = json!({"z0": {"kind": "polynomial", "coefficients": [0.0, 1.0]}});
    let out = run("simulate", &c, &dir);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn reports_are_deterministic() {
    let a = workdir("det_a");
    let b = workdir("det_b");
    for dir in [&a, &b] {
        assert!(run("design", &fixture(), dir).status.success());
    }
    let ra = std::fs::read(a.join("design.json")).unwrap();
    let rb = std::fs::read(b.join("design.json")).unwrap();
    assert!(ra == rb);
}

#[test]
fn reproduce_paper_passes() {
    let dir = workdir("reproduce");
    let out = Command::new(env!("CARGO_BIN_EXE_rdreg"))
        .args(["reproduce-paper", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "{stdout}\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.contains("PASS N0"));
    assert!(!stdout.contains("FAIL"));
    let checks = read_json(dir.join("reproduction.json"));
    assert!(checks["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"] == json!(true)));
}
