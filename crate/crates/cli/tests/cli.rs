use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bose3b_cli::{run, CliError, Command as Sub, Settings};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bose3b"))
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SOFT_WALL_3D: &str = "kind = \"radial-euclidean\"\ndimension = 3\n[params]\nprofile = \"wall\"\nheight = 10.0\nradius = 1.0\n";

fn strip_volatile(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("timestamp_unix_s");
            m.remove("runtime_s");
            m.values_mut().for_each(strip_volatile);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_volatile),
        _ => {}
    }
}

#[test]
fn temple_report_carries_the_exponent() {
    let out = exec(&[
        "temple", "--rho", "1e-4", "--alpha", "0.5", "--beta", "0.19",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["command"], "temple");
    assert_eq!(r["seed"], 20240601);
    assert!((r["results"]["nu"].as_f64().unwrap() - 0.07).abs() < 1e-12);
    assert_eq!(r["parameters"]["rho"], 1e-4);
    assert!(r["parameters"]["temple"]["c_err"].is_number());
}

#[test]
fn exit_codes() {
    assert_eq!(exec(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(exec(&["--help"]).status.code(), Some(0));
    assert_eq!(
        exec(&["temple", "--config", "/nonexistent/run.toml"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(exec(&["temple", "--alpha", "0.9"]).status.code(), Some(2));
    assert_eq!(
        exec(&["scatter", "--potential", "/nonexistent/v.toml"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(exec(&["scatter"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "rho = 1e-4\nbogus = 3\n");
    assert_eq!(
        exec(&["temple", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    let v = write(dir.path(), "v.toml", SOFT_WALL_3D);
    assert_eq!(
        exec(&["scatter", "--potential", v.to_str().unwrap(), "--d", "6"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn error_classes_map_to_exit_codes() {
    use bose3b_core::Error;
    assert_eq!(CliError::Config("x".into()).exit_code(), 1);
    assert_eq!(
        CliError::from(Error::Precondition("x".into())).exit_code(),
        2
    );
    assert_eq!(CliError::from(Error::Indefinite("x".into())).exit_code(), 3);
    assert_eq!(
        CliError::from(Error::InvalidInput("x".into())).exit_code(),
        1
    );
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "v.toml", SOFT_WALL_3D);
    let cfg = write(
        dir.path(),
        "run.toml",
        "potential = \"v.toml\"\nb_m = 2.0\nrho = 1e-3\nalpha = 0.5\nbeta = 0.19\nseed = 7\n",
    );
    let flags = Settings {
        config: Some(cfg),
        rho: Some(1e-4),
        ..Settings::default()
    };
    let resolved = flags.resolve().unwrap();
    assert_eq!(resolved.rho, Some(1e-4));
    assert_eq!(resolved.beta, Some(0.19));
    assert_eq!(resolved.seed(), 7);
    assert_eq!(
        resolved.potential.as_deref(),
        Some(dir.path().join("v.toml").as_path())
    );

    let r = run(Sub::Temple, &flags).unwrap();
    assert_eq!(r.seed, 7);
    assert_eq!(r.parameters["rho"], 1e-4);
    assert_eq!(r.inputs.alpha, Some(0.5));
    assert_eq!(r.parameters["b_m"], 2.0);
}

#[test]
fn reports_are_deterministic_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "v.toml", SOFT_WALL_3D);
    let args = |out: &Path| {
        vec![
            "dyson".to_string(),
            "--potential".into(),
            v.to_str().unwrap().into(),
            "--configs".into(),
            "300".into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let mut reports = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = dir.path().join(name);
        let st = bin().args(args(&out)).status().unwrap();
        assert!(st.success());
        let mut r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        strip_volatile(&mut r);
        r["inputs"]["out"] = Value::Null;
        for f in r["side_files"].as_array_mut().unwrap() {
            f["path"] = Value::Null;
        }
        reports.push(r);
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0]["results"]["no_four_body"]["stress"]["seed"], 11);
    let a = std::fs::read_to_string(dir.path().join("a.dyson.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.dyson.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweeps_write_csv_side_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let st = bin()
        .args([
            "temple",
            "--y-list",
            "1e-3,1e-4,1e-5",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(st.success());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let side = &r["side_files"][0];
    assert_eq!(side["name"], "temple_sweep");
    let csv = std::fs::read_to_string(side["path"].as_str().unwrap()).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[0].split(',').count(),
        side["columns"].as_array().unwrap().len()
    );
}

#[test]
fn scatter_reports_the_hard_core_limit() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "v.toml", SOFT_WALL_3D);
    let out = exec(&[
        "scatter",
        "--potential",
        v.to_str().unwrap(),
        "--d",
        "3",
        "--hard-core-limit",
        "true",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rel = r["results"]["hard_core"]["relative_error"]
        .as_f64()
        .unwrap();
    assert!(rel.abs() < 0.01, "{rel}");
    assert!(r["results"]["route_relative_difference"].as_f64().unwrap() < 1e-3);
}

#[test]
fn bounds_bracket_the_leading_term() {
    let out = exec(&["bounds", "--rho", "1e-3"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["results"]["lower_le_leading"], true);
    assert_eq!(r["results"]["leading_le_upper"], true);
    assert_eq!(r["parameters"]["alpha_upper"], 1.0 / 75.0);
}
