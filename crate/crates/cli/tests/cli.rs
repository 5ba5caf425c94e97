#![allow(clippy::approx_constant)] // literal inputs mirror what a user types

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn extremal(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extremal"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn bare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extremal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json_file(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eig_sphere_band_area_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = extremal(&["eig", "--surface", "sphere-band", "--band", "-0.5236", "0.5236"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let v = json_file(&dir.path().join("eig.json"));
    assert!((v["area"].as_f64().unwrap() - 6.2832).abs() < 1e-3);
    assert_eq!(v["boundary"].as_array().unwrap().len(), 2);
    assert_eq!(v["config_digest"].as_str().unwrap().len(), 64);
    assert!(stdout(&o).contains(v["config_digest"].as_str().unwrap()));
}

#[test]
fn eig_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let o = extremal(&["eig", "--surface", "flat", "--band", "-0.7854", "0.7854", "--json"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let exact = (std::f64::consts::PI / (2.0 * 0.7854)).powi(2);
    assert!((v["lambda1"].as_f64().unwrap() - exact).abs() < 1e-8 * exact);

    let o = extremal(&["eig", "--surface", "sphere-polar", "--disk", "1.5708", "--json"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["lambda1"].as_f64().unwrap() - 2.0).abs() < 1e-4);
}

#[test]
fn invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["eig", "--surface", "torus", "--disk", "1"][..],
        &["eig", "--surface", "sphere-polar", "--disk", "4"],
        &["eig", "--surface", "sphere-band"],
        &["eig", "--band", "-0.5", "0.5", "--set", "no_such_key=1"],
        &["eig", "--bogus-flag"],
        &["verify", "unknown-id"],
        &["scan", "fk", "--r0", "1.0:0.5:0.1"],
        &["verify", "hemisphere-equality", "--grid", "0.1:0.5:0.1"],
    ] {
        let o = extremal(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {o:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn help_lists_flags() {
    let o = bare(&["index", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let h = stdout(&o);
    for flag in ["--surface", "--band", "--disk", "--kmax", "--null-tol", "--config", "--set", "--out-dir"] {
        assert!(h.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn index_verdicts_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = extremal(&["index", "--surface", "sphere-band", "--band", "-1.0", "1.0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json_file(&dir.path().join("index.json"));
    assert_eq!(v["report"]["verdict"], "unstable");
    assert!(v["report"]["morse_index"].as_u64().unwrap() >= 1);
    let csv = fs::read_to_string(dir.path().join("index.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config_digest="));
    assert!(lines.next().unwrap().starts_with("k,m,eig_1"));

    let o = extremal(&["index", "--surface", "sphere-polar", "--disk", "0.8", "--json"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["verdict"], "stable");
    assert_eq!(v["report"]["nullity"], 2);
}

#[test]
fn index_truncation_exits_3_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = extremal(&["index", "--surface", "sphere-band", "--band", "-0.2", "0.2", "--kmax", "2"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{o:?}");
    let v = json_file(&dir.path().join("index.json"));
    assert_eq!(v["conclusive"], false);
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# flat strip\nsurface = flat\nband = -0.5:0.5\nnodes = 256\nformats = json\n").unwrap();
    let o = extremal(&["eig", "--config", cfg.to_str().unwrap(), "--json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let a: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(a["nodes"], 256);
    // flag beats file
    let o = extremal(&["eig", "--config", cfg.to_str().unwrap(), "--band", "-0.4", "0.4", "--json"], dir.path());
    let b: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(b["lambda1"].as_f64().unwrap() > a["lambda1"].as_f64().unwrap());
    assert_ne!(a["config_digest"], b["config_digest"]);

    fs::write(&cfg, "surface = flat\nmystery = 3\n").unwrap();
    let o = extremal(&["eig", "--config", cfg.to_str().unwrap(), "--band", "-0.4", "0.4"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn deterministic_outputs() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    // worker count does not change the output
    let args = ["scan", "index", "--r0", "0.4:1.2:0.4", "--nodes", "256", "--set", "formats=json"];
    let a = extremal(&args[..], d1.path());
    let b = extremal(&[&args[..], &["--jobs", "1"]].concat(), d1.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    let o1 = extremal(&["eig", "--band", "-0.3", "0.9", "--json", "--set", "formats=json"], d1.path());
    let o2 = extremal(&["eig", "--band", "-0.3", "0.9", "--json", "--set", "formats=json"], d2.path());
    let (v1, v2): (serde_json::Value, serde_json::Value) =
        (serde_json::from_slice(&o1.stdout).unwrap(), serde_json::from_slice(&o2.stdout).unwrap());
    assert_eq!(v1["lambda1"], v2["lambda1"]);
}

#[test]
fn scan_csv_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let o = extremal(&["scan", "fk", "--r0", "0.05:1.5:0.05"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[1], "r0,area,lambda1,product");
    assert_eq!(lines.len(), 2 + 30);
    // area * lambda1 decreases with r0 on the sphere
    let products: Vec<f64> = lines[2..].iter().map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!(products.windows(2).all(|w| w[1] < w[0]));
    assert!(dir.path().join("scan-fk.csv").exists());

    let o = extremal(&["scan", "index", "--r0", "0.2:1.4:0.05"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().nth(1), Some("r0,index,nullity"));
    assert_eq!(out.lines().count(), 2 + 25);
}

#[test]
fn verify_grid_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = extremal(&["verify", "annulus-instability", "--grid", "0.2:1.4:0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let r = json_file(&dir.path().join("report.json"));
    assert_eq!(r["scenarios"][0]["status"], "pass");
    assert_eq!(r["scenarios"][0]["table"]["rows"].as_array().unwrap().len(), 13);
    assert!(dir.path().join("annulus-instability.csv").exists());

    // an impossible tolerance turns a pass into a verification failure
    let o = extremal(&["verify", "gauss-bonnet-selftest", "--set", "gauss_bonnet.tol=0"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}
