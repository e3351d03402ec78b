use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_incoherence"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) {
    let o = run(args, out);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn assert_manifest(out: &Path, files: &[&str]) {
    let m = json(&out.join("manifest.json"));
    let listed: Vec<&str> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    for f in files {
        assert!(listed.contains(f), "{f} missing from manifest");
        assert!(out.join(f).exists());
    }
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn coherence_fourier_haar_first_row() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("c");
    ok(&["coherence", "--n-max", "128"], &out);
    assert_manifest(
        &out,
        &["profile.csv", "profile_capped.csv", "fit.json", "plot.gp"],
    );
    let csv = std::fs::read_to_string(out.join("profile.csv")).unwrap();
    let row1: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    // ε 2^{-J} at the endpoint ε = 1/2, J = 0
    assert_eq!(row1[0], 1.0);
    assert!((row1[1] - 0.5).abs() < 1e-12);
    let fit = json(&out.join("fit.json"));
    assert_eq!(fit["manifest"], "manifest.json");
    assert!(fit["mu_block_left"]["slope"].as_f64().unwrap() < -0.5);
}

#[test]
fn coherence_legendre_slope() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "leg.json",
        r#"{"right": {"basis": "legendre"}, "n_max": 256}"#,
    );
    let out = dir.path().join("l");
    ok(&["coherence", "--config", &cfg], &out);
    let slope = json(&out.join("fit.json"))["mu_block_left"]["slope"]
        .as_f64()
        .unwrap();
    assert!((slope + 2.0 / 3.0).abs() < 0.05, "slope {slope}");
}

#[test]
fn config_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(&dir, "bad.json", r#"{"n_max": 12"#);
    let o = run(&["coherence", "--config", &bad], &dir.path().join("x"));
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let unknown = write_config(&dir, "unknown.json", r#"{"n_mx": 12}"#);
    assert_eq!(
        run(&["coherence", "--config", &unknown], &dir.path().join("x"))
            .status
            .code(),
        Some(2)
    );
    let eps = write_config(
        &dir,
        "eps.json",
        r#"{"left": {"basis": "fourier", "epsilon": 0.9}, "right": {"basis": "daubechies", "p": 4, "J": 2}}"#,
    );
    assert_eq!(
        run(&["matrix", "--config", &eps], &dir.path().join("x"))
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["isometry", "--f", "missing"], &dir.path().join("x"))
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn matrix_peak_in_top_left() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m");
    ok(&["matrix", "--M", "20", "--N", "20"], &out);
    assert_manifest(&out, &["matrix.csv", "matrix.json"]);
    let csv = std::fs::read_to_string(out.join("matrix.csv")).unwrap();
    assert_eq!(csv.lines().count(), 401);
    let arg = &json(&out.join("matrix.json"))["argmax"];
    assert!(arg[0].as_u64().unwrap() <= 2 && arg[1].as_u64().unwrap() <= 2);
}

#[test]
fn isometry_presets_and_negative_control() {
    let dir = TempDir::new().unwrap();
    for (f, g) in [
        ("harmonic", "geometric"),
        ("inverse_square", "log_harmonic"),
    ] {
        let out = dir.path().join(format!("{f}-{g}"));
        ok(&["isometry", "--f", f, "--g", g, "--horizon", "4096"], &out);
        assert_manifest(&out, &["columns.csv", "report.json"]);
        let r = json(&out.join("report.json"));
        assert_eq!(r["passed"], true);
        assert_eq!(r["negative_control"]["rejected"], true);
    }
}

#[test]
fn reconstruct_wavelet_b_is_accurate() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r");
    ok(
        &["reconstruct", "--basis", "wavelet", "--pattern", "B"],
        &out,
    );
    assert_manifest(
        &out,
        &["errors.json", "coefficients.csv", "pattern.csv", "plot.gp"],
    );
    let e = json(&out.join("errors.json"));
    assert_eq!(e["converged"], true);
    assert!(e["l1_error"].as_f64().unwrap() < 5e-2);
    let pattern = std::fs::read_to_string(out.join("pattern.csv")).unwrap();
    assert_eq!(pattern.lines().count(), 502);
    assert_eq!(pattern.lines().filter(|l| l.ends_with(",1")).count(), 251);
}

#[test]
fn non_convergence_exits_three_with_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "short.json",
        r#"{"pattern": {"pattern": "a"}, "solver": {"max_iter": 10}}"#,
    );
    let out = dir.path().join("r");
    let o = run(&["reconstruct", "--config", &cfg], &out);
    assert_eq!(o.status.code(), Some(3));
    let e = json(&out.join("errors.json"));
    assert_eq!(e["converged"], false);
    assert_eq!(e["iterations"], 10);
}

#[test]
fn artifacts_are_reproducible_across_threads() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    ok(
        &[
            "reconstruct",
            "--pattern",
            "A",
            "--seed",
            "3",
            "--threads",
            "1",
        ],
        &a,
    );
    ok(
        &[
            "reconstruct",
            "--pattern",
            "A",
            "--seed",
            "3",
            "--threads",
            "3",
        ],
        &b,
    );
    ok(&["reconstruct", "--pattern", "A", "--seed", "2"], &c);
    for f in ["coefficients.csv", "pattern.csv", "errors.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    assert_ne!(
        std::fs::read(a.join("pattern.csv")).unwrap(),
        std::fs::read(c.join("pattern.csv")).unwrap()
    );
}

#[test]
fn fliptest_modes() {
    let dir = TempDir::new().unwrap();
    for mode in ["full", "within"] {
        let out = dir.path().join(mode);
        ok(&["fliptest", "--mode", mode, "--seed", "1"], &out);
        assert_manifest(&out, &["flip.json"]);
        let r = json(&out.join("flip.json"));
        assert_eq!(r["mode"], mode);
        let ratio = r["ratio"].as_f64().unwrap();
        assert!(ratio.is_finite() && ratio > 0.0);
    }
}

#[test]
fn plan_budgets_fit_levels() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p");
    ok(&["plan"], &out);
    let p = json(&out.join("plan.json"));
    let bounds = [64u64, 192];
    for key in ["budgets", "budgets_from_bound"] {
        let m = p[key]["budgets"].as_array().unwrap();
        for (mk, w) in m.iter().zip(bounds) {
            assert!(mk.as_u64().unwrap() <= w);
        }
    }
    let table = &p["local_coherence"];
    for (er, br) in table["exact"]
        .as_array()
        .unwrap()
        .iter()
        .zip(table["bound"].as_array().unwrap())
    {
        for (e, b) in er.as_array().unwrap().iter().zip(br.as_array().unwrap()) {
            assert!(e.as_f64().unwrap() <= b.as_f64().unwrap() * (1.0 + 1e-12));
        }
    }
}
